"""Hole/peg scenario definitions and randomized scene sampling.

The hole frame has its origin at the hole center with z out of the surface.
The insertion direction ``l`` points into the hole (for an upright hole,
(0, 0, -1)), so a peg hovering above the surface sits at
``hole_center - height * l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    RigidTransform,
    matrix_to_quat,
    quat_from_axis_angle,
    quat_multiply,
    random_unit_vector,
)

WORLD_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class HoleScenario:
    name: str
    hole_diameter: float
    peg_diameter: float
    hole_pose: RigidTransform = field(default_factory=RigidTransform.identity)
    insertion_direction: np.ndarray | None = None
    uncertainty_radius: float = 0.015
    surface_extent: float = 0.05
    required_depth: float = 0.010

    def __post_init__(self):
        if self.peg_diameter >= self.hole_diameter:
            raise ValueError("peg must be smaller than the hole")
        l = self.insertion_direction
        if l is None:
            # straight into the hole: opposite the surface normal
            l = -self.hole_pose.rotate(WORLD_UP)
        l = np.asarray(l, dtype=float).reshape(3)
        if abs(np.linalg.norm(l) - 1.0) > 1e-9:
            raise ValueError("insertion direction must be a unit vector")
        l.setflags(write=False)
        object.__setattr__(self, "insertion_direction", l)
        if self.uncertainty_radius <= self.clearance:
            raise ValueError("uncertainty radius must exceed the clearance")
        if self.surface_extent <= 0 or self.required_depth <= 0:
            raise ValueError("surface extent and required depth must be positive")

    @property
    def clearance(self) -> float:
        return 0.5 * (self.hole_diameter - self.peg_diameter)

    def hole_center(self) -> np.ndarray:
        return self.hole_pose.translation

    def surface_normal(self) -> np.ndarray:
        return self.hole_pose.rotate(WORLD_UP)


def builtin_scenarios() -> list[HoleScenario]:
    """The four desk scenarios.

    metal uses the mid-tolerance H7/h7 fit for a 10 mm shaft: hole
    10.015 mm, peg 9.9925 mm, clearance 11.25 um. The 3D-printed holes
    measure 10.6 mm (plastic) and 10.4 mm (wide) for a 10 mm peg, and the
    cap hole is 4.4 mm with a 3.9 mm bolt. The uncertainty radius is
    1.5x the peg diameter; required insertion depth is 10 mm (5 mm cap).
    """
    def make(name, hole_d, peg_d, required_depth=0.010):
        return HoleScenario(
            name=name,
            hole_diameter=hole_d,
            peg_diameter=peg_d,
            uncertainty_radius=1.5 * peg_d,
            required_depth=required_depth,
        )

    return [
        make("metal", 0.010015, 0.0099925),
        make("plastic", 0.0106, 0.010),
        make("wide", 0.0104, 0.010),
        make("cap", 0.0044, 0.0039, required_depth=0.005),
    ]


def scenario_by_name(name: str) -> HoleScenario:
    for s in builtin_scenarios():
        if s.name == name:
            return s
    known = ", ".join(s.name for s in builtin_scenarios())
    raise KeyError(f"unknown scenario {name!r} (known: {known})")


@dataclass(frozen=True)
class CameraSamplingRanges:
    """Uniform sampling intervals for camera placement around a look-at point.

    Elevation is the angle between the hole plane and the optical axis;
    roll is about the optical axis. Azimuth is always uniform over the
    full circle.
    """

    distance: tuple[float, float] = (0.12, 0.15)
    elevation_deg: tuple[float, float] = (35.0, 45.0)
    roll_deg: tuple[float, float] = (-5.0, 5.0)

    def __post_init__(self):
        for lo, hi in (self.distance, self.elevation_deg, self.roll_deg):
            if lo > hi:
                raise ValueError("interval lower bound exceeds upper bound")
        if self.distance[0] <= 0:
            raise ValueError("distance must be positive")


@dataclass(frozen=True)
class StartSamplingRanges:
    """Peg start pose sampling: uniform disc, height above the surface and
    bounded orientation error."""

    disc_radius: float = 0.015
    height: tuple[float, float] = (0.005, 0.015)
    orientation_error_max_deg: float = 2.0

    def __post_init__(self):
        if self.disc_radius < 0:
            raise ValueError("disc radius must be non-negative")
        if self.height[0] > self.height[1]:
            raise ValueError("height interval lower bound exceeds upper bound")
        if self.orientation_error_max_deg < 0:
            raise ValueError("orientation error bound must be non-negative")


def default_start_ranges(scenario: HoleScenario) -> StartSamplingRanges:
    """Start disc of diameter 3x the peg diameter; height 5-15 mm above the
    hole (3-5 mm for cap); orientation error up to 2 degrees."""
    height = (0.003, 0.005) if scenario.name == "cap" else (0.005, 0.015)
    return StartSamplingRanges(disc_radius=scenario.uncertainty_radius, height=height)


def plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two orthonormal vectors spanning the plane perpendicular to ``normal``."""
    n = np.asarray(normal, dtype=float)
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(n)))] = 1.0
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    e2 /= np.linalg.norm(e2)
    return e1, e2


def sample_disc(radius: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Area-uniform samples from a disc: r = R*sqrt(U), theta = 2*pi*V.

    Returns shape (2,) for size=None, else (size, 2).
    """
    n = 1 if size is None else size
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, size=n))
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)
    return pts[0] if size is None else pts


def look_at_pose(position: np.ndarray, target: np.ndarray, roll: float = 0.0) -> RigidTransform:
    """Camera-from-world pose for a camera at ``position`` whose optical axis
    passes through ``target``, rolled by ``roll`` about the axis."""
    position = np.asarray(position, dtype=float)
    forward = np.asarray(target, dtype=float) - position
    dist = np.linalg.norm(forward)
    if dist < 1e-12:
        raise ValueError("camera position coincides with the look-at target")
    forward = forward / dist
    right = np.cross(forward, WORLD_UP)
    if np.linalg.norm(right) < 1e-9:
        # looking straight up/down: any horizontal right axis will do
        right = np.cross(forward, np.array([1.0, 0.0, 0.0]))
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    c, s = math.cos(roll), math.sin(roll)
    right_r = c * right + s * down
    down_r = c * down - s * right
    r_cw = np.stack([right_r, down_r, forward])  # rows: camera axes in world
    q = matrix_to_quat(r_cw)
    return RigidTransform(q, -r_cw @ position)


def sample_camera_pose(ranges: CameraSamplingRanges, look_at, rng: np.random.Generator,
                       azimuth: float | None = None) -> RigidTransform:
    """Camera pose with uniform distance/elevation/roll and free azimuth.

    Pass ``azimuth`` (radians) to place a camera of a multi-camera rig at a
    fixed bearing; by default it is drawn uniformly over the full circle.
    """
    look_at = np.asarray(look_at, dtype=float)
    distance = rng.uniform(*ranges.distance)
    elevation = math.radians(rng.uniform(*ranges.elevation_deg))
    roll = math.radians(rng.uniform(*ranges.roll_deg))
    if azimuth is None:
        azimuth = rng.uniform(0.0, 2.0 * math.pi)
    offset = np.array([
        math.cos(elevation) * math.cos(azimuth),
        math.cos(elevation) * math.sin(azimuth),
        math.sin(elevation),
    ])
    return look_at_pose(look_at + distance * offset, look_at, roll)


def sample_peg_start(scenario: HoleScenario, ranges: StartSamplingRanges,
                     rng: np.random.Generator) -> RigidTransform:
    """World pose of the peg tip at the start of a trial.

    Position: uniform over a disc perpendicular to the insertion direction
    through the hole center, lifted above the surface by a uniform height.
    Orientation: error axis uniform on the sphere, angle uniform in
    [0, orientation_error_max_deg], relative to the hole-aligned pose.
    """
    l = scenario.insertion_direction
    e1, e2 = plane_basis(l)
    xy = sample_disc(ranges.disc_radius, rng)
    height = rng.uniform(*ranges.height)
    position = scenario.hole_center() + xy[0] * e1 + xy[1] * e2 - height * l
    axis = random_unit_vector(rng)
    angle = rng.uniform(0.0, math.radians(ranges.orientation_error_max_deg))
    dq = quat_from_axis_angle(axis, angle)
    rotation = quat_multiply(dq, scenario.hole_pose.rotation)
    return RigidTransform(rotation, position)
