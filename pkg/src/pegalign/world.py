"""Ground-truth kinematic world: peg, hole, cameras and the simulated clock.

The robot commands the TCP (tool center point). The physical peg tip is
offset from the TCP by a grasp error transform that controllers never see:
``tip_pose = tcp_pose ∘ grasp_offset``. Cameras exist twice: the true
extrinsics that generate observations and the believed extrinsics used by
controllers, differing by the injected calibration error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    DEFAULT_INTRINSICS,
    CameraIntrinsics,
    CameraModel,
    RigidTransform,
    perturb_extrinsics,
    quat_from_axis_angle,
    random_unit_vector,
)
from .scene import (
    CameraSamplingRanges,
    HoleScenario,
    StartSamplingRanges,
    default_start_ranges,
    sample_camera_pose,
    sample_peg_start,
)

#: Largest peg-hole axis misalignment that still inserts; chosen above the
#: 2 degree orientation errors sampled in the experiments so that compliant
#: insertion succeeds whenever the position is aligned.
INSERTION_ANGLE_LIMIT_DEG = 3.0


@dataclass(frozen=True)
class MotionModel:
    max_speed: float = 0.05
    dt: float = 1.0 / 30.0

    def __post_init__(self):
        if self.max_speed <= 0 or self.dt <= 0:
            raise ValueError("max_speed and dt must be positive")


@dataclass(frozen=True)
class PerturbBounds:
    """Bounded random pose error: rotation angle and translation norm."""

    max_rot_deg: float
    max_trans: float

    def __post_init__(self):
        if self.max_rot_deg < 0 or self.max_trans < 0:
            raise ValueError("bounds must be non-negative")


DEFAULT_CALIB_BOUNDS = PerturbBounds(max_rot_deg=2.0, max_trans=0.010)
DEFAULT_GRASP_BOUNDS = PerturbBounds(max_rot_deg=1.0, max_trans=0.001)


@dataclass(frozen=True)
class TrialResult:
    method: str
    success: bool
    elapsed: float
    insertion_depth: float
    outcome_detail: str = ""


@dataclass
class ContactInfo:
    height_above_surface: float
    over_hole: bool
    planar_error: float


@dataclass
class WorldState:
    scenario: HoleScenario
    true_peg_pose: RigidTransform  # TCP pose
    grasp_offset: RigidTransform  # TCP-to-tip error, unknown to controllers
    true_cameras: list[CameraModel]
    believed_cameras: list[CameraModel]
    clock: float = 0.0

    def __post_init__(self):
        if len(self.true_cameras) != len(self.believed_cameras):
            raise ValueError("true and believed camera lists must have equal length")

    def tcp_position(self) -> np.ndarray:
        return self.true_peg_pose.translation

    def tip_pose(self) -> RigidTransform:
        return self.true_peg_pose.compose(self.grasp_offset)

    def tip_position(self) -> np.ndarray:
        return self.true_peg_pose.apply(self.grasp_offset.translation)


def _sample_bounded_transform(bounds: PerturbBounds, rng: np.random.Generator) -> RigidTransform:
    axis = random_unit_vector(rng)
    angle = rng.uniform(0.0, math.radians(bounds.max_rot_deg))
    direction = random_unit_vector(rng)
    magnitude = rng.uniform(0.0, bounds.max_trans)
    return RigidTransform(quat_from_axis_angle(axis, angle), magnitude * direction)


def make_world(scenario: HoleScenario, seed: int,
               calib_bounds: PerturbBounds = DEFAULT_CALIB_BOUNDS,
               grasp_bounds: PerturbBounds = DEFAULT_GRASP_BOUNDS,
               camera_ranges: CameraSamplingRanges = CameraSamplingRanges(),
               start_ranges: StartSamplingRanges | None = None,
               n_cameras: int = 2,
               intrinsics: CameraIntrinsics = DEFAULT_INTRINSICS) -> WorldState:
    """Seeded world: true cameras looking at the hole, believed cameras with
    injected extrinsic error, a sampled grasp offset and a sampled peg start."""
    if n_cameras < 1:
        raise ValueError("need at least one camera")
    rng = np.random.default_rng(seed)
    if start_ranges is None:
        start_ranges = default_start_ranges(scenario)
    look_at = scenario.hole_center()
    # camera-rig layout: a shared random base azimuth with the cameras spread
    # evenly over a half circle, so no two constraint directions u_i = v_i x l
    # ever become near-parallel (opposite cameras would constrain the same
    # line). Each camera's azimuth is still uniform on the circle marginally.
    base_azimuth = rng.uniform(0.0, 2.0 * math.pi)
    true_cameras = [
        CameraModel(intrinsics,
                    sample_camera_pose(camera_ranges, look_at, rng,
                                       azimuth=base_azimuth + math.pi * i / n_cameras))
        for i in range(n_cameras)
    ]
    believed_cameras = [perturb_extrinsics(c, calib_bounds.max_rot_deg, calib_bounds.max_trans, rng)
                        for c in true_cameras]
    grasp_offset = _sample_bounded_transform(grasp_bounds, rng)
    tip_start = sample_peg_start(scenario, start_ranges, rng)
    tcp_start = tip_start.compose(grasp_offset.inverse())
    return WorldState(
        scenario=scenario,
        true_peg_pose=tcp_start,
        grasp_offset=grasp_offset,
        true_cameras=true_cameras,
        believed_cameras=believed_cameras,
    )


def step_toward(world: WorldState, target, motion: MotionModel) -> None:
    """Move the TCP toward ``target`` by at most max_speed * dt; the clock
    advances by dt regardless of the distance covered."""
    target = np.asarray(target, dtype=float)
    q = world.true_peg_pose.translation
    delta = target - q
    dist = float(np.linalg.norm(delta))
    step = motion.max_speed * motion.dt
    if dist > step:
        delta = delta * (step / dist)
    world.true_peg_pose = RigidTransform(world.true_peg_pose.rotation, q + delta)
    world.clock += motion.dt


def advance_along(world: WorldState, displacement, speed: float,
                  path_length: float | None = None) -> None:
    """Move the TCP by ``displacement`` along a continuous path of the given
    length (straight-line by default), advancing the clock by length/speed."""
    if speed <= 0:
        raise ValueError("speed must be positive")
    displacement = np.asarray(displacement, dtype=float)
    chord = float(np.linalg.norm(displacement))
    length = chord if path_length is None else float(path_length)
    if length + 1e-12 < chord:
        raise ValueError("path length cannot be shorter than the displacement")
    world.true_peg_pose = RigidTransform(world.true_peg_pose.rotation,
                                         world.true_peg_pose.translation + displacement)
    world.clock += length / speed


def wait(world: WorldState, duration: float) -> None:
    """Advance the clock without moving (probe/settle time)."""
    if duration < 0:
        raise ValueError("duration must be non-negative")
    world.clock += duration


def planar_offset(scenario: HoleScenario, point) -> np.ndarray:
    """Component of (point - hole center) perpendicular to the insertion
    direction."""
    l = scenario.insertion_direction
    d = np.asarray(point, dtype=float) - scenario.hole_center()
    return d - np.dot(d, l) * l


def contact_query(world: WorldState) -> ContactInfo:
    """Height of the true peg tip above the surface plane and its planar
    distance to the hole axis. over_hole uses a closed boundary (with a
    float-rounding allowance well below any physical tolerance)."""
    s = world.scenario
    tip = world.tip_position()
    d = tip - s.hole_center()
    height = float(np.dot(d, s.surface_normal()))
    planar_error = float(np.linalg.norm(planar_offset(s, tip)))
    return ContactInfo(height, planar_error <= s.clearance + 1e-12, planar_error)


def orientation_error_deg(world: WorldState) -> float:
    """Angle between the physical peg axis and the hole axis, degrees."""
    s = world.scenario
    peg_axis = world.tip_pose().rotate(np.array([0.0, 0.0, 1.0]))
    hole_axis = s.surface_normal()
    c = float(np.clip(np.dot(peg_axis, hole_axis), -1.0, 1.0))
    return math.degrees(math.acos(c))


def attempt_insertion(world: WorldState, required_depth: float, motion: MotionModel) -> tuple[float, float]:
    """Descend along the insertion direction. Reaches ``required_depth``
    below the surface when the tip is over the hole and the axis
    misalignment is within the insertion limit, otherwise stops at the
    surface. Returns (depth_reached, elapsed)."""
    s = world.scenario
    start_clock = world.clock
    info = contact_query(world)
    inserts = info.over_hole and orientation_error_deg(world) <= INSERTION_ANGLE_LIMIT_DEG
    travel = max(info.height_above_surface, 0.0) + (required_depth if inserts else 0.0)
    if travel > 0:
        target = world.tcp_position() + travel * s.insertion_direction
        steps = math.ceil(travel / (motion.max_speed * motion.dt) - 1e-12)
        for _ in range(steps):
            step_toward(world, target, motion)
    depth = required_depth if inserts else 0.0
    return depth, world.clock - start_clock
