"""Classical alignment baselines: random search, spiral search and the
calibrated direct move.

Contact is geometric rather than force-based: "pressing against the
surface" becomes motion constrained to the surface plane, and the
force-limit success signal becomes the peg tip entering the disc of radius
``clearance`` around the hole axis. The spiral is an exact Archimedean
spiral r = (pitch / 2 pi) * theta centered on the search start; hits are
located analytically (no time-step can hop over the success disc) and the
clock advances by arc length / speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import HoleScenario, plane_basis, sample_disc
from .world import (
    MotionModel,
    TrialResult,
    WorldState,
    advance_along,
    attempt_insertion,
    contact_query,
    planar_offset,
    wait,
)


@dataclass(frozen=True)
class SpiralParams:
    pitch: float  # radial growth per revolution, meters
    speed: float = 0.01  # path speed, meters/second
    press_force_threshold: float = 0.0  # force-model placeholder; geometric contact here

    def __post_init__(self):
        if self.pitch <= 0 or self.speed <= 0:
            raise ValueError("pitch and speed must be positive")


@dataclass(frozen=True)
class RandomSearchParams:
    time_limit: float = 60.0
    descent_depth: float = 0.002  # below-surface travel that counts as "hole found"
    travel_speed: float = 0.05
    probe_time: float = 0.5  # fixed cost of one failed insertion attempt

    def __post_init__(self):
        if self.time_limit <= 0:
            raise ValueError("time limit must be positive")
        if self.travel_speed <= 0 or self.probe_time < 0 or self.descent_depth <= 0:
            raise ValueError("invalid random-search parameters")


def default_spiral_params(scenario: HoleScenario, pitch_factor: float = 1.5,
                          speed: float = 0.01) -> SpiralParams:
    """Pitch scaled to the scenario clearance; 1.5x by default."""
    return SpiralParams(pitch=pitch_factor * scenario.clearance, speed=speed)


# ---------------------------------------------------------------------------
# spiral geometry


def spiral_arc_length(a: float, theta: float) -> float:
    """Arc length of r = a * theta from 0 to theta."""
    return 0.5 * a * (theta * math.sqrt(1.0 + theta * theta) + math.asinh(theta))


def _spiral_hit_angle(a: float, r0: float, beta: float, clearance: float,
                      theta_end: float) -> float | None:
    """First theta in [0, theta_end] where the spiral point (a*theta; theta)
    comes within ``clearance`` of the target at polar (r0, beta).

    Hits require the spiral radius within +-clearance of r0 (since
    distance >= |a*theta - r0|), and near-alignment of the polar angle, so
    only the revolutions whose alignment angle beta + 2 pi k falls in that
    radial window need scanning. The exact alignment angle (distance
    |a*theta_k - r0|) is always part of the scan grid, which makes the
    ring-spacing coverage argument exact: pitch <= 2 * clearance implies
    some ring radius within clearance of r0.
    """
    if r0 <= clearance:
        return 0.0
    theta_lo = (r0 - clearance) / a
    theta_hi = min((r0 + clearance) / a, theta_end)
    if theta_lo > theta_hi:
        return None

    def dist_sq(theta):
        r = a * theta
        return r * r + r0 * r0 - 2.0 * r * r0 * np.cos(theta - beta)

    c_sq = clearance * clearance
    r_lo = r0 - clearance
    k_min = max(0, math.ceil((theta_lo - beta - math.pi) / (2.0 * math.pi)))
    k_max = math.floor((theta_hi - beta + math.pi) / (2.0 * math.pi))
    for k in range(k_min, k_max + 1):
        theta_k = beta + 2.0 * math.pi * k
        # transverse bound: 2 r_lo r0 (1 - cos phi) <= clearance^2
        arg = 1.0 - c_sq / (2.0 * r_lo * r0)
        phi_max = math.pi if arg <= -1.0 else math.acos(max(arg, -1.0))
        grid = theta_k + np.linspace(-phi_max, phi_max, 401)
        grid = np.unique(np.clip(np.append(grid, theta_k), 0.0, theta_end))
        hits = dist_sq(grid) <= c_sq
        if not hits.any():
            continue
        j = int(np.argmax(hits))
        if j == 0:
            return float(grid[0])
        lo, hi = float(grid[j - 1]), float(grid[j])
        for _ in range(60):  # bisect the crossing
            mid = 0.5 * (lo + hi)
            if dist_sq(mid) <= c_sq:
                hi = mid
            else:
                lo = mid
        return hi
    return None


def spiral_search(world: WorldState, scenario: HoleScenario, params: SpiralParams,
                  motion: MotionModel = MotionModel()) -> TrialResult:
    """Outward Archimedean sweep on the surface from the current position;
    success when the tip enters the success disc, failure when the spiral
    radius exceeds the uncertainty radius."""
    t0 = world.clock
    l = scenario.insertion_direction
    e1, e2 = plane_basis(l)

    info = contact_query(world)
    if info.height_above_surface > 1e-12:
        advance_along(world, info.height_above_surface * l, params.speed)

    # target (hole axis) relative to the spiral center, in the surface plane
    t_vec = -planar_offset(scenario, world.tip_position())
    r0 = float(np.linalg.norm(t_vec))
    beta = math.atan2(float(np.dot(t_vec, e2)), float(np.dot(t_vec, e1)))
    a = params.pitch / (2.0 * math.pi)
    # sweep up to one pitch past the boundary so a start near the rim still
    # gets a ring on both sides of its radius
    theta_end = (scenario.uncertainty_radius + params.pitch) / a

    def spiral_displacement(theta):
        r = a * theta
        return r * math.cos(theta) * e1 + r * math.sin(theta) * e2

    theta_hit = _spiral_hit_angle(a, r0, beta, scenario.clearance, theta_end)
    if theta_hit is None:
        advance_along(world, spiral_displacement(theta_end), params.speed,
                      path_length=spiral_arc_length(a, theta_end))
        return TrialResult("spiral", False, world.clock - t0, 0.0, "boundary_exceeded")

    advance_along(world, spiral_displacement(theta_hit), params.speed,
                  path_length=spiral_arc_length(a, theta_hit))
    depth, _ = attempt_insertion(world, scenario.required_depth, motion)
    success = depth >= scenario.required_depth
    return TrialResult("spiral", success, world.clock - t0, depth,
                       "inserted" if success else "misaligned")


def random_search(world: WorldState, scenario: HoleScenario, params: RandomSearchParams,
                  rng: np.random.Generator,
                  motion: MotionModel = MotionModel()) -> TrialResult:
    """Sample insertion points uniformly over the uncertainty disc until the
    peg drops below the surface or the time limit expires. Each failed
    attempt costs the travel time plus a fixed probe time."""
    t0 = world.clock
    l = scenario.insertion_direction
    e1, e2 = plane_basis(l)
    while world.clock - t0 < params.time_limit:
        xy = sample_disc(scenario.uncertainty_radius, rng)
        sample_vec = xy[0] * e1 + xy[1] * e2
        # the robot believes tip == TCP, so it commands the TCP planar there
        delta = sample_vec - planar_offset(scenario, world.tcp_position())
        advance_along(world, delta, params.travel_speed)
        if contact_query(world).over_hole:
            depth, _ = attempt_insertion(world, scenario.required_depth, motion)
            success = depth >= scenario.required_depth
            return TrialResult("random", success, world.clock - t0, depth,
                               "inserted" if success else "misaligned")
        wait(world, params.probe_time)
    return TrialResult("random", False, world.clock - t0, 0.0, "timed_out")


def optimal_align(world: WorldState, scenario: HoleScenario,
                  motion: MotionModel = MotionModel()) -> TrialResult:
    """Direct move to the calibration-believed hole position followed by a
    descent; no feedback, so residual grasp error decides success."""
    t0 = world.clock
    delta = -planar_offset(scenario, world.tcp_position())
    advance_along(world, delta, motion.max_speed)
    depth, _ = attempt_insertion(world, scenario.required_depth, motion)
    success = depth >= scenario.required_depth
    return TrialResult("optimal", success, world.clock - t0, depth,
                       "inserted" if success else "misaligned")
