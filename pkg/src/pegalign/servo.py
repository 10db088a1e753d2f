"""Continuous visual-servo positional alignment.

Each camera view constrains the peg-robot error only along the direction
u_i = (v_i x l) / |v_i x l| perpendicular to both the view direction v_i
and the insertion direction l: a camera cannot observe displacement along
its own view ray, and the robot only moves in the plane perpendicular to
l. Stacking one constraint row per camera and solving by least squares
recovers the planar error vector, which is tracked through exponential
moving averages of the target position, the error vector and the error
magnitude until the filtered magnitude drops below the convergence
threshold.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .estimator import EstimatePair, PointEstimator
from .geometry import BehindCameraError, CameraModel, backproject_at_depth, cross3
from .world import MotionModel, WorldState, contact_query, step_toward

DEFAULT_ALPHA = 0.9
PHI_T_DIAMETER_FRACTION = 20.0  # phi_t = hole diameter / 20


class DegenerateViewError(ValueError):
    """View direction (nearly) parallel to the insertion direction."""


class EstimationStarvedError(RuntimeError):
    """No camera produced a usable constraint for too many consecutive frames."""


@dataclass(frozen=True)
class ServoConfig:
    insertion_direction: np.ndarray
    depths: tuple[float, ...]
    phi_t: float
    alpha_tau: float = DEFAULT_ALPHA
    alpha_gamma: float = DEFAULT_ALPHA
    alpha_phi: float = DEFAULT_ALPHA
    loop_dt: float = 1.0 / 30.0
    max_duration: float = 10.0

    def __post_init__(self):
        l = np.asarray(self.insertion_direction, dtype=float).reshape(3)
        if abs(np.linalg.norm(l) - 1.0) > 1e-9:
            raise ValueError("insertion direction must be a unit vector")
        l.setflags(write=False)
        object.__setattr__(self, "insertion_direction", l)
        object.__setattr__(self, "depths", tuple(float(z) for z in self.depths))
        if any(z <= 0 for z in self.depths):
            raise ValueError("depths must be positive")
        for a in (self.alpha_tau, self.alpha_gamma, self.alpha_phi):
            if not (0 <= a < 1):
                raise ValueError("filter coefficients must be in [0, 1)")
        if self.phi_t <= 0 or self.loop_dt <= 0 or self.max_duration <= 0:
            raise ValueError("phi_t, loop_dt and max_duration must be positive")


@dataclass(frozen=True)
class ServoState:
    """Filtered target position tau, filtered error vector gamma (absent
    before the first update) and filtered error magnitude phi."""

    tau: np.ndarray
    gamma: np.ndarray | None
    phi: float

    def __post_init__(self):
        if self.phi < 0:
            raise ValueError("phi must be non-negative")
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=float).reshape(3))

    @staticmethod
    def initial(peg_position, phi_t: float) -> "ServoState":
        return ServoState(tau=np.asarray(peg_position, dtype=float), gamma=None, phi=10.0 * phi_t)


@dataclass(frozen=True)
class ViewConstraint:
    u: np.ndarray  # unit constraint direction, perpendicular to l
    b: float  # signed error component along u
    camera_index: int = 0


@dataclass
class ServoOutcome:
    status: str  # converged | timed_out | boundary_exceeded
    final_planar_error: float
    elapsed: float
    iterations: int
    trace: list[tuple[float, np.ndarray, np.ndarray]]  # (time, tip position, e_hat)


def compute_view_constraint(believed_camera: CameraModel, estimates: EstimatePair, z: float,
                            l, camera_index: int = 0) -> ViewConstraint:
    """One camera's constraint row: backproject both pixel estimates at the
    camera's depth estimate and measure the error component along
    u = (v x l)/|v x l|."""
    if not (estimates.peg_detected and estimates.hole_detected):
        raise ValueError("both peg and hole must be detected")
    l = np.asarray(l, dtype=float)
    p = backproject_at_depth(believed_camera, estimates.peg, z)
    h = backproject_at_depth(believed_camera, estimates.hole, z)
    c = believed_camera.position()
    v = 0.5 * (p + h) - c
    cross = cross3(v, l)
    norm = float(np.linalg.norm(cross))
    if norm <= 1e-9 * float(np.linalg.norm(v)):
        raise DegenerateViewError("view direction is parallel to the insertion direction")
    u = cross / norm
    return ViewConstraint(u=u, b=float(np.dot(u, h - p)), camera_index=camera_index)


def solve_error(constraints: list[ViewConstraint]) -> np.ndarray:
    """Minimum-norm least-squares solution of the stacked constraint system.

    Singular values below 1e-9 of the largest are treated as zero, so the
    2-camera case yields the solution inside the plane spanned by the u_i
    (perpendicular to l)."""
    if not constraints:
        raise ValueError("need at least one view constraint")
    a = np.stack([c.u for c in constraints])
    b = np.array([c.b for c in constraints])
    return np.linalg.pinv(a, rcond=1e-9) @ b


def servo_step(state: ServoState, e_hat, q, config: ServoConfig) -> tuple[ServoState, np.ndarray]:
    """One filter update: t = q + e_hat, then EMA updates of tau, gamma and
    phi. Returns the new state and the commanded target tau."""
    e_hat = np.asarray(e_hat, dtype=float)
    q = np.asarray(q, dtype=float)
    t = q + e_hat
    tau = config.alpha_tau * state.tau + (1.0 - config.alpha_tau) * t
    if state.gamma is None:
        gamma = e_hat.copy()
    else:
        gamma = config.alpha_gamma * state.gamma + (1.0 - config.alpha_gamma) * e_hat
    phi = config.alpha_phi * state.phi + (1.0 - config.alpha_phi) * float(np.linalg.norm(gamma))
    return ServoState(tau=tau, gamma=gamma, phi=phi), tau


def run_servo(world: WorldState, believed_cameras: list[CameraModel], estimator: PointEstimator,
              config: ServoConfig, boundary: float,
              motion: MotionModel | None = None,
              max_starved_frames: int = 10) -> ServoOutcome:
    """Run the servo loop against a world until convergence, timeout or the
    peg leaving the boundary around its start position.

    Per frame: read the TCP position, gather per-camera pixel estimates of
    the true tip and hole through the true cameras, backproject through the
    believed cameras at the configured depths, solve for the error vector
    and command the filtered target. Cameras with missed detections or
    degenerate views contribute nothing that frame; a frame with no
    constraints at all keeps the previous filtered state.
    """
    if len(believed_cameras) != len(config.depths):
        raise ValueError("need one depth estimate per camera")
    if len(believed_cameras) < 2:
        # a single view constrains the error along one direction only
        warnings.warn("servoing with fewer than two cameras cannot resolve "
                      "the full planar error", stacklevel=2)
    speed = motion.max_speed if motion is not None else MotionModel().max_speed
    step_motion = MotionModel(max_speed=speed, dt=config.loop_dt)
    l = config.insertion_direction
    q_start = world.tcp_position().copy()
    state = ServoState.initial(q_start, config.phi_t)
    start_clock = world.clock
    status = "converged"
    iterations = 0
    starved = 0
    trace: list[tuple[float, np.ndarray, np.ndarray]] = []

    while state.phi > config.phi_t:
        if world.clock - start_clock >= config.max_duration:
            status = "timed_out"
            break
        q = world.tcp_position()
        drift = (q - q_start) - np.dot(q - q_start, l) * l
        if float(np.linalg.norm(drift)) > boundary:
            status = "boundary_exceeded"
            break

        tip = world.tip_position()
        hole = world.scenario.hole_center()
        constraints = []
        for i, (true_cam, believed_cam) in enumerate(zip(world.true_cameras, believed_cameras)):
            try:
                est = estimator.estimate(tip, hole, true_cam)
            except BehindCameraError:
                continue
            if not (est.peg_detected and est.hole_detected):
                continue
            try:
                constraints.append(compute_view_constraint(believed_cam, est, config.depths[i], l, i))
            except DegenerateViewError:
                continue

        iterations += 1
        if not constraints:
            starved += 1
            if starved > max_starved_frames:
                raise EstimationStarvedError(
                    f"no usable view constraint for {starved} consecutive frames")
            step_toward(world, state.tau, step_motion)
            continue
        starved = 0
        e_hat = solve_error(constraints)
        state, target = servo_step(state, e_hat, q, config)
        step_toward(world, target, step_motion)
        trace.append((world.clock, world.tip_position(), e_hat))

    return ServoOutcome(
        status=status,
        final_planar_error=contact_query(world).planar_error,
        elapsed=world.clock - start_clock,
        iterations=iterations,
        trace=trace,
    )


def default_servo_config(world: WorldState, phi_t: float | None = None,
                         **overrides) -> ServoConfig:
    """Servo configuration derived from the believed system state: depths
    are the believed cameras' optical-axis depths of the hole, and phi_t
    defaults to 1/20 of the hole diameter."""
    from .geometry import optical_depth

    s = world.scenario
    depths = tuple(optical_depth(cam, s.hole_center()) for cam in world.believed_cameras)
    if phi_t is None:
        phi_t = s.hole_diameter / PHI_T_DIAMETER_FRACTION
    return ServoConfig(insertion_direction=s.insertion_direction, depths=depths,
                       phi_t=phi_t, **overrides)


def trace_csv(outcome: ServoOutcome) -> str:
    """Trace rows as CSV: time_s, px, py, pz, ex, ey, ez."""
    lines = ["time_s,px,py,pz,ex,ey,ez"]
    for t, pos, e in outcome.trace:
        row = [float(t), *(float(x) for x in pos), *(float(x) for x in e)]
        lines.append(",".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"
