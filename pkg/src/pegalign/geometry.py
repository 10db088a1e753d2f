"""Rigid transforms and pinhole cameras.

Conventions
-----------
- Quaternions are (w, x, y, z) and kept unit norm.
- ``RigidTransform`` maps points from its source frame to its target frame:
  ``apply(p) = R(q) @ p + t``.
- Camera poses are stored camera-from-world: ``p_cam = pose.apply(p_world)``.
  The camera position in world coordinates is ``pose.inverse().translation``.
- Camera frame: x right, y down, z forward along the optical axis.
  Pixel coordinates: u right, v down, origin at the top-left corner.
- "Depth" means the camera-frame z coordinate (distance along the optical
  axis), not Euclidean ray length.
- Angles are radians unless the name ends in ``_deg``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-9


class BehindCameraError(ValueError):
    """Raised when a point has non-positive depth in the camera frame."""


class InvalidDepthError(ValueError):
    """Raised when a backprojection depth is zero or negative."""


# ---------------------------------------------------------------------------
# quaternion helpers (w, x, y, z)

def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def cross3(a, b) -> np.ndarray:
    """Cross product of two 3-vectors (faster than np.cross for scalars)."""
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def quat_rotate(q: np.ndarray, v) -> np.ndarray:
    # q v q* expanded: v + w t + q_v x t with t = 2 q_v x v
    w, qx, qy, qz = q
    vx, vy, vz = float(v[0]), float(v[1]), float(v[2])
    tx = 2.0 * (qy * vz - qz * vy)
    ty = 2.0 * (qz * vx - qx * vz)
    tz = 2.0 * (qx * vy - qy * vx)
    return np.array([
        vx + w * tx + qy * tz - qz * ty,
        vy + w * ty + qz * tx - qx * tz,
        vz + w * tz + qx * ty - qy * tx,
    ])


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("rotation axis must be non-zero")
    half = 0.5 * angle
    s = math.sin(half) / n
    return np.array([math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_angle(q: np.ndarray) -> float:
    """Rotation angle of a unit quaternion, in [0, pi]."""
    return 2.0 * math.atan2(np.linalg.norm(q[1:]), abs(q[0]))


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(m: np.ndarray) -> np.ndarray:
    """Rotation matrix to unit quaternion (Shepperd's branch method)."""
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s,
                      (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array([(m[2, 1] - m[1, 2]) / s,
                      0.25 * s,
                      (m[0, 1] + m[1, 0]) / s,
                      (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] >= m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array([(m[0, 2] - m[2, 0]) / s,
                      (m[0, 1] + m[1, 0]) / s,
                      0.25 * s,
                      (m[1, 2] + m[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array([(m[1, 0] - m[0, 1]) / s,
                      (m[0, 2] + m[2, 0]) / s,
                      (m[1, 2] + m[2, 1]) / s,
                      0.25 * s])
    return q / np.linalg.norm(q)


def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
        if n > 1e-12:
            return v / n


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PixelPoint:
    """Pixel coordinates; continuous for ground truth, integral for argmax
    results."""

    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("pixel coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def distance_to(self, other: "PixelPoint") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Unit-quaternion rotation plus translation; immutable."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.rotation, dtype=float).reshape(4)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        n = np.linalg.norm(q)
        if n < 1e-12:
            raise ValueError("quaternion norm too small")
        if abs(n - 1.0) > UNIT_TOL:
            q = q / n
        q.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "_inv", None)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @staticmethod
    def from_axis_angle(axis, angle: float, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        return RigidTransform(quat_from_axis_angle(axis, angle), np.asarray(translation, dtype=float))

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self applied after other: (self ∘ other)(p) = self(other(p))."""
        q = quat_multiply(self.rotation, other.rotation)
        t = quat_rotate(self.rotation, other.translation) + self.translation
        return RigidTransform(q, t)

    def inverse(self) -> "RigidTransform":
        if self._inv is None:
            qc = quat_conjugate(self.rotation)
            inv = RigidTransform(qc, -quat_rotate(qc, self.translation))
            object.__setattr__(inv, "_inv", self)
            object.__setattr__(self, "_inv", inv)
        return self._inv

    def apply(self, point) -> np.ndarray:
        return quat_rotate(self.rotation, np.asarray(point, dtype=float)) + self.translation

    def rotate(self, vector) -> np.ndarray:
        return quat_rotate(self.rotation, np.asarray(vector, dtype=float))

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)


def rotation_between(a: RigidTransform, b: RigidTransform) -> float:
    """Angle of the relative rotation between two transforms, radians."""
    return quat_angle(quat_multiply(b.rotation, quat_conjugate(a.rotation)))


@dataclass(frozen=True, eq=False)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")


#: Calibrated so a 10 mm peg at 12-15 cm spans roughly 50 px in a 224 px image.
DEFAULT_INTRINSICS = CameraIntrinsics(fx=675.0, fy=675.0, cx=112.0, cy=112.0, width=224, height=224)


@dataclass(frozen=True, eq=False)
class CameraModel:
    intrinsics: CameraIntrinsics
    pose: RigidTransform  # camera-from-world

    def position(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return self.pose.inverse().translation

    def optical_axis(self) -> np.ndarray:
        """Unit view direction (camera z axis) in world coordinates."""
        return quat_rotate(quat_conjugate(self.pose.rotation), np.array([0.0, 0.0, 1.0]))


def project(camera: CameraModel, point) -> PixelPoint:
    """Pinhole projection of a world point. Raises BehindCameraError for
    non-positive depth."""
    p_cam = camera.pose.apply(point)
    z = p_cam[2]
    if z <= 0.0:
        raise BehindCameraError(f"point depth {z:.6g} m is not positive")
    k = camera.intrinsics
    return PixelPoint(k.fx * p_cam[0] / z + k.cx, k.fy * p_cam[1] / z + k.cy)


def backproject_at_depth(camera: CameraModel, pixel: PixelPoint, z: float) -> np.ndarray:
    """World point at optical-axis depth z whose projection is ``pixel``."""
    if z <= 0.0:
        raise InvalidDepthError(f"depth must be positive, got {z:.6g}")
    k = camera.intrinsics
    p_cam = np.array([z * (pixel.x - k.cx) / k.fx, z * (pixel.y - k.cy) / k.fy, z])
    return camera.pose.inverse().apply(p_cam)


def optical_depth(camera: CameraModel, point) -> float:
    """Depth of a world point along the camera optical axis."""
    return float(camera.pose.apply(point)[2])


def perturb_extrinsics(camera: CameraModel, max_rot_deg: float, max_trans: float,
                       rng: np.random.Generator) -> CameraModel:
    """Camera with pose perturbed by a bounded random rotation and translation.

    Rotation: axis uniform on the unit sphere, angle uniform in
    [0, max_rot_deg]. Translation offset: direction uniform, magnitude
    uniform in [0, max_trans]. Intrinsics are unchanged.
    """
    if max_rot_deg < 0 or max_trans < 0:
        raise ValueError("perturbation bounds must be non-negative")
    axis = random_unit_vector(rng)
    angle = rng.uniform(0.0, math.radians(max_rot_deg))
    direction = random_unit_vector(rng)
    magnitude = rng.uniform(0.0, max_trans)
    dq = quat_from_axis_angle(axis, angle)
    pose = RigidTransform(quat_multiply(dq, camera.pose.rotation),
                          camera.pose.translation + magnitude * direction)
    return CameraModel(camera.intrinsics, pose)
