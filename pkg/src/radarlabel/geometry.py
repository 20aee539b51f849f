"""Rigid-body geometry shared by the whole pipeline.

Conventions (used everywhere, never mixed):

* Timestamps are integer microseconds since an arbitrary epoch. Differences
  of two timestamps are signed durations in microseconds.
* Quaternions are Hamilton, scalar-first (w, x, y, z), and canonicalized to
  w >= 0 on construction so that a rotation has exactly one representation.
* A ``Pose`` with ``frame_from=A, frame_to=B`` carries the transform T_AB:
  it maps point coordinates expressed in B into coordinates expressed in A,
  ``p_A = R * p_B + t``. This matches the usual parent/child transform-tree
  convention: B is the child frame, A the parent.
* ``compose(a, b)`` is then the 4x4 homogeneous product ``M_a @ M_b`` and
  requires ``a.frame_to == b.frame_from``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

Timestamp = int  # microseconds since epoch
FrameId = str

US_PER_SECOND = 1_000_000


def seconds_to_us(seconds: float) -> Timestamp:
    """Convert float seconds to integer microseconds (rounded)."""
    return int(round(seconds * US_PER_SECOND))


class FrameError(ValueError):
    """Raised when transform frames do not chain or an extrinsic is missing."""


@dataclass(frozen=True)
class UnitQuaternion:
    """Unit quaternion, scalar first, canonicalized to w >= 0.

    Construction normalizes the components; the stored norm is within
    1e-9 of one. If w == 0 the sign of the vector part is fixed so the
    first nonzero component of (x, y, z) is positive, which keeps
    equality checks deterministic for 180 degree rotations.
    """

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        n = math.sqrt(self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2)
        if n < 1e-12:
            raise ValueError("cannot normalize a near-zero quaternion")
        w = float(self.w) / n
        x = float(self.x) / n
        y = float(self.y) / n
        z = float(self.z) / n
        if w < 0.0 or (w == 0.0 and _vector_sign(x, y, z) < 0.0):
            w, x, y, z = -w, -x, -y, -z
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @staticmethod
    def identity() -> "UnitQuaternion":
        return UnitQuaternion(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis, angle_rad: float) -> "UnitQuaternion":
        ax = np.asarray(axis, dtype=float)
        n = float(np.linalg.norm(ax))
        if n < 1e-12:
            raise ValueError("rotation axis must be nonzero")
        ax = ax / n
        half = 0.5 * angle_rad
        s = math.sin(half)
        return UnitQuaternion(math.cos(half), s * ax[0], s * ax[1], s * ax[2])

    def multiply(self, other: "UnitQuaternion") -> "UnitQuaternion":
        """Hamilton product self * other (composes like rotation matrices)."""
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return UnitQuaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def conjugate(self) -> "UnitQuaternion":
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z)

    def norm(self) -> float:
        return math.sqrt(self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2)

    def dot(self, other: "UnitQuaternion") -> float:
        return (self.w * other.w + self.x * other.x
                + self.y * other.y + self.z * other.z)

    def angle(self) -> float:
        """Rotation angle in [0, pi] represented by this quaternion."""
        return 2.0 * math.acos(min(1.0, abs(self.w)))

    def angle_to(self, other: "UnitQuaternion") -> float:
        """Angle of the relative rotation taking self to other, in [0, pi]."""
        return self.conjugate().multiply(other).angle()

    def to_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        xx, yy, zz = x * x, y * y, z * z
        wx, wy, wz = w * x, w * y, w * z
        xy, xz, yz = x * y, x * z, y * z
        return np.array([
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ])

    def rotate(self, vec) -> np.ndarray:
        return self.to_matrix() @ np.asarray(vec, dtype=float)

    def yaw(self) -> float:
        """Heading of the rotated x axis in the xy plane, radians."""
        m = self.to_matrix()
        return math.atan2(m[1, 0], m[0, 0])

    def approx_equal(self, other: "UnitQuaternion", tol: float = 1e-9) -> bool:
        return self.angle_to(other) <= tol


def _vector_sign(x: float, y: float, z: float) -> float:
    for c in (x, y, z):
        if c != 0.0:
            return math.copysign(1.0, c)
    return 1.0


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform T_{frame_from <- frame_to}.

    ``transform_point`` maps coordinates expressed in ``frame_to`` into
    ``frame_from``. A vehicle pose in the world is therefore
    ``Pose(..., frame_from="world", frame_to="vehicle")``.
    """

    rotation: UnitQuaternion
    translation: np.ndarray
    frame_from: FrameId = "world"
    frame_to: FrameId = "body"

    def __post_init__(self):
        t = np.array(self.translation, dtype=float).reshape(3)
        t.flags.writeable = False
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity(frame_from: FrameId = "world", frame_to: FrameId = "world") -> "Pose":
        return Pose(UnitQuaternion.identity(), np.zeros(3), frame_from, frame_to)

    def compose(self, other: "Pose") -> "Pose":
        """Chain transforms: T_AC = T_AB.compose(T_BC).

        Equivalent to the 4x4 homogeneous matrix product.
        """
        if self.frame_to != other.frame_from:
            raise FrameError(
                f"cannot compose {self.frame_from}<-{self.frame_to} "
                f"with {other.frame_from}<-{other.frame_to}")
        rot = self.rotation.multiply(other.rotation)
        trans = self.rotation.rotate(other.translation) + self.translation
        return Pose(rot, trans, self.frame_from, other.frame_to)

    def inverse(self) -> "Pose":
        rot = self.rotation.conjugate()
        trans = -rot.rotate(self.translation)
        return Pose(rot, trans, self.frame_to, self.frame_from)

    def transform_point(self, point) -> np.ndarray:
        """Map one point from frame_to coordinates into frame_from."""
        return self.rotation.rotate(point) + self.translation

    def transform_points(self, points: np.ndarray) -> np.ndarray:
        """Map an (n, 3) array of points from frame_to into frame_from."""
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        return pts @ self.rotation.to_matrix().T + self.translation

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation.to_matrix()
        m[:3, 3] = self.translation
        return m

    def approx_equal(self, other: "Pose", rot_tol: float = 1e-9,
                     trans_tol: float = 1e-9) -> bool:
        return (self.rotation.angle_to(other.rotation) <= rot_tol
                and float(np.max(np.abs(self.translation - other.translation))) <= trans_tol)

    def __repr__(self):
        t = self.translation
        q = self.rotation
        return (f"Pose({self.frame_from}<-{self.frame_to}, "
                f"t=({t[0]:.4g}, {t[1]:.4g}, {t[2]:.4g}), "
                f"q=({q.w:.4g}, {q.x:.4g}, {q.y:.4g}, {q.z:.4g}))")


def compose(a: Pose, b: Pose) -> Pose:
    return a.compose(b)


def transform_point(pose: Pose, point) -> np.ndarray:
    return pose.transform_point(point)
