"""Independent brute-force oracles used across the test suite.

Everything here is built from first principles (Rodrigues rotations and
4x4 homogeneous matrices) without touching the library's own quaternion
or pose code, so oracle and implementation can only agree by both being
right.
"""

import math

import numpy as np


def rodrigues(axis, angle: float) -> np.ndarray:
    """3x3 rotation matrix from an axis-angle, by the Rodrigues formula."""
    ax = np.asarray(axis, dtype=float)
    ax = ax / np.linalg.norm(ax)
    kx, ky, kz = ax
    k_cross = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    return (np.eye(3) + math.sin(angle) * k_cross
            + (1.0 - math.cos(angle)) * (k_cross @ k_cross))


def hom(rot: np.ndarray, trans) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = rot
    m[:3, 3] = np.asarray(trans, dtype=float)
    return m


def rotation_angle(rot: np.ndarray) -> float:
    """Angle of a rotation matrix via its trace, clamped for roundoff."""
    c = (np.trace(rot) - 1.0) / 2.0
    return math.acos(min(1.0, max(-1.0, c)))


def rotation_angle_between(r_a: np.ndarray, r_b: np.ndarray) -> float:
    return rotation_angle(r_a.T @ r_b)


def random_axis_angle(rng) -> tuple[np.ndarray, float]:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(-math.pi, math.pi)
    return axis, angle


def random_pose_and_matrix(rng, frame_from="a", frame_to="b"):
    """A random library Pose plus its independently built 4x4 matrix."""
    from radarlabel import Pose, UnitQuaternion

    axis, angle = random_axis_angle(rng)
    trans = rng.uniform(-100.0, 100.0, size=3)
    pose = Pose(UnitQuaternion.from_axis_angle(axis, angle), trans,
                frame_from, frame_to)
    return pose, hom(rodrigues(axis, angle), trans)
