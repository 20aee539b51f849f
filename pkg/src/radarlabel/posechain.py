"""Time-indexed vehicle trajectory with interpolated pose queries.

The chain stores world <- base poses at strictly increasing timestamps and
answers pose queries at arbitrary in-span times. Rotation is interpolated
by slerp along the shorter great-circle arc, translation by a constant
velocity (linear) blend; the two components are interpolated independently.
Queries outside the stored span raise instead of extrapolating.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .geometry import FrameId, Pose, Timestamp, UnitQuaternion

# Below this sin(theta) the slerp denominator is unusable; fall back to
# normalized linear interpolation, which matches slerp to first order.
_SLERP_SIN_MIN = 1e-6


class OutOfRangeError(ValueError):
    """Query timestamp lies outside the pose chain span."""


def slerp(q0: UnitQuaternion, q1: UnitQuaternion, alpha: float) -> UnitQuaternion:
    """Constant-angular-velocity interpolation along the shorter arc.

    alpha=0 returns q0, alpha=1 returns q1 (up to quaternion sign, which
    is canonicalized away). q1 is negated when dot(q0, q1) < 0 so the
    interpolation always follows the shorter great-circle arc.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    d = q0.dot(q1)
    sign = 1.0
    if d < 0.0:
        d = -d
        sign = -1.0
    d = min(d, 1.0)
    theta = math.acos(d)
    sin_theta = math.sin(theta)
    if sin_theta < _SLERP_SIN_MIN:
        c0 = 1.0 - alpha
        c1 = alpha * sign
    else:
        c0 = math.sin((1.0 - alpha) * theta) / sin_theta
        c1 = math.sin(alpha * theta) / sin_theta * sign
    return UnitQuaternion(
        c0 * q0.w + c1 * q1.w,
        c0 * q0.x + c1 * q1.x,
        c0 * q0.y + c1 * q1.y,
        c0 * q0.z + c1 * q1.z,
    )


class PoseChain:
    """Immutable ordered sequence of (timestamp, world <- base pose).

    Lookup is a binary search over the timestamp array, so single queries
    are O(log n).
    """

    def __init__(self, entries: Iterable[tuple[Timestamp, Pose]]):
        entries = list(entries)
        if len(entries) < 2:
            raise ValueError("a pose chain needs at least 2 entries")
        times = np.array([int(t) for t, _ in entries], dtype=np.int64)
        if np.any(np.diff(times) <= 0):
            raise ValueError("pose chain timestamps must be strictly increasing")
        poses = [p for _, p in entries]
        frame_from = poses[0].frame_from
        frame_to = poses[0].frame_to
        for p in poses:
            if p.frame_from != frame_from or p.frame_to != frame_to:
                raise ValueError("all chain poses must share the same frames")
        self._times = times
        self._poses = poses
        self.frame_from: FrameId = frame_from
        self.frame_to: FrameId = frame_to

    def __len__(self) -> int:
        return len(self._poses)

    @property
    def start_time(self) -> Timestamp:
        return int(self._times[0])

    @property
    def end_time(self) -> Timestamp:
        return int(self._times[-1])

    @property
    def times(self) -> np.ndarray:
        return self._times

    def covers(self, t: Timestamp) -> bool:
        return self.start_time <= t <= self.end_time

    def entries(self) -> list[tuple[Timestamp, Pose]]:
        return [(int(t), p) for t, p in zip(self._times, self._poses)]

    def interpolate(self, t: Timestamp) -> Pose:
        """Pose at time t; exact entry timestamps return the stored pose."""
        t = int(t)
        if not self.covers(t):
            raise OutOfRangeError(
                f"t={t} outside chain span [{self.start_time}, {self.end_time}]")
        idx = int(np.searchsorted(self._times, t, side="left"))
        if idx < len(self._times) and self._times[idx] == t:
            return self._poses[idx]
        lo, hi = idx - 1, idx
        t0, t1 = int(self._times[lo]), int(self._times[hi])
        alpha = (t - t0) / (t1 - t0)
        p0, p1 = self._poses[lo], self._poses[hi]
        rot = slerp(p0.rotation, p1.rotation, alpha)
        trans = (1.0 - alpha) * p0.translation + alpha * p1.translation
        return Pose(rot, trans, self.frame_from, self.frame_to)

    def relative_pose(self, t_a: Timestamp, t_b: Timestamp) -> Pose:
        """Transform base@t_a <- base@t_b, both interpolated on the chain."""
        if t_a == t_b:
            pose = Pose.identity(self.frame_to, self.frame_to)
            return pose
        return self.interpolate(t_a).inverse().compose(self.interpolate(t_b))

    @staticmethod
    def from_arrays(times: Sequence[Timestamp], translations: np.ndarray,
                    rotations: Sequence[UnitQuaternion],
                    frame_from: FrameId = "world",
                    frame_to: FrameId = "radar") -> "PoseChain":
        translations = np.asarray(translations, dtype=float)
        entries = [
            (int(t), Pose(q, translations[i], frame_from, frame_to))
            for i, (t, q) in enumerate(zip(times, rotations))
        ]
        return PoseChain(entries)
