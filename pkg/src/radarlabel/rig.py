"""Sensor rig description: extrinsic transforms between the mounted sensors.

Every sensor frame is stored relative to a single reference frame, which by
convention is the radar frame. The pose chain's base frame must coincide
with this reference for motion and extrinsics to compose.
"""

from __future__ import annotations

from .geometry import FrameError, FrameId, Pose


class Rig:
    """Extrinsics keyed by sensor frame: reference <- sensor."""

    def __init__(self, reference: FrameId, extrinsics: dict[FrameId, Pose]):
        self.reference = reference
        self._extrinsics: dict[FrameId, Pose] = {}
        for frame, pose in extrinsics.items():
            if not frame:
                raise FrameError("frame ids must be non-empty")
            if pose.frame_from != reference or pose.frame_to != frame:
                raise FrameError(
                    f"extrinsic for {frame!r} must be {reference}<-{frame}, "
                    f"got {pose.frame_from}<-{pose.frame_to}")
            self._extrinsics[frame] = pose
        # the reference is trivially known even if not listed
        self._extrinsics.setdefault(
            reference, Pose.identity(reference, reference))

    @property
    def frames(self) -> list[FrameId]:
        return sorted(self._extrinsics)

    def to_reference(self, frame: FrameId) -> Pose:
        """Transform reference <- frame."""
        try:
            return self._extrinsics[frame]
        except KeyError:
            raise FrameError(f"rig has no extrinsic for frame {frame!r}") from None

    def between(self, frame_a: FrameId, frame_b: FrameId) -> Pose:
        """Transform frame_a <- frame_b."""
        return self.to_reference(frame_a).inverse().compose(self.to_reference(frame_b))
