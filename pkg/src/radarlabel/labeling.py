"""Fuse segmented camera images with LiDAR scans into labelled pointclouds.

Each LiDAR point is motion-corrected to every camera's capture time via the
pose chain, pushed through that camera's extrinsics and intrinsics, and
takes the class of the pixel it lands on. Points seen by no camera keep the
UNLABELED sentinel; points seen by several cameras take one of the looked-up
labels uniformly at random from a seeded generator, so runs reproduce.
There is no occlusion reasoning: a point hidden behind a nearer surface can
inherit the occluder's label, which is part of the label noise this kind of
weak supervision accepts (and is measured in the tests).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import FrameId, Pose, Timestamp
from .posechain import PoseChain
from .rig import Rig
from .sensors import LidarScan, SemanticImage, lookup_labels, project_points
from .taxonomy import UNLABELED


@dataclass(frozen=True)
class LabeledPointCloud:
    """Points with per-point source-taxonomy class indices."""

    points: np.ndarray  # (n, 3) metres
    labels: np.ndarray  # (n,) uint8 source class ids or UNLABELED
    frame: FrameId
    time: Timestamp

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        labels = np.asarray(self.labels, dtype=np.uint8).reshape(-1)
        if pts.shape[0] != labels.shape[0]:
            raise ValueError("points and labels must have the same length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.points.shape[0]

    @property
    def labeled_fraction(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(np.mean(self.labels != UNLABELED))


def label_pointcloud(scan: LidarScan, images: list[SemanticImage], rig: Rig,
                     chain: PoseChain, seed: int = 0,
                     correct_motion: bool = True) -> LabeledPointCloud:
    """Label every LiDAR point from the given per-camera semantic images.

    With ``correct_motion`` the scan is interpolated to each image's capture
    time before projection; without it the image is treated as simultaneous
    with the scan, which is the ablation baseline.
    """
    n = len(scan)
    per_cam = np.full((len(images), n), -1, dtype=np.int16)
    t_lidar_to_base = rig.to_reference(scan.frame)
    for ci, img in enumerate(images):
        if correct_motion:
            motion = chain.relative_pose(img.time, scan.time)
        else:
            motion = Pose.identity(chain.frame_to, chain.frame_to)
        cam_from_lidar = (rig.to_reference(img.camera.frame).inverse()
                          .compose(motion).compose(t_lidar_to_base))
        pts_cam = cam_from_lidar.transform_points(scan.points)
        uv, valid = project_points(img.camera, pts_cam)
        if valid.any():
            per_cam[ci, valid] = lookup_labels(img, uv[valid])

    labels = np.full(n, UNLABELED, dtype=np.uint8)
    hit = per_cam >= 0
    n_hits = hit.sum(axis=0)
    single = n_hits == 1
    if single.any():
        labels[single] = per_cam[:, single].max(axis=0)
    multi = n_hits > 1
    if multi.any():
        # choose uniformly among the cameras that saw the point: the argmax
        # of iid uniform draws restricted to hitting cameras is uniform
        rng = np.random.default_rng(seed)
        draws = rng.random(per_cam.shape)
        draws[~hit] = -1.0
        pick = np.argmax(draws[:, multi], axis=0)
        labels[multi] = per_cam[pick, np.nonzero(multi)[0]]
    return LabeledPointCloud(points=scan.points, labels=labels,
                             frame=scan.frame, time=scan.time)


def to_radar_frame(cloud: LabeledPointCloud, rig: Rig, chain: PoseChain,
                   t_radar: Timestamp) -> LabeledPointCloud:
    """Express a labelled cloud in the radar frame at radar scan time.

    Combines the rig extrinsic with the chain's ego motion between the
    cloud time and the radar time. Point count and labels are unchanged.
    """
    extrinsic = rig.to_reference(cloud.frame)
    if t_radar == cloud.time and _is_identity(extrinsic):
        return LabeledPointCloud(points=cloud.points, labels=cloud.labels,
                                 frame=rig.reference, time=t_radar)
    motion = chain.relative_pose(t_radar, cloud.time)
    full = motion.compose(extrinsic)
    return LabeledPointCloud(points=full.transform_points(cloud.points),
                             labels=cloud.labels,
                             frame=rig.reference, time=t_radar)


def _is_identity(pose: Pose, tol: float = 1e-12) -> bool:
    return (pose.rotation.angle() <= tol
            and float(np.max(np.abs(pose.translation))) <= tol)
