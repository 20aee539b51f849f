"""Cross-modal annotation for scanning radar.

Transfers semantic labels from segmented camera images and LiDAR
pointclouds into the radar frame, producing labelled polar/Cartesian
training grids, aligned multi-scan input stacks, class weights, and
evaluation reports, with a built-in synthetic world for end-to-end
verification.
"""

from .geometry import (FrameError, FrameId, Pose, Timestamp, UnitQuaternion,
                       compose, seconds_to_us, transform_point)
from .grids import (CartesianGeometry, LabelGrid, PolarGeometry, RadarStack,
                    accumulate_horizon, build_stack, cartesian_to_polar,
                    polar_to_cartesian, rasterize)
from .labeling import LabeledPointCloud, label_pointcloud, to_radar_frame
from .posechain import OutOfRangeError, PoseChain, slerp
from .rig import Rig
from .sensors import (BoundsError, CameraModel, LidarScan, RadarScan,
                      SemanticImage, lookup_label, project)
from .taxonomy import (EMPTY, UNLABELED, ClassMap, ClassWeights,
                       DegenerateCountsError, compute_weights,
                       default_class_map)

__version__ = "0.1.0"

__all__ = [
    "BoundsError", "CameraModel", "CartesianGeometry", "ClassMap",
    "ClassWeights", "DegenerateCountsError", "EMPTY", "FrameError", "FrameId",
    "LabelGrid", "LabeledPointCloud", "LidarScan", "OutOfRangeError",
    "PolarGeometry", "Pose", "PoseChain", "RadarScan", "RadarStack", "Rig",
    "SemanticImage", "Timestamp", "UNLABELED", "UnitQuaternion",
    "accumulate_horizon", "build_stack", "cartesian_to_polar", "compose",
    "compute_weights", "default_class_map", "label_pointcloud",
    "lookup_label", "polar_to_cartesian", "project", "rasterize",
    "seconds_to_us", "slerp", "to_radar_frame", "transform_point",
]
