"""Geometric sensor models: pinhole cameras, LiDAR scans, scanning radar.

Camera frame: x right, y down, z forward (optical axis). The radar is a
spinning sensor producing one power-vs-range profile per azimuth; azimuth 0
points along the sensor x axis and azimuth grows towards +y.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import FrameId, Timestamp

# Near plane of the camera frustum; points closer than this are never
# projected, avoiding the projective blow-up at z = 0.
Z_MIN = 0.1


class BoundsError(IndexError):
    """Pixel lookup outside the image raster."""


@dataclass(frozen=True)
class CameraModel:
    """Ideal pinhole camera (no lens distortion; extension point if needed)."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    frame: FrameId
    rate_hz: float = 25.0

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        if self.rate_hz <= 0:
            raise ValueError("rate must be positive")


def project(camera: CameraModel, pt_cam) -> tuple[float, float] | None:
    """Project one camera-frame point to pixel (u, v), or None.

    Returns None when the point is behind the near plane or lands outside
    [0, width) x [0, height); that is a normal miss, not an error.
    """
    x, y, z = float(pt_cam[0]), float(pt_cam[1]), float(pt_cam[2])
    if z < Z_MIN:
        return None
    u = camera.fx * x / z + camera.cx
    v = camera.fy * y / z + camera.cy
    if not (0.0 <= u < camera.width and 0.0 <= v < camera.height):
        return None
    return u, v


def project_points(camera: CameraModel, pts_cam: np.ndarray):
    """Vectorized projection of (n, 3) camera-frame points.

    Returns (uv, valid): uv is (n, 2) float (undefined where invalid),
    valid is a boolean mask of points inside the frustum and image bounds.
    """
    pts = np.asarray(pts_cam, dtype=float).reshape(-1, 3)
    z = pts[:, 2]
    valid = z >= Z_MIN
    zs = np.where(valid, z, 1.0)
    u = camera.fx * pts[:, 0] / zs + camera.cx
    v = camera.fy * pts[:, 1] / zs + camera.cy
    valid &= (u >= 0.0) & (u < camera.width) & (v >= 0.0) & (v < camera.height)
    return np.stack([u, v], axis=1), valid


@dataclass(frozen=True)
class SemanticImage:
    """Per-pixel class indices in the source taxonomy plus camera metadata."""

    labels: np.ndarray  # (height, width) uint8/int class indices
    camera: CameraModel
    time: Timestamp

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.shape != (self.camera.height, self.camera.width):
            raise ValueError(
                f"label raster {labels.shape} does not match camera "
                f"{self.camera.height}x{self.camera.width}")
        object.__setattr__(self, "labels", labels)


def lookup_label(img: SemanticImage, u: float, v: float) -> int:
    """Nearest-pixel (floor) class lookup at pixel coordinates (u, v)."""
    if not (0.0 <= u < img.camera.width and 0.0 <= v < img.camera.height):
        raise BoundsError(f"pixel ({u}, {v}) outside image")
    return int(img.labels[int(v), int(u)])


def lookup_labels(img: SemanticImage, uv: np.ndarray) -> np.ndarray:
    """Vectorized floor-pixel lookup; all (u, v) must be inside the image."""
    uv = np.asarray(uv, dtype=float)
    cols = np.floor(uv[:, 0]).astype(np.intp)
    rows = np.floor(uv[:, 1]).astype(np.intp)
    if cols.size and (cols.min() < 0 or cols.max() >= img.camera.width
                      or rows.min() < 0 or rows.max() >= img.camera.height):
        raise BoundsError("pixel lookup outside image")
    return img.labels[rows, cols]


@dataclass(frozen=True)
class LidarScan:
    """Point cloud in the sensor frame at a single scan timestamp."""

    points: np.ndarray  # (n, 3) metres
    frame: FrameId
    time: Timestamp
    rate_hz: float = 20.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if pts.size and not np.all(np.isfinite(pts)):
            raise ValueError("lidar points must be finite")
        if self.rate_hz <= 0:
            raise ValueError("rate must be positive")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class RadarScan:
    """One full radar sweep: A azimuths x R range bins of power.

    azimuth_times hold the capture time of each azimuth message; they are
    non-decreasing and spread across the sweep period. scan_time is the
    time of the first azimuth and is the timestamp the rest of the
    pipeline associates with the scan.
    """

    power: np.ndarray  # (A, R) float, >= 0
    azimuth_times: np.ndarray  # (A,) int64 microseconds
    range_resolution: float  # metres per range bin
    frame: FrameId
    scan_time: Timestamp
    rate_hz: float = 4.0

    def __post_init__(self):
        power = np.asarray(self.power, dtype=np.float32)
        if power.ndim != 2 or power.shape[0] < 1 or power.shape[1] < 1:
            raise ValueError("power must be a non-empty (A, R) array")
        if power.size and float(power.min()) < 0:
            raise ValueError("power must be non-negative")
        times = np.asarray(self.azimuth_times, dtype=np.int64)
        if times.shape != (power.shape[0],):
            raise ValueError("need one azimuth time per azimuth")
        if np.any(np.diff(times) < 0):
            raise ValueError("azimuth times must be non-decreasing")
        if self.range_resolution <= 0:
            raise ValueError("range resolution must be positive")
        if self.rate_hz <= 0:
            raise ValueError("rate must be positive")
        object.__setattr__(self, "power", power)
        object.__setattr__(self, "azimuth_times", times)

    @property
    def num_azimuths(self) -> int:
        return self.power.shape[0]

    @property
    def num_range_bins(self) -> int:
        return self.power.shape[1]

    @property
    def max_range(self) -> float:
        return self.num_range_bins * self.range_resolution
