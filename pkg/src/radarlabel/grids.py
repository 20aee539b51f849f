"""Range-azimuth and Cartesian radar grids.

Polar grids are (A, R): azimuth bin a covers [a*2pi/A, (a+1)*2pi/A) with
azimuth measured from the sensor x axis towards +y; range bin r covers
[r*res, (r+1)*res). Cartesian grids are (N, N) with the sensor at the
centre, +x (vehicle forward) towards the top row and +y towards the left
column:

    x = ((N-1)/2 - row) * metres_per_pixel
    y = ((N-1)/2 - col) * metres_per_pixel

Class label grids hold target-taxonomy indices with 0 = empty and are only
ever resampled with nearest-neighbour lookups; power grids may use bilinear.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .geometry import FrameError, Pose, Timestamp
from .labeling import LabeledPointCloud
from .posechain import OutOfRangeError, PoseChain
from .sensors import RadarScan
from .taxonomy import EMPTY, UNLABELED, ClassMap, default_class_map

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PolarGeometry:
    num_azimuths: int
    num_range_bins: int
    range_resolution: float  # metres per bin

    def __post_init__(self):
        if self.num_azimuths < 1 or self.num_range_bins < 1:
            raise ValueError("grid dimensions must be positive")
        if self.range_resolution <= 0:
            raise ValueError("range resolution must be positive")

    @property
    def azimuth_bin_width(self) -> float:
        return TWO_PI / self.num_azimuths

    @property
    def max_range(self) -> float:
        return self.num_range_bins * self.range_resolution

    @staticmethod
    def of_scan(scan: RadarScan) -> "PolarGeometry":
        return PolarGeometry(scan.num_azimuths, scan.num_range_bins,
                             scan.range_resolution)


@dataclass(frozen=True)
class CartesianGeometry:
    size: int  # N pixels per side
    metres_per_pixel: float

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("grid size must be positive")
        if self.metres_per_pixel <= 0:
            raise ValueError("pixel size must be positive")

    def axis_coords(self) -> np.ndarray:
        """Metric coordinate of each row (equally of each column)."""
        half = (self.size - 1) / 2.0
        return (half - np.arange(self.size)) * self.metres_per_pixel


@dataclass(frozen=True)
class LabelGrid:
    """Raster of target-taxonomy class indices (0 = empty)."""

    labels: np.ndarray
    geometry: PolarGeometry | CartesianGeometry
    time: Timestamp

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.uint8)
        if isinstance(self.geometry, PolarGeometry):
            expect = (self.geometry.num_azimuths, self.geometry.num_range_bins)
        else:
            expect = (self.geometry.size, self.geometry.size)
        if labels.shape != expect:
            raise ValueError(f"label raster {labels.shape} does not match "
                             f"geometry {expect}")
        object.__setattr__(self, "labels", labels)

    @property
    def coverage(self) -> float:
        """Fraction of cells holding a non-empty class."""
        return float(np.mean(self.labels != EMPTY))


@dataclass(frozen=True)
class RadarStack:
    """Three aligned Cartesian power channels, oldest first.

    All channels are resampled into the newest scan's sensor frame so
    stationary structure sits at the same pixel in every channel.
    """

    channels: np.ndarray  # (3, N, N) float32
    geometry: CartesianGeometry
    time: Timestamp  # newest scan time
    scan_times: tuple[Timestamp, Timestamp, Timestamp]

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=np.float32)
        if ch.shape != (3, self.geometry.size, self.geometry.size):
            raise ValueError("a stack is exactly 3 equally-sized channels")
        object.__setattr__(self, "channels", ch)


def rasterize(cloud: LabeledPointCloud, geom: PolarGeometry, seed: int = 0,
              class_map: ClassMap | None = None,
              z_window: tuple[float, float] | None = None) -> LabelGrid:
    """Discretize a radar-frame labelled cloud into a polar label grid.

    Points are flattened into the horizontal plane. Unlabelled points and
    points at or beyond the maximum range are skipped. When several points
    fall into one cell the cell takes the label of one of them uniformly at
    random (seeded), then the winning source label is remapped to the
    target taxonomy. ``z_window`` optionally keeps only points whose height
    lies inside [z_min, z_max]; by default height is ignored entirely.
    """
    if class_map is None:
        class_map = default_class_map()
    table = class_map.lookup_table()
    grid = np.full((geom.num_azimuths, geom.num_range_bins), EMPTY,
                   dtype=np.uint8)
    if len(cloud) == 0:
        return LabelGrid(labels=grid, geometry=geom, time=cloud.time)

    x = cloud.points[:, 0]
    y = cloud.points[:, 1]
    rng_m = np.hypot(x, y)
    target = table[cloud.labels]
    keep = (target != UNLABELED) & (rng_m < geom.max_range)
    if z_window is not None:
        z = cloud.points[:, 2]
        keep &= (z >= z_window[0]) & (z <= z_window[1])
    if not keep.any():
        return LabelGrid(labels=grid, geometry=geom, time=cloud.time)

    az = np.mod(np.arctan2(y[keep], x[keep]), TWO_PI)
    az_bin = np.minimum((az / geom.azimuth_bin_width).astype(np.intp),
                        geom.num_azimuths - 1)
    r_bin = (rng_m[keep] / geom.range_resolution).astype(np.intp)
    cells = az_bin * geom.num_range_bins + r_bin
    labels = target[keep]

    # uniform pick per contended cell: permute, then first point per cell wins
    rng = np.random.default_rng(seed)
    perm = rng.permutation(cells.shape[0])
    unique_cells, first = np.unique(cells[perm], return_index=True)
    grid.reshape(-1)[unique_cells] = labels[perm[first]]
    return LabelGrid(labels=grid, geometry=geom, time=cloud.time)


def accumulate_horizon(clouds: list[LabeledPointCloud], chain: PoseChain,
                       t_radar: Timestamp, window_us: int) -> LabeledPointCloud:
    """Union of radar-frame clouds within +-window of the radar scan time,
    each carried along the trajectory into the radar frame at t_radar.

    Clouds must already be expressed in the radar (chain base) frame at
    their own timestamps. Clouds whose time lies outside the chain span are
    skipped with a warning rather than failing the whole accumulation.
    """
    if not chain.covers(t_radar):
        raise OutOfRangeError(f"radar time {t_radar} outside chain span")
    parts_pts: list[np.ndarray] = []
    parts_lab: list[np.ndarray] = []
    for cloud in clouds:
        if abs(cloud.time - t_radar) > window_us:
            continue
        if cloud.frame != chain.frame_to:
            raise FrameError(
                f"accumulation expects clouds in the {chain.frame_to!r} "
                f"frame, got {cloud.frame!r}")
        if not chain.covers(cloud.time):
            log.warning("skipping cloud at t=%d: outside pose chain span",
                        cloud.time)
            continue
        motion = chain.relative_pose(t_radar, cloud.time)
        parts_pts.append(motion.transform_points(cloud.points))
        parts_lab.append(cloud.labels)
    if parts_pts:
        points = np.concatenate(parts_pts, axis=0)
        labels = np.concatenate(parts_lab, axis=0)
    else:
        points = np.zeros((0, 3))
        labels = np.zeros(0, dtype=np.uint8)
    return LabeledPointCloud(points=points, labels=labels,
                             frame=chain.frame_to, time=t_radar)


def _cart_points(n: int, metres_per_pixel: float):
    """Metric (x, y) of every pixel centre of an n x n grid, as 2D arrays."""
    axis = (np.arange(n) - (n - 1) / 2.0) * metres_per_pixel
    x = -axis[:, None] + np.zeros((1, n))  # rows: +x at the top
    y = -axis[None, :] + np.zeros((n, 1))  # cols: +y at the left
    return x, y


def polar_to_cartesian(grid: np.ndarray, n: int, metres_per_pixel: float,
                       geom: PolarGeometry, mode: str = "nearest") -> np.ndarray:
    """Resample an (A, R) polar grid onto an n x n Cartesian raster.

    mode "nearest" (mandatory for label grids) picks the polar cell
    containing each pixel centre; "bilinear" (power only) interpolates
    between cell centres with azimuth wraparound. Pixels beyond the
    maximum range become 0 / empty.
    """
    grid = np.asarray(grid)
    if grid.shape != (geom.num_azimuths, geom.num_range_bins):
        raise ValueError("grid shape does not match polar geometry")
    x, y = _cart_points(n, metres_per_pixel)
    rng_m = np.hypot(x, y)
    az = np.mod(np.arctan2(y, x), TWO_PI)
    inside = rng_m < geom.max_range

    if mode == "nearest":
        az_bin = np.minimum((az / geom.azimuth_bin_width).astype(np.intp),
                            geom.num_azimuths - 1)
        r_bin = (rng_m / geom.range_resolution).astype(np.intp)
        r_bin = np.minimum(r_bin, geom.num_range_bins - 1)
        out = grid[az_bin, r_bin]
        fill = np.uint8(EMPTY) if grid.dtype == np.uint8 else grid.dtype.type(0)
        return np.where(inside, out, fill)
    if mode == "bilinear":
        out = _sample_polar_bilinear(grid, az, rng_m, geom)
        out[~inside] = 0.0
        return out
    raise ValueError(f"unknown mode {mode!r}")


def _sample_polar_bilinear(grid: np.ndarray, az: np.ndarray, rng_m: np.ndarray,
                           geom: PolarGeometry) -> np.ndarray:
    a = az / geom.azimuth_bin_width - 0.5
    r = rng_m / geom.range_resolution - 0.5
    a0 = np.floor(a).astype(np.intp)
    r0 = np.floor(r).astype(np.intp)
    wa = a - a0
    wr = r - r0
    a0m = np.mod(a0, geom.num_azimuths)
    a1m = np.mod(a0 + 1, geom.num_azimuths)
    r0c = np.clip(r0, 0, geom.num_range_bins - 1)
    r1c = np.clip(r0 + 1, 0, geom.num_range_bins - 1)
    g = grid.astype(np.float64)
    out = ((1 - wa) * (1 - wr) * g[a0m, r0c]
           + (1 - wa) * wr * g[a0m, r1c]
           + wa * (1 - wr) * g[a1m, r0c]
           + wa * wr * g[a1m, r1c])
    return out.astype(np.float32)


def cartesian_to_polar(grid: np.ndarray, geom: PolarGeometry,
                       metres_per_pixel: float, mode: str = "nearest") -> np.ndarray:
    """Resample an n x n Cartesian raster into an (A, R) polar grid.

    Each polar cell samples the Cartesian raster at the cell's centre
    point; positions outside the raster become 0 / empty.
    """
    grid = np.asarray(grid)
    n = grid.shape[0]
    if grid.shape != (n, n):
        raise ValueError("cartesian grid must be square")
    a_centers = (np.arange(geom.num_azimuths) + 0.5) * geom.azimuth_bin_width
    r_centers = (np.arange(geom.num_range_bins) + 0.5) * geom.range_resolution
    x = np.cos(a_centers)[:, None] * r_centers[None, :]
    y = np.sin(a_centers)[:, None] * r_centers[None, :]
    half = (n - 1) / 2.0
    i = half - x / metres_per_pixel
    j = half - y / metres_per_pixel

    if mode == "nearest":
        ii = np.rint(i).astype(np.intp)
        jj = np.rint(j).astype(np.intp)
        inside = (ii >= 0) & (ii < n) & (jj >= 0) & (jj < n)
        out_flat = grid[np.clip(ii, 0, n - 1), np.clip(jj, 0, n - 1)]
        fill = np.uint8(EMPTY) if grid.dtype == np.uint8 else grid.dtype.type(0)
        return np.where(inside, out_flat, fill)
    if mode == "bilinear":
        return _sample_cart_bilinear(grid, i, j)
    raise ValueError(f"unknown mode {mode!r}")


def _sample_cart_bilinear(grid: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    n = grid.shape[0]
    i0 = np.floor(i).astype(np.intp)
    j0 = np.floor(j).astype(np.intp)
    wi = i - i0
    wj = j - j0
    out = np.zeros(i.shape, dtype=np.float64)
    g = grid.astype(np.float64)
    for di, dj, w in ((0, 0, (1 - wi) * (1 - wj)), (0, 1, (1 - wi) * wj),
                      (1, 0, wi * (1 - wj)), (1, 1, wi * wj)):
        ii = i0 + di
        jj = j0 + dj
        ok = (ii >= 0) & (ii < n) & (jj >= 0) & (jj < n)
        out += np.where(ok, g[np.clip(ii, 0, n - 1), np.clip(jj, 0, n - 1)], 0.0) * w
    return out.astype(np.float32)


def _planar_components(pose: Pose) -> tuple[float, float, float]:
    """Yaw and xy translation of a pose, for warping top-down rasters.

    The grids are two dimensional, so only the planar part of the ego
    motion can be honoured; out-of-plane components are dropped.
    """
    return pose.rotation.yaw(), float(pose.translation[0]), float(pose.translation[1])


def warp_rigid(grid: np.ndarray, pose: Pose, metres_per_pixel: float,
               mode: str = "bilinear") -> np.ndarray:
    """Resample a Cartesian raster under a rigid in-plane motion.

    ``pose`` maps point coordinates in the output raster's frame into the
    input raster's frame; each output pixel samples the input grid there.
    """
    n = grid.shape[0]
    yaw, tx, ty = _planar_components(pose)
    x, y = _cart_points(n, metres_per_pixel)
    c, s = math.cos(yaw), math.sin(yaw)
    xs = c * x - s * y + tx
    ys = s * x + c * y + ty
    half = (n - 1) / 2.0
    i = half - xs / metres_per_pixel
    j = half - ys / metres_per_pixel
    if mode == "nearest":
        ii = np.rint(i).astype(np.intp)
        jj = np.rint(j).astype(np.intp)
        inside = (ii >= 0) & (ii < n) & (jj >= 0) & (jj < n)
        out = grid[np.clip(ii, 0, n - 1), np.clip(jj, 0, n - 1)]
        fill = grid.dtype.type(0)
        return np.where(inside, out, fill)
    if mode == "bilinear":
        return _sample_cart_bilinear(grid, i, j)
    raise ValueError(f"unknown mode {mode!r}")


def build_stack(scans: list[RadarScan], chain: PoseChain, n: int,
                metres_per_pixel: float) -> RadarStack:
    """Assemble three time-ordered scans into one aligned Cartesian stack.

    Each scan is converted to Cartesian, then the older two are rigidly
    resampled with the chain's relative motion so stationary structure is
    pixel-aligned with the newest scan. Assumes the scans are in the chain
    base (radar) frame.
    """
    if len(scans) != 3:
        raise ValueError("a stack takes exactly 3 scans")
    times = [s.scan_time for s in scans]
    if not times[0] < times[1] < times[2]:
        raise ValueError("scans must be strictly time-ordered")
    t_new = times[2]
    channels = np.zeros((3, n, n), dtype=np.float32)
    for k, scan in enumerate(scans):
        geom = PolarGeometry.of_scan(scan)
        cart = polar_to_cartesian(scan.power, n, metres_per_pixel, geom,
                                  mode="bilinear")
        if scan.scan_time != t_new:
            motion = chain.relative_pose(scan.scan_time, t_new)
            cart = warp_rigid(cart, motion, metres_per_pixel, mode="bilinear")
        channels[k] = cart
    return RadarStack(channels=channels,
                      geometry=CartesianGeometry(n, metres_per_pixel),
                      time=t_new, scan_times=(times[0], times[1], times[2]))
