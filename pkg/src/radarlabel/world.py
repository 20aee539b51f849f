"""Deterministic synthetic multi-sensor world for end-to-end verification.

A scene is a set of 2.5D solids (extruded footprints with a height range):
oriented boxes, vertical cylinders, and billboards (thin boxes). One ray
casting kernel serves three samplers: per-pixel camera class rendering,
LiDAR beam intersection, and horizontal radar sweeps with multiple returns
per azimuth. Ground-truth polar label grids come from the same geometry,
so every stage of the pipeline can be scored against the scene itself.

The ego vehicle follows a piecewise-linear path at constant speed in the
z=0 plane; sensors are mounted rigidly on the vehicle. All randomness is
drawn from generators seeded by the scenario seed, so regeneration is
byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose, Timestamp, UnitQuaternion, seconds_to_us
from .posechain import PoseChain
from .rig import Rig
from .sensors import CameraModel, LidarScan, RadarScan, SemanticImage
from .taxonomy import SOURCE_IDS, UNLABELED, ClassMap, default_class_map
from .grids import TWO_PI, PolarGeometry, polar_to_cartesian

SKY = SOURCE_IDS["sky"]

# camera optical axes (x right, y down, z forward) expressed in the vehicle
# frame (x forward, y left, z up), before the mount yaw is applied
_CAM_IN_VEHICLE = UnitQuaternion.from_axis_angle((0, 0, 1), -math.pi / 2).multiply(
    UnitQuaternion.from_axis_angle((1, 0, 0), -math.pi / 2))


@dataclass(frozen=True)
class SceneObject:
    """One extruded solid with a source-taxonomy class and optional motion."""

    shape: str  # "box" | "cylinder" | "billboard"
    class_id: int
    x: float
    y: float
    yaw: float = 0.0
    size_x: float = 1.0  # box/billboard footprint; cylinder ignores size_y
    size_y: float = 1.0
    radius: float = 0.5
    z0: float = 0.0
    z1: float = 2.0
    velocity: tuple[float, float] = (0.0, 0.0)

    def footprint_half(self) -> tuple[float, float]:
        if self.shape == "cylinder":
            return self.radius, self.radius
        if self.shape == "billboard":
            return self.size_x / 2.0, 0.15
        return self.size_x / 2.0, self.size_y / 2.0


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...]
    extent: float = 500.0  # scene bounding half-size, metres
    t0: Timestamp = 0  # time at which object positions are as declared

    def at_time(self, t: Timestamp) -> "_SceneArrays":
        dt = (t - self.t0) / 1e6
        return _SceneArrays(self.objects, dt)


class _SceneArrays:
    """Flat per-object arrays with motion advanced to a fixed time."""

    def __init__(self, objects: tuple[SceneObject, ...], dt_s: float):
        n = len(objects)
        self.n = n
        self.cx = np.array([o.x + o.velocity[0] * dt_s for o in objects])
        self.cy = np.array([o.y + o.velocity[1] * dt_s for o in objects])
        self.z0 = np.array([o.z0 for o in objects])
        self.z1 = np.array([o.z1 for o in objects])
        self.cls = np.array([o.class_id for o in objects], dtype=np.int16)
        self.is_cyl = np.array([o.shape == "cylinder" for o in objects])
        self.radius = np.array([o.radius for o in objects])
        halves = [o.footprint_half() for o in objects]
        self.hx = np.array([h[0] for h in halves])
        self.hy = np.array([h[1] for h in halves])
        self.cos = np.array([math.cos(o.yaw) for o in objects])
        self.sin = np.array([math.sin(o.yaw) for o in objects])


def _slab(o, d, lo, hi):
    """Entry/exit parameters of rays against one axis slab [lo, hi]."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - o) / d
        t2 = (hi - o) / d
    tmin = np.minimum(t1, t2)
    tmax = np.maximum(t1, t2)
    parallel = d == 0.0
    if np.any(parallel):
        inside = (o >= lo) & (o <= hi)
        tmin = np.where(parallel, np.where(inside, -np.inf, np.inf), tmin)
        tmax = np.where(parallel, np.where(inside, np.inf, -np.inf), tmax)
    return tmin, tmax


def _object_interval(arr: _SceneArrays, k: int, origin: np.ndarray,
                     dirs: np.ndarray):
    """Per-ray [entry, exit] parameter interval for object k (empty when
    entry > exit)."""
    ox = origin[0] - arr.cx[k]
    oy = origin[1] - arr.cy[k]
    oz = origin[2]
    dx, dy, dz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    if arr.is_cyl[k]:
        a = dx * dx + dy * dy
        b = 2.0 * (ox * dx + oy * dy)
        c = ox * ox + oy * oy - arr.radius[k] ** 2
        disc = b * b - 4.0 * a * c
        vertical = a < 1e-18
        safe_a = np.where(vertical, 1.0, a)
        sq = np.sqrt(np.maximum(disc, 0.0))
        t_lo = (-b - sq) / (2.0 * safe_a)
        t_hi = (-b + sq) / (2.0 * safe_a)
        hit_xy = disc >= 0.0
        t_lo = np.where(vertical, np.where(c <= 0.0, -np.inf, np.inf), t_lo)
        t_hi = np.where(vertical, np.where(c <= 0.0, np.inf, -np.inf), t_hi)
        t_lo = np.where(hit_xy | vertical, t_lo, np.inf)
        t_hi = np.where(hit_xy | vertical, t_hi, -np.inf)
    else:
        # rotate into the box frame (yaw only)
        c_, s_ = arr.cos[k], arr.sin[k]
        lx = c_ * ox + s_ * oy
        ly = -s_ * ox + c_ * oy
        ldx = c_ * dx + s_ * dy
        ldy = -s_ * dx + c_ * dy
        tx_lo, tx_hi = _slab(lx, ldx, -arr.hx[k], arr.hx[k])
        ty_lo, ty_hi = _slab(ly, ldy, -arr.hy[k], arr.hy[k])
        t_lo = np.maximum(tx_lo, ty_lo)
        t_hi = np.minimum(tx_hi, ty_hi)
    tz_lo, tz_hi = _slab(oz, dz, arr.z0[k], arr.z1[k])
    return np.maximum(t_lo, tz_lo), np.minimum(t_hi, tz_hi)


def first_hit(arr: _SceneArrays, origin: np.ndarray, dirs: np.ndarray,
              t_min: float = 1e-6, max_range: float = np.inf):
    """Nearest intersection of each ray with the scene.

    Rays start outside all objects by construction; an origin inside an
    object is treated as a miss of that object. Returns (distance, class,
    object index) with inf / -1 for misses.
    """
    n = dirs.shape[0]
    best_t = np.full(n, np.inf)
    best_cls = np.full(n, -1, dtype=np.int16)
    best_obj = np.full(n, -1, dtype=np.intp)
    for k in range(arr.n):
        entry, exit_ = _object_interval(arr, k, origin, dirs)
        hit = (entry <= exit_) & (entry >= t_min) & (entry < best_t) \
            & (entry <= max_range)
        if hit.any():
            best_t[hit] = entry[hit]
            best_cls[hit] = arr.cls[k]
            best_obj[hit] = k
    return best_t, best_cls, best_obj


def all_hits(arr: _SceneArrays, origin: np.ndarray, dirs: np.ndarray,
             t_min: float = 1e-6, max_range: float = np.inf):
    """Entry distances of every (ray, object) intersection.

    Returns (ray_index, object_index, distance) flat arrays, one triple per
    facing surface crossed, mirroring a radar's multiple returns along one
    azimuth.
    """
    rays = []
    objs = []
    dists = []
    for k in range(arr.n):
        entry, exit_ = _object_interval(arr, k, origin, dirs)
        hit = (entry <= exit_) & (entry >= t_min) & (entry <= max_range)
        idx = np.nonzero(hit)[0]
        if idx.size:
            rays.append(idx)
            objs.append(np.full(idx.size, k, dtype=np.intp))
            dists.append(entry[idx])
    if not rays:
        empty = np.zeros(0, dtype=np.intp)
        return empty, empty, np.zeros(0)
    return np.concatenate(rays), np.concatenate(objs), np.concatenate(dists)


def render_semantic_image(scene: Scene, camera: CameraModel,
                          pose_world_cam: Pose, t: Timestamp,
                          noise_px: int = 0) -> SemanticImage:
    """Ray-cast one class-index image; rays that miss everything see sky.

    ``noise_px`` optionally bloats object boundaries by that many pixels,
    a crude stand-in for imperfect upstream segmentation.
    """
    arr = scene.at_time(t)
    h, w = camera.height, camera.width
    us = (np.arange(w) + 0.5 - camera.cx) / camera.fx
    vs = (np.arange(h) + 0.5 - camera.cy) / camera.fy
    dir_cam = np.stack([
        np.broadcast_to(us[None, :], (h, w)),
        np.broadcast_to(vs[:, None], (h, w)),
        np.ones((h, w)),
    ], axis=-1).reshape(-1, 3)
    dir_cam /= np.linalg.norm(dir_cam, axis=1, keepdims=True)
    rot = pose_world_cam.rotation.to_matrix()
    dirs = dir_cam @ rot.T
    origin = np.asarray(pose_world_cam.translation)
    _, cls, _ = first_hit(arr, origin, dirs)
    labels = np.where(cls < 0, SKY, cls).astype(np.uint8).reshape(h, w)
    if noise_px > 0:
        labels = _bloat_boundaries(labels, noise_px)
    return SemanticImage(labels=labels, camera=camera, time=t)


def _bloat_boundaries(labels: np.ndarray, rounds: int) -> np.ndarray:
    out = labels.copy()
    for _ in range(rounds):
        grown = out.copy()
        for axis, shift in ((0, 1), (0, -1), (1, 1), (1, -1)):
            neigh = np.roll(out, shift, axis=axis)
            take = (grown == SKY) & (neigh != SKY)
            grown[take] = neigh[take]
        out = grown
    return out


@dataclass(frozen=True)
class LidarPattern:
    """Beam directions of a spinning LiDAR: azimuths x elevation rings."""

    azimuth_count: int = 64
    elevations_deg: tuple[float, ...] = (-12.0, -6.0, 0.0, 6.0)
    max_range: float = 50.0

    def directions(self) -> np.ndarray:
        az = (np.arange(self.azimuth_count) + 0.5) \
            * (2.0 * math.pi / self.azimuth_count)
        els = np.deg2rad(np.asarray(self.elevations_deg))
        ca, sa = np.cos(az), np.sin(az)
        ce, se = np.cos(els), np.sin(els)
        dirs = np.stack([
            (ca[None, :] * ce[:, None]).ravel(),
            (sa[None, :] * ce[:, None]).ravel(),
            np.broadcast_to(se[:, None], (els.size, az.size)).ravel(),
        ], axis=1)
        return dirs


def simulate_lidar_with_truth(scene: Scene, pose_world_sensor: Pose,
                              t: Timestamp, pattern: LidarPattern,
                              frame: str = "lidar", rate_hz: float = 20.0):
    """LiDAR scan plus the true class of the object each beam hit."""
    arr = scene.at_time(t)
    dirs_sensor = pattern.directions()
    rot = pose_world_sensor.rotation.to_matrix()
    dirs_world = dirs_sensor @ rot.T
    origin = np.asarray(pose_world_sensor.translation)
    dist, cls, _ = first_hit(arr, origin, dirs_world,
                             max_range=pattern.max_range)
    ok = np.isfinite(dist)
    points = dirs_sensor[ok] * dist[ok, None]
    scan = LidarScan(points=points, frame=frame, time=t, rate_hz=rate_hz)
    return scan, cls[ok].astype(np.uint8)


def simulate_lidar(scene: Scene, pose_world_sensor: Pose, t: Timestamp,
                   pattern: LidarPattern, frame: str = "lidar",
                   rate_hz: float = 20.0) -> LidarScan:
    scan, _ = simulate_lidar_with_truth(scene, pose_world_sensor, t, pattern,
                                        frame, rate_hz)
    return scan


def simulate_radar(scene: Scene, pose_world_sensor: Pose, scan_time: Timestamp,
                   geom: PolarGeometry, frame: str = "radar",
                   rate_hz: float = 4.0, speckle: float = 0.0,
                   rng: np.random.Generator | None = None,
                   rays_per_azimuth: int = 3) -> RadarScan:
    """One radar sweep: every facing surface along an azimuth deposits power.

    Each azimuth bin is swept by ``rays_per_azimuth`` sub-rays starting at
    the bin's leading edge, approximating a beam that subtends the whole
    bin. The whole sweep is cast from the pose at scan_time (rigid
    snapshot); azimuth timestamps are still spread across the sweep period
    so downstream timing logic is exercised. Optional multiplicative
    speckle perturbs occupied bins.
    """
    arr = scene.at_time(scan_time)
    a = geom.num_azimuths
    k = max(1, rays_per_azimuth)
    sub = np.arange(a * k) / k
    az = sub * geom.azimuth_bin_width
    dirs_sensor = np.stack([np.cos(az), np.sin(az), np.zeros(a * k)], axis=1)
    rot = pose_world_sensor.rotation.to_matrix()
    dirs_world = dirs_sensor @ rot.T
    origin = np.asarray(pose_world_sensor.translation)
    ray_idx, _, dist = all_hits(arr, origin, dirs_world,
                                max_range=geom.max_range - 1e-9)
    power = np.zeros((a, geom.num_range_bins), dtype=np.float32)
    bins = (dist / geom.range_resolution).astype(np.intp)
    np.add.at(power, (ray_idx // k, bins), 1.0 / k)
    if speckle > 0.0:
        if rng is None:
            rng = np.random.default_rng(0)
        occupied = power > 0
        noise = rng.gamma(1.0 / speckle, speckle, size=power.shape)
        power[occupied] *= noise[occupied].astype(np.float32)
    period_us = round(1e6 / rate_hz)
    azimuth_times = scan_time + (np.arange(a) * period_us) // a
    return RadarScan(power=power, azimuth_times=azimuth_times,
                     range_resolution=geom.range_resolution, frame=frame,
                     scan_time=scan_time, rate_hz=rate_hz)


def _centered_samples(half: float, spacing: float) -> np.ndarray:
    """Uniformly spaced offsets covering [-half, half], at least one."""
    n = max(1, int(math.ceil(2.0 * half / spacing)))
    return ((np.arange(n) + 0.5) / n) * 2.0 * half - half


def ground_truth_polar_grid(scene: Scene, pose_world_sensor: Pose,
                            t: Timestamp, geom: PolarGeometry,
                            class_map: ClassMap | None = None,
                            sample_spacing: float | None = None) -> np.ndarray:
    """Target-taxonomy occupancy of every polar cell, from geometry alone.

    Each object whose height interval contains the radar scan plane is
    covered with a dense metric sample grid (default spacing: a quarter of
    the range resolution) and every cell receiving a sample is marked; this
    catches structures much thinner than a far-range cell. A cell touched
    by several objects takes the one depositing the most samples. Cells
    touching no object are empty.
    """
    if class_map is None:
        class_map = default_class_map()
    arr = scene.at_time(t)
    origin = np.asarray(pose_world_sensor.translation)
    z_plane = origin[2]
    # world -> sensor, restricted to the scan plane (planar ego motion)
    rot = pose_world_sensor.rotation.to_matrix()
    spacing = sample_spacing or geom.range_resolution / 4.0

    a_bins, r_bins = geom.num_azimuths, geom.num_range_bins
    counts = np.zeros((arr.n, a_bins * r_bins), dtype=np.int32)
    for k in range(arr.n):
        if not (arr.z0[k] <= z_plane <= arr.z1[k]):
            continue
        xs = _centered_samples(arr.hx[k], spacing)
        ys = _centered_samples(arr.hy[k], spacing)
        lx = np.repeat(xs, ys.size)
        ly = np.tile(ys, xs.size)
        if arr.is_cyl[k]:
            keep = lx * lx + ly * ly <= arr.radius[k] ** 2
            lx, ly = lx[keep], ly[keep]
            if lx.size == 0:
                lx = np.zeros(1)
                ly = np.zeros(1)
        c_, s_ = arr.cos[k], arr.sin[k]
        wx = c_ * lx - s_ * ly + arr.cx[k]
        wy = s_ * lx + c_ * ly + arr.cy[k]
        dx = wx - origin[0]
        dy = wy - origin[1]
        sx = rot[0, 0] * dx + rot[1, 0] * dy
        sy = rot[0, 1] * dx + rot[1, 1] * dy
        rng_m = np.hypot(sx, sy)
        ok = rng_m < geom.max_range
        if not ok.any():
            continue
        az = np.mod(np.arctan2(sy[ok], sx[ok]), TWO_PI)
        a_idx = np.minimum((az / geom.azimuth_bin_width).astype(np.intp),
                           a_bins - 1)
        r_idx = (rng_m[ok] / geom.range_resolution).astype(np.intp)
        np.add.at(counts[k], a_idx * r_bins + r_idx, 1)

    table = class_map.lookup_table()
    grid = np.zeros(a_bins * r_bins, dtype=np.uint8)
    any_hit = counts.sum(axis=0) > 0
    if any_hit.any():
        winner = counts[:, any_hit].argmax(axis=0)
        src = arr.cls[winner].astype(np.uint8)
        tgt = table[src]
        tgt = np.where(tgt == UNLABELED, 0, tgt)
        grid[any_hit] = tgt
    return grid.reshape(a_bins, r_bins)


def is_visible(scene: Scene, t: Timestamp, eye: np.ndarray,
               points_world: np.ndarray, tol: float = 1e-3) -> np.ndarray:
    """True where the straight line from eye to each point is unobstructed."""
    arr = scene.at_time(t)
    eye = np.asarray(eye, dtype=float)
    rel = np.asarray(points_world, dtype=float) - eye
    dist = np.linalg.norm(rel, axis=1)
    dirs = rel / np.maximum(dist, 1e-12)[:, None]
    hit_t, _, _ = first_hit(arr, eye, dirs)
    return hit_t >= dist - tol


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear ego path traversed at constant speed, z = 0."""

    waypoints: np.ndarray  # (k, 2)
    speed_mps: float

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float).reshape(-1, 2)
        if wp.shape[0] < 2:
            raise ValueError("a trajectory needs at least 2 waypoints")
        if self.speed_mps < 0:
            raise ValueError("speed must be non-negative")
        object.__setattr__(self, "waypoints", wp)

    def total_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.waypoints, axis=0),
                                           axis=1)))

    def pose_at(self, arc: float) -> Pose:
        """Vehicle pose (world <- vehicle) at the given arc length."""
        segs = np.diff(self.waypoints, axis=0)
        lens = np.linalg.norm(segs, axis=1)
        cum = np.concatenate([[0.0], np.cumsum(lens)])
        arc = min(max(arc, 0.0), float(cum[-1]))
        i = int(np.searchsorted(cum, arc, side="right") - 1)
        i = min(i, len(lens) - 1)
        frac = 0.0 if lens[i] == 0 else (arc - cum[i]) / lens[i]
        pos = self.waypoints[i] + frac * segs[i]
        heading = math.atan2(segs[i][1], segs[i][0])
        rot = UnitQuaternion.from_axis_angle((0, 0, 1), heading)
        return Pose(rot, np.array([pos[0], pos[1], 0.0]),
                    "world", "vehicle")

    def sample_chain(self, t_start: Timestamp, duration_s: float,
                     rate_hz: float, base_offset: Pose,
                     base_frame: str) -> PoseChain:
        """Sample world <- base poses, base mounted at ``base_offset`` on
        the vehicle."""
        period = round(1e6 / rate_hz)
        count = int(round(duration_s * 1e6)) // period + 1
        entries = []
        for k in range(count):
            t = t_start + k * period
            arc = self.speed_mps * (t - t_start) / 1e6
            pose = self.pose_at(arc).compose(base_offset)
            entries.append((t, Pose(pose.rotation, pose.translation,
                                    "world", base_frame)))
        return PoseChain(entries)
