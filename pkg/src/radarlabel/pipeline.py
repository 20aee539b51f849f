"""Dataset generation: run the labelling pipeline over a recording manifest.

Two stages. Stage A labels every LiDAR scan from its temporally nearest
camera images (motion corrected through the pose chain) and expresses the
cloud in the radar frame at the scan's own time. Stage B walks the radar
scans; each radar scan with two predecessors and pose coverage becomes one
dataset item: accumulated labelled cloud, polar and Cartesian label grids,
and a three-scan aligned power stack.

Every per-item random decision is seeded with ``global_seed XOR item
timestamp``, so outputs are identical regardless of worker count or
scheduling, and a streaming run yields exactly what a materialized run
writes.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .geometry import Timestamp
from .grids import (CartesianGeometry, LabelGrid, PolarGeometry, RadarStack,
                    accumulate_horizon, build_stack, polar_to_cartesian,
                    rasterize)
from .labeling import LabeledPointCloud, label_pointcloud, to_radar_frame
from .posechain import PoseChain
from .rig import Rig
from .sensors import CameraModel, SemanticImage
from .taxonomy import TARGET_NAMES, ClassMap, default_class_map

log = logging.getLogger(__name__)

DEFAULT_WINDOW_SECS = 8.0


@dataclass
class Recording:
    """A raw multi-sensor recording, loaded lazily from a manifest."""

    root: Path
    rig: Rig
    chain: PoseChain
    cameras: list[tuple[CameraModel, np.ndarray, list[Path]]]
    lidars: list[dict]
    radar_times: list[int]
    radar_paths: list[Path]
    radar_geometry: PolarGeometry


def load_recording(manifest_path) -> Recording:
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    manifest = io.load_json(manifest_path)
    rig = io.load_rig(root / manifest["rig"])
    chain = io.load_pose_chain(root / manifest["poses"],
                               frame_to=rig.reference)
    cameras = []
    for cam in manifest.get("cameras", []):
        model = io.load_camera(root / cam["config"])
        times = np.array([img["time_us"] for img in cam["images"]],
                         dtype=np.int64)
        paths = [root / img["file"] for img in cam["images"]]
        cameras.append((model, times, paths))
    lidars = []
    for lid in manifest.get("lidars", []):
        lidars.append({
            "frame": lid["frame"],
            "rate_hz": float(lid.get("rate_hz", 20.0)),
            "times": [int(s["time_us"]) for s in lid["scans"]],
            "paths": [root / s["file"] for s in lid["scans"]],
        })
    radar = manifest["radar"]
    radar_times = [int(s["time_us"]) for s in radar["scans"]]
    radar_paths = [root / s["file"] for s in radar["scans"]]
    if not radar_times:
        raise ValueError("manifest lists no radar scans")
    first = io.load_radar(radar_paths[0])
    geom = PolarGeometry.of_scan(first)
    return Recording(root=root, rig=rig, chain=chain, cameras=cameras,
                     lidars=lidars, radar_times=radar_times,
                     radar_paths=radar_paths, radar_geometry=geom)


def nearest_images(rec: Recording, t: Timestamp) -> list[SemanticImage]:
    """Temporally nearest image of each camera, skipping cameras whose
    nearest frame has no pose coverage."""
    images = []
    for model, times, paths in rec.cameras:
        if times.size == 0:
            continue
        idx = int(np.argmin(np.abs(times - t)))
        t_img = int(times[idx])
        if not rec.chain.covers(t_img):
            log.warning("camera %s frame at %d outside pose chain; skipped",
                        model.frame, t_img)
            continue
        labels = io.load_label_image(paths[idx])
        images.append(SemanticImage(labels=labels, camera=model, time=t_img))
    return images


def label_all_scans(rec: Recording, seed: int,
                    correct_motion: bool = True) -> list[LabeledPointCloud]:
    """Stage A: labelled radar-frame clouds, one per usable LiDAR scan."""
    clouds = []
    for lid in rec.lidars:
        for t, path in zip(lid["times"], lid["paths"]):
            if not rec.chain.covers(t):
                log.warning("lidar scan %s at %d outside pose chain; skipped",
                            lid["frame"], t)
                continue
            scan = io.load_lidar(path, frame=lid["frame"], time=t,
                                 rate_hz=lid["rate_hz"])
            images = nearest_images(rec, t)
            cloud = label_pointcloud(scan, images, rec.rig, rec.chain,
                                     seed=seed ^ t,
                                     correct_motion=correct_motion)
            clouds.append(to_radar_frame(cloud, rec.rig, rec.chain, t))
    # stable sort: equal times keep manifest order, so runs are repeatable
    clouds.sort(key=lambda c: c.time)
    return clouds


@dataclass
class GenerateConfig:
    seed: int = 0
    window_secs: float = DEFAULT_WINDOW_SECS
    cart_size: int | None = None  # default: number of range bins
    metres_per_pixel: float | None = None  # default: full disc fits
    workers: int = 1

    def resolve(self, geom: PolarGeometry) -> tuple[int, float]:
        n = self.cart_size or geom.num_range_bins
        mpp = self.metres_per_pixel or 2.0 * geom.max_range / n
        return n, mpp


@dataclass
class Item:
    """One training example plus the metadata that goes into the index."""

    item_id: str
    t_radar: Timestamp
    scan_times: tuple[int, int, int]
    ego_xy: tuple[float, float]
    polar: LabelGrid
    cart: np.ndarray
    stack: RadarStack
    num_points: int


def item_id_for(t_radar: Timestamp) -> str:
    return f"item_{t_radar:016d}"


def eligible_items(rec: Recording) -> list[int]:
    """Radar scan indices that can become items: pose coverage for the scan
    and its two predecessors."""
    out = []
    for i, t in enumerate(rec.radar_times):
        if i < 2:
            continue
        window = rec.radar_times[i - 2:i + 1]
        if all(rec.chain.covers(ts) for ts in window):
            out.append(i)
        else:
            log.warning("radar scan at %d lacks pose coverage; skipped", t)
    if not out:
        log.warning("no radar scan is fully covered by the pose chain; "
                    "0 items generated")
    return out


def compute_item(rec: Recording, clouds: list[LabeledPointCloud], idx: int,
                 cfg: GenerateConfig,
                 class_map: ClassMap | None = None) -> Item:
    if class_map is None:
        class_map = default_class_map()
    geom = rec.radar_geometry
    t_radar = rec.radar_times[idx]
    window_us = round(cfg.window_secs * 1e6)
    acc = accumulate_horizon(clouds, rec.chain, t_radar, window_us)
    seed = cfg.seed ^ t_radar
    polar = rasterize(acc, geom, seed=seed, class_map=class_map)
    n, mpp = cfg.resolve(geom)
    cart = polar_to_cartesian(polar.labels, n, mpp, geom, mode="nearest")
    scans = [io.load_radar(rec.radar_paths[i]) for i in (idx - 2, idx - 1, idx)]
    for scan in scans:
        if PolarGeometry.of_scan(scan) != geom:
            raise ValueError(f"radar scan at {scan.scan_time} does not "
                             f"match the recording geometry")
    stack = build_stack(scans, rec.chain, n, mpp)
    ego = rec.chain.interpolate(t_radar).translation
    return Item(item_id=item_id_for(t_radar), t_radar=t_radar,
                scan_times=tuple(s.scan_time for s in scans),
                ego_xy=(float(ego[0]), float(ego[1])),
                polar=polar, cart=cart, stack=stack, num_points=len(acc))


def stream_items(manifest_path, cfg: GenerateConfig,
                 class_map: ClassMap | None = None):
    """Yield items one by one for direct training consumption."""
    rec = load_recording(manifest_path)
    clouds = label_all_scans(rec, cfg.seed)
    for idx in eligible_items(rec):
        yield compute_item(rec, clouds, idx, cfg, class_map)


def _item_record(item: Item, files: dict) -> dict:
    return {
        "item": item.item_id,
        "t_radar": item.t_radar,
        "t_scans": list(item.scan_times),
        "ego_xy": [item.ego_xy[0], item.ego_xy[1]],
        "num_points": item.num_points,
        "split": None,  # filled in by the split command
        "files": files,
    }


def _write_item(item: Item, out: Path, mpp: float) -> dict:
    files = {
        "label_polar": f"grids_polar/{item.item_id}.png",
        "label_cart": f"grids_cart/{item.item_id}.png",
        "stack": [f"stacks/{item.item_id}_{k}.bin" for k in range(3)],
    }
    io.save_label_image(item.polar.labels, out / files["label_polar"])
    io.save_label_image(item.cart, out / files["label_cart"])
    for k in range(3):
        io.save_float_grid(item.stack.channels[k], mpp, out / files["stack"][k])
    return _item_record(item, files)


# worker-side state for process pools, installed once per worker
_STATE: dict = {}


def _init_worker(rec: Recording, clouds: list[LabeledPointCloud],
                 cfg: GenerateConfig, class_map: ClassMap, out: Path):
    _STATE["rec"] = rec
    _STATE["clouds"] = clouds
    _STATE["cfg"] = cfg
    _STATE["class_map"] = class_map
    _STATE["out"] = out


def _run_item(idx: int):
    rec = _STATE["rec"]
    cfg = _STATE["cfg"]
    try:
        item = compute_item(rec, _STATE["clouds"], idx, cfg,
                            _STATE["class_map"])
        _, mpp = cfg.resolve(rec.radar_geometry)
        record = _write_item(item, _STATE["out"], mpp)
        return ("ok", idx, record)
    except Exception as exc:  # per-item isolation; counted by the caller
        log.exception("item at radar index %d failed", idx)
        return ("error", idx, f"{type(exc).__name__}: {exc}")


def generate_dataset(manifest_path, out_dir, cfg: GenerateConfig,
                     class_map: ClassMap | None = None) -> dict:
    """Materialize the dataset; returns a summary dict with counts.

    Item failures are logged and skipped; the summary reports them so the
    CLI can decide the exit code.
    """
    if class_map is None:
        class_map = default_class_map()
    out = Path(out_dir)
    for sub in ("clouds", "grids_polar", "grids_cart", "stacks"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    rec = load_recording(manifest_path)
    clouds = label_all_scans(rec, cfg.seed)
    for i, cloud in enumerate(clouds):
        io.save_labeled_cloud(
            cloud, out / "clouds" / f"{cloud.time:016d}_{i:04d}.bin")

    indices = eligible_items(rec)
    results = []
    if cfg.workers <= 1:
        _init_worker(rec, clouds, cfg, class_map, out)
        results = [_run_item(i) for i in indices]
        _STATE.clear()
    else:
        with ProcessPoolExecutor(
                max_workers=cfg.workers, initializer=_init_worker,
                initargs=(rec, clouds, cfg, class_map, out)) as pool:
            results = list(pool.map(_run_item, indices))

    records = sorted((r[2] for r in results if r[0] == "ok"),
                     key=lambda rec_: rec_["t_radar"])
    failures = [(r[1], r[2]) for r in results if r[0] == "error"]
    io.save_index(records, out / "index.jsonl")

    geom = rec.radar_geometry
    n, mpp = cfg.resolve(geom)
    io.save_json({
        "seed": cfg.seed,
        "window_us": round(cfg.window_secs * 1e6),
        "polar": {"azimuths": geom.num_azimuths,
                  "range_bins": geom.num_range_bins,
                  "range_resolution": geom.range_resolution},
        "cart": {"size": n, "metres_per_pixel": mpp},
        "class_names": list(class_map.target_names if class_map else
                            TARGET_NAMES),
        "num_items": len(records),
        "num_failures": len(failures),
    }, out / "dataset.json")
    return {"items": len(records), "failures": len(failures),
            "attempted": len(indices)}


# -- augmentation ---------------------------------------------------------

def augment_item(stack: np.ndarray, labels: np.ndarray, seed: int):
    """Independently flip both axes with probability 0.5 each (seeded).

    The power channels and the label grid are flipped identically so their
    spatial correspondence is preserved. Returns (stack, labels, flips)
    where flips is (flip_rows, flip_cols).
    """
    rng = np.random.default_rng(seed)
    flip_rows = bool(rng.random() < 0.5)
    flip_cols = bool(rng.random() < 0.5)
    if flip_rows:
        stack = np.flip(stack, axis=-2)
        labels = np.flip(labels, axis=-2)
    if flip_cols:
        stack = np.flip(stack, axis=-1)
        labels = np.flip(labels, axis=-1)
    return np.ascontiguousarray(stack), np.ascontiguousarray(labels), (
        flip_rows, flip_cols)


# -- class statistics ------------------------------------------------------

def class_counts(dataset_dir, item_ids=None, kind: str = "cart",
                 num_classes: int = len(TARGET_NAMES)) -> np.ndarray:
    """Per-class cell counts over the label grids of the given items."""
    dataset_dir = Path(dataset_dir)
    index = io.load_index(dataset_dir / "index.jsonl")
    wanted = None if item_ids is None else set(item_ids)
    counts = np.zeros(num_classes, dtype=np.int64)
    key = "label_cart" if kind == "cart" else "label_polar"
    for rec in index:
        if wanted is not None and rec["item"] not in wanted:
            continue
        labels = io.load_label_image(dataset_dir / rec["files"][key])
        counts += np.bincount(labels.reshape(-1), minlength=num_classes)[
            :num_classes]
    return counts
