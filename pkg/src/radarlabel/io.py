"""On-disk formats for every artifact the pipeline reads or writes.

All binary payloads are little-endian. Text files are ASCII, one record
per line; lines starting with '#' are comments. Paths inside manifests and
dataset indices are relative to the file that contains them.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .geometry import Pose, Timestamp, UnitQuaternion
from .posechain import PoseChain
from .rig import Rig
from .sensors import CameraModel, LidarScan, RadarScan

_CLOUD_DTYPE = np.dtype([("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                         ("label", "u1")])


# -- rig ---------------------------------------------------------------

def save_rig(rig: Rig, path) -> None:
    """One line per frame: `name: x y z qw qx qy qz` (pose radar <- frame)."""
    lines = [f"reference: {rig.reference}"]
    for frame in rig.frames:
        p = rig.to_reference(frame)
        q = p.rotation
        t = p.translation
        vals = [float(t[0]), float(t[1]), float(t[2]), q.w, q.x, q.y, q.z]
        lines.append(f"{frame}: " + " ".join(repr(v) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")


def load_rig(path) -> Rig:
    reference = None
    extrinsics = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(":")
        key = key.strip()
        if key == "reference":
            reference = rest.strip()
            continue
        vals = [float(v) for v in rest.split()]
        if len(vals) != 7:
            raise ValueError(f"rig line for {key!r} needs 7 values")
        if reference is None:
            raise ValueError("rig file must declare its reference frame first")
        pose = Pose(UnitQuaternion(vals[3], vals[4], vals[5], vals[6]),
                    np.array(vals[:3]), reference, key)
        extrinsics[key] = pose
    if reference is None:
        raise ValueError("rig file missing reference frame")
    return Rig(reference, extrinsics)


# -- pose chain --------------------------------------------------------

def save_pose_chain(chain: PoseChain, path) -> None:
    """Rows `timestamp_us,x,y,z,qw,qx,qy,qz` sorted by timestamp."""
    lines = ["# timestamp_us,x,y,z,qw,qx,qy,qz"]
    for t, pose in chain.entries():
        q = pose.rotation
        tr = pose.translation
        vals = [float(tr[0]), float(tr[1]), float(tr[2]), q.w, q.x, q.y, q.z]
        lines.append(f"{int(t)}," + ",".join(repr(v) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")


def load_pose_chain(path, frame_from: str = "world",
                    frame_to: str = "radar") -> PoseChain:
    entries = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        vals = line.split(",")
        if len(vals) != 8:
            raise ValueError("pose rows need 8 comma-separated values")
        t = int(vals[0])
        x, y, z, qw, qx, qy, qz = (float(v) for v in vals[1:])
        entries.append((t, Pose(UnitQuaternion(qw, qx, qy, qz),
                                np.array([x, y, z]), frame_from, frame_to)))
    return PoseChain(entries)


# -- camera ------------------------------------------------------------

def save_camera(camera: CameraModel, path) -> None:
    text = (f"fx: {camera.fx!r}\nfy: {camera.fy!r}\n"
            f"cx: {camera.cx!r}\ncy: {camera.cy!r}\n"
            f"width: {camera.width}\nheight: {camera.height}\n"
            f"frame: {camera.frame}\nrate_hz: {camera.rate_hz!r}\n")
    Path(path).write_text(text)


def load_camera(path) -> CameraModel:
    kv = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition(":")
        kv[key.strip()] = val.strip()
    return CameraModel(fx=float(kv["fx"]), fy=float(kv["fy"]),
                       cx=float(kv["cx"]), cy=float(kv["cy"]),
                       width=int(kv["width"]), height=int(kv["height"]),
                       frame=kv["frame"], rate_hz=float(kv.get("rate_hz", 25.0)))


# -- class-index rasters (semantic images, label grids) -----------------

def save_label_image(labels: np.ndarray, path) -> None:
    """8-bit single-channel PNG of class indices."""
    arr = np.asarray(labels, dtype=np.uint8)
    Image.fromarray(arr, mode="L").save(Path(path), format="PNG")


def load_label_image(path) -> np.ndarray:
    with Image.open(Path(path)) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8)


# -- lidar scans --------------------------------------------------------

def save_lidar(scan: LidarScan, path) -> None:
    """uint32 point count, then count little-endian float32 (x, y, z)."""
    pts = np.ascontiguousarray(scan.points, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(np.uint32(pts.shape[0]).tobytes())
        fh.write(pts.tobytes())


def load_lidar(path, frame: str, time: Timestamp,
               rate_hz: float = 20.0) -> LidarScan:
    raw = Path(path).read_bytes()
    count = int(np.frombuffer(raw[:4], dtype="<u4")[0])
    pts = np.frombuffer(raw[4:4 + 12 * count], dtype="<f4").reshape(count, 3)
    return LidarScan(points=pts.astype(float), frame=frame, time=time,
                     rate_hz=rate_hz)


# -- radar scans --------------------------------------------------------

def save_radar(scan: RadarScan, path) -> None:
    """Two text header lines, then raw (A, R) float32 power.

    Line 1: `radar A R range_resolution scan_time_us rate_hz frame`
    Line 2: space-separated azimuth timestamps (microseconds).
    """
    header = (f"radar {scan.num_azimuths} {scan.num_range_bins} "
              f"{scan.range_resolution!r} {scan.scan_time} "
              f"{scan.rate_hz!r} {scan.frame}\n")
    times = " ".join(str(int(t)) for t in scan.azimuth_times) + "\n"
    power = np.ascontiguousarray(scan.power, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(times.encode("ascii"))
        fh.write(power.tobytes())


def load_radar(path) -> RadarScan:
    with open(path, "rb") as fh:
        head = fh.readline().decode("ascii").split()
        if not head or head[0] != "radar":
            raise ValueError(f"{path}: not a radar scan file")
        a, r = int(head[1]), int(head[2])
        res = float(head[3])
        scan_time = int(head[4])
        rate = float(head[5])
        frame = head[6]
        times = np.array([int(v) for v in fh.readline().split()],
                         dtype=np.int64)
        power = np.frombuffer(fh.read(4 * a * r), dtype="<f4").reshape(a, r)
    return RadarScan(power=power, azimuth_times=times, range_resolution=res,
                     frame=frame, scan_time=scan_time, rate_hz=rate)


# -- labelled clouds ----------------------------------------------------

def save_labeled_cloud(cloud, path) -> None:
    """uint32 count, then packed (x, y, z: float32, label: uint8) records."""
    rec = np.empty(len(cloud), dtype=_CLOUD_DTYPE)
    rec["x"] = cloud.points[:, 0]
    rec["y"] = cloud.points[:, 1]
    rec["z"] = cloud.points[:, 2]
    rec["label"] = cloud.labels
    with open(path, "wb") as fh:
        fh.write(np.uint32(len(cloud)).tobytes())
        fh.write(rec.tobytes())


def load_labeled_cloud(path, frame: str, time: Timestamp):
    from .labeling import LabeledPointCloud

    raw = Path(path).read_bytes()
    count = int(np.frombuffer(raw[:4], dtype="<u4")[0])
    rec = np.frombuffer(raw[4:4 + _CLOUD_DTYPE.itemsize * count],
                        dtype=_CLOUD_DTYPE)
    pts = np.stack([rec["x"], rec["y"], rec["z"]], axis=1).astype(float)
    return LabeledPointCloud(points=pts, labels=rec["label"].copy(),
                             frame=frame, time=time)


# -- float grids (Cartesian power channels) ------------------------------

def save_float_grid(grid: np.ndarray, cell_size: float, path) -> None:
    """Header `f32grid rows cols cell_size`, then raw float32."""
    arr = np.ascontiguousarray(grid, dtype="<f4")
    header = f"f32grid {arr.shape[0]} {arr.shape[1]} {float(cell_size)!r}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(arr.tobytes())


def load_float_grid(path) -> tuple[np.ndarray, float]:
    with open(path, "rb") as fh:
        head = fh.readline().decode("ascii").split()
        if not head or head[0] != "f32grid":
            raise ValueError(f"{path}: not a float grid file")
        rows, cols = int(head[1]), int(head[2])
        cell = float(head[3])
        grid = np.frombuffer(fh.read(4 * rows * cols),
                             dtype="<f4").reshape(rows, cols)
    return grid, cell


# -- manifests, dataset index, json helpers ------------------------------

def save_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


def append_index_line(record: dict, fh) -> None:
    fh.write(json.dumps(record, sort_keys=True) + "\n")


def save_index(records: list[dict], path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            append_index_line(rec, fh)


def load_index(path) -> list[dict]:
    records = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            records.append(json.loads(line))
    return records


# -- class map / weights tables ------------------------------------------

def save_class_map(class_map, path) -> None:
    """Rows `source_id,source_name,target_id,target_name`."""
    from .taxonomy import SOURCE_NAMES

    lines = ["# source_id,source_name,target_id,target_name"]
    for src in sorted(class_map.mapping):
        tgt = class_map.mapping[src]
        tgt_id = "omit" if tgt is None else str(tgt)
        tgt_name = "omit" if tgt is None else class_map.target_names[tgt]
        lines.append(f"{src},{SOURCE_NAMES.get(src, 'unknown')},{tgt_id},{tgt_name}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_class_map(path):
    from .taxonomy import ClassMap

    mapping = {}
    names = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        src, _, tgt, tgt_name = line.split(",")
        if tgt == "omit":
            mapping[int(src)] = None
        else:
            mapping[int(src)] = int(tgt)
            names[int(tgt)] = tgt_name
    target_names = tuple(names[i] for i in range(max(names) + 1))
    return ClassMap(mapping=mapping, target_names=target_names)


def save_weights(weights, path) -> None:
    """Rows `target_id,weight`."""
    lines = ["# target_id,weight"]
    for i, w in enumerate(weights.w):
        lines.append(f"{i},{float(w)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_weights(path) -> np.ndarray:
    vals = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        idx, w = line.split(",")
        vals[int(idx)] = float(w)
    return np.array([vals[i] for i in range(len(vals))])
