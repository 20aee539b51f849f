"""Declarative scenario configs and their materialization to disk.

A scenario config is a plain dict (normally loaded from YAML) describing
objects, the ego trajectory, sensor mounts and rates, and a seed. From it
we emit a complete raw recording: rig file, pose file, camera configs,
semantic images, LiDAR and radar scans, ground-truth label grids, and a
manifest that indexes everything. Regeneration with the same config and
seed is byte-identical.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import io
from .geometry import Pose, UnitQuaternion, seconds_to_us
from .grids import PolarGeometry, polar_to_cartesian
from .rig import Rig
from .sensors import CameraModel
from .taxonomy import SOURCE_IDS, default_class_map
from .world import (_CAM_IN_VEHICLE, LidarPattern, Scene, SceneObject,
                    Trajectory, ground_truth_polar_grid,
                    render_semantic_image, simulate_lidar, simulate_radar)

DEFAULT_T_START = 100_000_000  # microseconds


def _class_id(value) -> int:
    if isinstance(value, int):
        return value
    return SOURCE_IDS[value]


def _object_from_config(cfg: dict) -> SceneObject:
    shape = cfg["shape"]
    common = dict(
        shape=shape,
        class_id=_class_id(cfg["class"]),
        x=float(cfg["x"]),
        y=float(cfg["y"]),
        yaw=math.radians(float(cfg.get("yaw_deg", 0.0))),
        z0=float(cfg.get("z0", 0.0)),
        velocity=tuple(cfg.get("velocity", (0.0, 0.0))),
    )
    height = float(cfg.get("height", 2.0))
    common["z1"] = common["z0"] + height
    if shape == "cylinder":
        return SceneObject(radius=float(cfg["radius"]), **common)
    if shape == "billboard":
        return SceneObject(size_x=float(cfg["width"]), **common)
    if shape == "box":
        size = cfg["size"]
        return SceneObject(size_x=float(size[0]), size_y=float(size[1]),
                           **common)
    raise ValueError(f"unknown shape {shape!r}")


def build_scene(config: dict) -> Scene:
    objects = tuple(_object_from_config(o) for o in config["objects"])
    return Scene(objects=objects, t0=int(config.get("t_start_us",
                                                    DEFAULT_T_START)))


def build_trajectory(config: dict) -> Trajectory:
    traj = config["trajectory"]
    return Trajectory(waypoints=np.asarray(traj["waypoints"], dtype=float),
                      speed_mps=float(traj["speed_mps"]))


def _mount_pose(mount: dict, frame: str, optical: bool = False) -> Pose:
    """Vehicle <- sensor transform for a mount dict {x, y, z, yaw_deg}."""
    yaw = math.radians(float(mount.get("yaw_deg", 0.0)))
    rot = UnitQuaternion.from_axis_angle((0, 0, 1), yaw)
    if optical:
        rot = rot.multiply(_CAM_IN_VEHICLE)
    t = np.array([float(mount.get("x", 0.0)), float(mount.get("y", 0.0)),
                  float(mount.get("z", 0.0))])
    return Pose(rot, t, "vehicle", frame)


def _camera_from_config(cfg: dict) -> CameraModel:
    width = int(cfg["width"])
    height = int(cfg["height"])
    fov = math.radians(float(cfg.get("fov_deg", 85.0)))
    fx = (width / 2.0) / math.tan(fov / 2.0)
    return CameraModel(fx=fx, fy=fx, cx=width / 2.0, cy=height / 2.0,
                       width=width, height=height, frame=cfg["name"],
                       rate_hz=float(cfg.get("rate_hz", 25.0)))


def _event_times(t_start: int, duration_us: int, rate_hz: float,
                 phase_us: int = 0) -> list[int]:
    period = round(1e6 / rate_hz)
    times = []
    t = t_start + phase_us
    while t <= t_start + duration_us:
        times.append(t)
        t += period
    return times


def sensor_world_pose(trajectory: Trajectory, speed_arc_t0: int,
                      mount: Pose, t: int) -> Pose:
    """Exact world <- sensor pose at time t (no chain interpolation)."""
    arc = trajectory.speed_mps * (t - speed_arc_t0) / 1e6
    return trajectory.pose_at(arc).compose(mount)


def generate_scenario(config: dict, out_dir) -> Path:
    """Materialize a scenario; returns the path of the written manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = int(config.get("seed", 0))
    t_start = int(config.get("t_start_us", DEFAULT_T_START))
    duration_us = seconds_to_us(float(config["duration_s"]))
    scene = build_scene(config)
    trajectory = build_trajectory(config)
    class_map = default_class_map()

    need = trajectory.speed_mps * duration_us / 1e6
    if trajectory.total_length() < need - 1e-6:
        raise ValueError(f"trajectory shorter ({trajectory.total_length()} m) "
                         f"than the driven distance ({need} m)")

    radar_cfg = config["radar"]
    radar_mount = _mount_pose(radar_cfg.get("mount", {}), "radar")
    geom = PolarGeometry(int(radar_cfg["azimuths"]),
                         int(radar_cfg["range_bins"]),
                         float(radar_cfg["range_resolution"]))
    radar_rate = float(radar_cfg.get("rate_hz", 4.0))
    speckle = float(radar_cfg.get("speckle", 0.0))

    # pose chain of the radar (= rig reference) frame
    pose_rate = float(config.get("pose_rate_hz", 100.0))
    chain = trajectory.sample_chain(t_start, duration_us / 1e6, pose_rate,
                                    radar_mount, "radar")
    io.save_pose_chain(chain, out / "poses.csv")

    # rig extrinsics: radar <- sensor, composed through the vehicle frame
    mounts: dict[str, Pose] = {}
    cameras: list[CameraModel] = []
    for cam_cfg in config.get("cameras", []):
        cam = _camera_from_config(cam_cfg)
        cameras.append(cam)
        mounts[cam.frame] = _mount_pose(cam_cfg.get("mount", {}), cam.frame,
                                        optical=True)
    lidar_cfgs = config.get("lidars", [])
    for lid_cfg in lidar_cfgs:
        mounts[lid_cfg["name"]] = _mount_pose(lid_cfg.get("mount", {}),
                                              lid_cfg["name"])
    extrinsics = {frame: radar_mount.inverse().compose(m)
                  for frame, m in mounts.items()}
    rig = Rig("radar", extrinsics)
    io.save_rig(rig, out / "rig.txt")
    io.save_class_map(class_map, out / "class_map.csv")

    manifest: dict = {
        "name": config.get("name", "scenario"),
        "seed": seed,
        "rig": "rig.txt",
        "poses": "poses.csv",
        "class_map": "class_map.csv",
        "cameras": [],
        "lidars": [],
        "radar": {"frame": "radar", "rate_hz": radar_rate, "scans": []},
        "ground_truth": {
            "polar": [],
            "cart": [],
            "geometry": {"azimuths": geom.num_azimuths,
                         "range_bins": geom.num_range_bins,
                         "range_resolution": geom.range_resolution},
        },
    }

    noise_px = int(config.get("label_noise_px", 0))
    for cam_cfg, cam in zip(config.get("cameras", []), cameras):
        cam_dir = out / "images" / cam.frame
        cam_dir.mkdir(parents=True, exist_ok=True)
        cfg_path = out / f"cameras_{cam.frame}.txt"
        io.save_camera(cam, cfg_path)
        entry = {"frame": cam.frame, "config": cfg_path.name, "images": []}
        times = _event_times(t_start, duration_us, cam.rate_hz,
                             int(cam_cfg.get("phase_us", 0)))
        for t in times:
            pose = sensor_world_pose(trajectory, t_start, mounts[cam.frame], t)
            img = render_semantic_image(scene, cam, pose, t, noise_px=noise_px)
            rel = f"images/{cam.frame}/{t:016d}.png"
            io.save_label_image(img.labels, out / rel)
            entry["images"].append({"time_us": t, "file": rel})
        manifest["cameras"].append(entry)

    for lid_cfg in lidar_cfgs:
        frame = lid_cfg["name"]
        lid_dir = out / "lidar" / frame
        lid_dir.mkdir(parents=True, exist_ok=True)
        pattern = LidarPattern(
            azimuth_count=int(lid_cfg.get("azimuth_count", 64)),
            elevations_deg=tuple(lid_cfg.get("elevations_deg",
                                             (-12.0, -6.0, 0.0, 6.0))),
            max_range=float(lid_cfg.get("max_range", 50.0)))
        rate = float(lid_cfg.get("rate_hz", 20.0))
        entry = {"frame": frame, "rate_hz": rate, "scans": []}
        times = _event_times(t_start, duration_us, rate,
                             int(lid_cfg.get("phase_us", 0)))
        for t in times:
            pose = sensor_world_pose(trajectory, t_start, mounts[frame], t)
            scan = simulate_lidar(scene, pose, t, pattern, frame=frame,
                                  rate_hz=rate)
            rel = f"lidar/{frame}/{t:016d}.bin"
            io.save_lidar(scan, out / rel)
            entry["scans"].append({"time_us": t, "file": rel})
        manifest["lidars"].append(entry)

    radar_dir = out / "radar"
    radar_dir.mkdir(parents=True, exist_ok=True)
    gt_dir = out / "gt"
    gt_dir.mkdir(parents=True, exist_ok=True)
    gt_stride = int(config.get("gt_stride", 1))
    cart_n = geom.num_range_bins
    cart_mpp = 2.0 * geom.max_range / cart_n
    manifest["ground_truth"]["cart_geometry"] = {
        "size": cart_n, "metres_per_pixel": cart_mpp}
    radar_times = _event_times(t_start, duration_us, radar_rate)
    for idx, t in enumerate(radar_times):
        pose = sensor_world_pose(trajectory, t_start, radar_mount, t)
        rng = np.random.default_rng(seed ^ t)
        scan = simulate_radar(scene, pose, t, geom, frame="radar",
                              rate_hz=radar_rate, speckle=speckle, rng=rng)
        rel = f"radar/{t:016d}.bin"
        io.save_radar(scan, out / rel)
        manifest["radar"]["scans"].append({"time_us": t, "file": rel})
        if idx % gt_stride == 0:
            gt = ground_truth_polar_grid(scene, pose, t, geom, class_map)
            rel_p = f"gt/polar_{t:016d}.png"
            io.save_label_image(gt, out / rel_p)
            manifest["ground_truth"]["polar"].append(
                {"time_us": t, "file": rel_p})
            cart = polar_to_cartesian(gt, cart_n, cart_mpp, geom,
                                      mode="nearest")
            rel_c = f"gt/cart_{t:016d}.png"
            io.save_label_image(cart, out / rel_c)
            manifest["ground_truth"]["cart"].append(
                {"time_us": t, "file": rel_c})

    manifest_path = out / "manifest.json"
    io.save_json(manifest, manifest_path)
    return manifest_path


# -- built-in scenario families ------------------------------------------


def corridor_config(name: str = "corridor", seed: int = 7,
                    duration_s: float = 10.0, speed_mps: float = 10.0,
                    half_gap: float = 8.0, pole_spacing: float = 15.0,
                    camera_rate_hz: float = 12.5, camera_px: int = 128,
                    lidar_rate_hz: float = 20.0, lidar_max_range: float = 50.0,
                    radar_azimuths: int = 128, radar_range_bins: int = 160,
                    radar_resolution: float = 0.625,
                    wall_margin: float = 120.0,
                    extra_objects: list | None = None) -> dict:
    """Straight urban corridor: walls, poles, parked cars, vegetation.

    The ego drives the +x axis at constant speed. Walls extend
    ``wall_margin`` beyond both ends of the driven path so the radar
    horizon stays inside the scene.
    """
    length = speed_mps * duration_s
    x0 = -wall_margin
    x1 = length + wall_margin
    mid = (x0 + x1) / 2.0
    span = x1 - x0
    objects: list[dict] = [
        {"shape": "box", "class": "road", "x": mid, "y": 0.0,
         "size": [span, 4.0 * half_gap], "z0": -0.2, "height": 0.2},
        {"shape": "box", "class": "building", "x": mid, "y": half_gap,
         "size": [span, 0.4], "height": 3.0},
        {"shape": "box", "class": "building", "x": mid, "y": -half_gap,
         "size": [span, 0.4], "height": 3.0},
    ]
    x = x0 + 5.0
    side = 1.0
    while x < x1 - 5.0:
        objects.append({"shape": "cylinder", "class": "pole", "x": x,
                        "y": side * (half_gap - 2.5), "radius": 0.2,
                        "height": 5.0})
        side = -side
        x += pole_spacing
    for i, xc in enumerate(np.arange(x0 + 20.0, x1 - 20.0, 47.0)):
        yc = (half_gap - 3.0) * (1 if i % 2 == 0 else -1)
        objects.append({"shape": "box", "class": "car", "x": float(xc),
                        "y": yc, "size": [4.2, 1.8], "height": 1.6})
    for i, xc in enumerate(np.arange(x0 + 33.0, x1 - 20.0, 61.0)):
        yc = (half_gap - 2.2) * (1 if i % 2 else -1)
        objects.append({"shape": "billboard", "class": "vegetation",
                        "x": float(xc), "y": yc, "width": 5.0,
                        "height": 2.5})
    for i, xc in enumerate(np.arange(x0 + 41.0, x1 - 20.0, 83.0)):
        yc = (half_gap - 3.5) * (1 if i % 2 == 0 else -1)
        objects.append({"shape": "box", "class": "person", "x": float(xc),
                        "y": yc, "size": [0.5, 0.5], "height": 1.8})
    if extra_objects:
        objects.extend(extra_objects)

    cam_height = int(camera_px * 3 / 4)
    cameras = []
    for cname, yaw in (("camera_front", 0.0), ("camera_left", 90.0),
                       ("camera_rear", 180.0), ("camera_right", -90.0)):
        cameras.append({"name": cname, "rate_hz": camera_rate_hz,
                        "width": camera_px, "height": cam_height,
                        "fov_deg": 95.0,
                        "mount": {"x": 0.0, "y": 0.0, "z": 1.6,
                                  "yaw_deg": yaw}})
    return {
        "name": name,
        "seed": seed,
        "t_start_us": DEFAULT_T_START,
        "duration_s": duration_s,
        "pose_rate_hz": 100.0,
        "trajectory": {"waypoints": [[0.0, 0.0], [length + 1.0, 0.0]],
                       "speed_mps": speed_mps},
        "radar": {"azimuths": radar_azimuths,
                  "range_bins": radar_range_bins,
                  "range_resolution": radar_resolution,
                  "rate_hz": 4.0,
                  "mount": {"x": 0.0, "y": 0.0, "z": 1.5}},
        "lidars": [{"name": "lidar_left",
                    "mount": {"x": 0.0, "y": 0.3, "z": 1.8},
                    "rate_hz": lidar_rate_hz, "phase_us": 12_000,
                    "azimuth_count": 96,
                    "elevations_deg": [-12.0, -6.0, 0.0, 6.0],
                    "max_range": lidar_max_range},
                   {"name": "lidar_right",
                    "mount": {"x": 0.0, "y": -0.3, "z": 1.8},
                    "rate_hz": lidar_rate_hz, "phase_us": 37_000,
                    "azimuth_count": 96,
                    "elevations_deg": [-12.0, -6.0, 0.0, 6.0],
                    "max_range": lidar_max_range}],
        "cameras": cameras,
        "objects": objects,
    }


def corridor_mini_config(seed: int = 7) -> dict:
    """Small, fast corridor used for golden files and determinism checks."""
    cfg = corridor_config(name="corridor_mini", seed=seed, duration_s=3.0,
                          speed_mps=8.0, camera_rate_hz=10.0, camera_px=64,
                          lidar_rate_hz=10.0, radar_azimuths=64,
                          radar_range_bins=80, radar_resolution=0.625,
                          wall_margin=60.0)
    for lid in cfg["lidars"]:
        lid["azimuth_count"] = 48
        lid["elevations_deg"] = [-8.0, 0.0, 5.0]
    return cfg


def corridor_long_config(seed: int = 11) -> dict:
    """Long straight run for label accumulation out to the radar horizon."""
    cfg = corridor_config(name="corridor_long", seed=seed, duration_s=26.0,
                          speed_mps=10.0, camera_rate_hz=8.0, camera_px=96,
                          lidar_rate_hz=10.0, pole_spacing=20.0,
                          wall_margin=130.0)
    cfg["gt_stride"] = 13
    for lid in cfg["lidars"]:
        lid["azimuth_count"] = 72
        lid["elevations_deg"] = [-6.0, 0.0, 6.0]
        # keep lidar xy at the radar mount and scans synchronous with radar
        # times, so the unaccumulated range cutoff compares exactly
        lid["mount"]["y"] = 0.0
        lid["phase_us"] = 0
    return cfg


def boundary_config(seed: int = 3, duration_s: float = 4.0) -> dict:
    """Pole-dense corridor; lots of class boundaries seen from the cameras."""
    return corridor_config(name="boundary", seed=seed, duration_s=duration_s,
                           speed_mps=10.0, half_gap=6.0, pole_spacing=2.5,
                           camera_rate_hz=12.5, camera_px=128,
                           wall_margin=80.0)


def movers_config(seed: int = 5) -> dict:
    """Corridor with a vehicle driving the opposite lane at 5 m/s."""
    mover = [{"shape": "box", "class": "car", "x": 70.0, "y": 2.5,
              "size": [4.2, 1.8], "height": 1.5, "velocity": [-5.0, 0.0]}]
    return corridor_config(name="movers", seed=seed, duration_s=6.0,
                           speed_mps=8.0, extra_objects=mover)


SCENARIOS = {
    "corridor": corridor_config,
    "corridor_mini": corridor_mini_config,
    "corridor_long": corridor_long_config,
    "boundary": boundary_config,
    "movers": movers_config,
}
