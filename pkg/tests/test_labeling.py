import numpy as np
import pytest

from radarlabel import (CameraModel, FrameError, LidarScan, Pose, PoseChain,
                        Rig, SemanticImage, UNLABELED, UnitQuaternion,
                        label_pointcloud, to_radar_frame)
from radarlabel.labeling import LabeledPointCloud
import radarlabel.world as world

from oracles import random_pose_and_matrix

RNG = np.random.default_rng(8)


def static_chain(t0=0, t1=10_000_000):
    return PoseChain([
        (t0, Pose(UnitQuaternion.identity(), np.zeros(3), "world", "radar")),
        (t1, Pose(UnitQuaternion.identity(), np.zeros(3), "world", "radar")),
    ])


def forward_camera(name="cam", width=64, height=64):
    return CameraModel(fx=64.0, fy=64.0, cx=width / 2, cy=height / 2,
                       width=width, height=height, frame=name)


def simple_rig(cam_names=("cam",), lidar="lidar"):
    ext = {lidar: Pose(UnitQuaternion.identity(), np.zeros(3), "radar",
                       lidar)}
    for name in cam_names:
        ext[name] = Pose(world._CAM_IN_VEHICLE, np.zeros(3), "radar", name)
    return Rig("radar", ext)


def uniform_image(camera, cls, t=1_000_000):
    return SemanticImage(labels=np.full((camera.height, camera.width), cls,
                                        dtype=np.uint8), camera=camera,
                         time=t)


class TestLabelPointcloud:
    def test_wall_uniform_label(self):
        cam = forward_camera()
        rig = simple_rig()
        chain = static_chain()
        # points straight ahead, inside the camera frustum
        pts = np.column_stack([RNG.uniform(5, 20, 50),
                               RNG.uniform(-2, 2, 50),
                               RNG.uniform(-1, 1, 50)])
        scan = LidarScan(points=pts, frame="lidar", time=1_000_000)
        cloud = label_pointcloud(scan, [uniform_image(cam, 11)], rig, chain)
        assert np.all(cloud.labels == 11)
        assert cloud.frame == "lidar" and cloud.time == 1_000_000
        np.testing.assert_array_equal(cloud.points, pts)

    def test_point_behind_all_cameras_unlabeled(self):
        cam = forward_camera()
        rig = simple_rig()
        chain = static_chain()
        scan = LidarScan(points=np.array([[-5.0, 0.0, 0.0]]), frame="lidar",
                         time=1_000_000)
        cloud = label_pointcloud(scan, [uniform_image(cam, 11)], rig, chain)
        assert cloud.labels[0] == UNLABELED

    def test_no_images_all_unlabeled(self):
        rig = simple_rig()
        chain = static_chain()
        scan = LidarScan(points=RNG.uniform(-5, 5, (20, 3)), frame="lidar",
                         time=1_000_000)
        cloud = label_pointcloud(scan, [], rig, chain)
        assert np.all(cloud.labels == UNLABELED)

    def test_multi_camera_equal_probability(self):
        # two co-located cameras with different uniform labels: over many
        # seeds each label should win about half the time
        cam_a = forward_camera("cam_a")
        cam_b = forward_camera("cam_b")
        rig = simple_rig(cam_names=("cam_a", "cam_b"))
        chain = static_chain()
        scan = LidarScan(points=np.array([[10.0, 0.0, 0.0]]), frame="lidar",
                         time=1_000_000)
        images = [uniform_image(cam_a, 11), uniform_image(cam_b, 26)]
        wins = 0
        n = 600
        for seed in range(n):
            cloud = label_pointcloud(scan, images, rig, chain, seed=seed)
            wins += int(cloud.labels[0] == 11)
        # binomial(600, 0.5): +-4 sigma around 300 is about +-49
        assert abs(wins - n / 2) < 50

    def test_label_conservation(self):
        cam = forward_camera()
        rig = simple_rig()
        chain = static_chain()
        labels = np.zeros((64, 64), dtype=np.uint8)
        labels[:32] = 21
        labels[32:] = 7
        img = SemanticImage(labels=labels, camera=cam, time=1_000_000)
        pts = np.column_stack([RNG.uniform(2, 30, 300),
                               RNG.uniform(-10, 10, 300),
                               RNG.uniform(-3, 5, 300)])
        scan = LidarScan(points=pts, frame="lidar", time=1_000_000)
        cloud = label_pointcloud(scan, [img], rig, chain)
        assert set(np.unique(cloud.labels)) <= {7, 21, UNLABELED}
        assert len(cloud) == len(scan)

    def test_missing_extrinsic_raises(self):
        cam = forward_camera("ghost_cam")
        rig = simple_rig()
        chain = static_chain()
        scan = LidarScan(points=np.array([[5.0, 0.0, 0.0]]), frame="lidar",
                         time=1_000_000)
        with pytest.raises(FrameError):
            label_pointcloud(scan, [uniform_image(cam, 1)], rig, chain)

    def test_time_outside_chain_raises(self):
        from radarlabel import OutOfRangeError
        cam = forward_camera()
        rig = simple_rig()
        chain = static_chain(t0=0, t1=2_000_000)
        scan = LidarScan(points=np.array([[5.0, 0.0, 0.0]]), frame="lidar",
                         time=5_000_000)
        with pytest.raises(OutOfRangeError):
            label_pointcloud(scan, [uniform_image(cam, 1, t=1_000_000)],
                             rig, chain)

    def test_motion_correction_cancels_known_offset(self):
        # rig slides +x at 10 m/s; the image is 40 ms after the scan, so
        # forward motion displaces a side camera's view laterally by 0.4 m.
        # A point 0.1 m behind the corrected image centre line flips class
        # when the offset is ignored.
        chain = PoseChain([
            (0, Pose(UnitQuaternion.identity(), np.zeros(3), "world",
                     "radar")),
            (1_000_000, Pose(UnitQuaternion.identity(),
                             np.array([10.0, 0.0, 0.0]), "world", "radar")),
        ])
        cam = forward_camera("cam_left")
        left_mount = UnitQuaternion.from_axis_angle(
            (0, 0, 1), np.pi / 2).multiply(world._CAM_IN_VEHICLE)
        rig = Rig("radar", {
            "lidar": Pose(UnitQuaternion.identity(), np.zeros(3), "radar",
                          "lidar"),
            "cam_left": Pose(left_mount, np.zeros(3), "radar", "cam_left"),
        })
        labels = np.zeros((64, 64), dtype=np.uint8)
        labels[:, :32] = 11   # u < cx: class 11
        labels[:, 32:] = 26   # u >= cx: class 26
        img = SemanticImage(labels=labels, camera=cam, time=540_000)
        # in the scan-time lidar frame: 0.3 m ahead, 8 m to the left
        scan = LidarScan(points=np.array([[0.3, 8.0, 0.0]]), frame="lidar",
                         time=500_000)
        corrected = label_pointcloud(scan, [img], rig, chain, seed=0,
                                     correct_motion=True)
        uncorrected = label_pointcloud(scan, [img], rig, chain, seed=0,
                                       correct_motion=False)
        # corrected: camera has moved 0.4 m further along x, the point sits
        # 0.1 m behind its centre line (u < cx); uncorrected: 0.3 m ahead
        assert corrected.labels[0] == 11
        assert uncorrected.labels[0] == 26


class TestToRadarFrame:
    def test_identity_noop(self):
        chain = static_chain()
        rig = simple_rig()
        cloud = LabeledPointCloud(points=RNG.uniform(-5, 5, (10, 3)),
                                  labels=np.full(10, 11), frame="radar",
                                  time=2_000_000)
        out = to_radar_frame(cloud, rig, chain, 2_000_000)
        np.testing.assert_array_equal(out.points, cloud.points)
        assert out.frame == "radar" and out.time == 2_000_000

    def test_forward_motion_shifts_points_back(self):
        chain = PoseChain([
            (0, Pose(UnitQuaternion.identity(), np.zeros(3), "world",
                     "radar")),
            (2_000_000, Pose(UnitQuaternion.identity(),
                             np.array([2.0, 0.0, 0.0]), "world", "radar")),
        ])
        rig = simple_rig()
        cloud = LabeledPointCloud(points=np.array([[5.0, 0.0, 0.0]]),
                                  labels=np.array([11]), frame="radar",
                                  time=0)
        out = to_radar_frame(cloud, rig, chain, 2_000_000)
        np.testing.assert_allclose(out.points, [[3.0, 0.0, 0.0]], atol=1e-9)

    def test_matches_matrix_oracle(self):
        entries = []
        t = 0
        for _ in range(4):
            p, _ = random_pose_and_matrix(RNG, "world", "radar")
            entries.append((t, p))
            t += 1_000_000
        chain = PoseChain(entries)
        lidar_ext, lidar_mat = random_pose_and_matrix(RNG, "radar", "lidar")
        rig = Rig("radar", {"lidar": lidar_ext})
        pts = RNG.uniform(-20, 20, (25, 3))
        cloud = LabeledPointCloud(points=pts, labels=np.full(25, 11),
                                  frame="lidar", time=500_000)
        t_radar = 2_500_000
        out = to_radar_frame(cloud, rig, chain, t_radar)
        m = np.linalg.inv(chain.interpolate(t_radar).matrix()) @ \
            chain.interpolate(500_000).matrix() @ lidar_mat
        expect = pts @ m[:3, :3].T + m[:3, 3]
        assert np.max(np.abs(out.points - expect)) < 1e-6
        assert len(out) == len(cloud)
        np.testing.assert_array_equal(out.labels, cloud.labels)