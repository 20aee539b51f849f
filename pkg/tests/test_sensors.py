import numpy as np
import pytest

from radarlabel import BoundsError, CameraModel, RadarScan, SemanticImage, \
    lookup_label, project
from radarlabel.sensors import lookup_labels, project_points

RNG = np.random.default_rng(5)

CAM = CameraModel(fx=100.0, fy=100.0, cx=50.0, cy=50.0, width=100,
                  height=100, frame="cam")


class TestProject:
    def test_optical_axis(self):
        assert project(CAM, (0.0, 0.0, 5.0)) == (50.0, 50.0)

    def test_behind_camera(self):
        assert project(CAM, (0.0, 0.0, -1.0)) is None

    def test_near_plane(self):
        assert project(CAM, (0.0, 0.0, 0.05)) is None

    def test_pinhole_arithmetic(self):
        cam = CameraModel(fx=200.0, fy=100.0, cx=320.0, cy=240.0, width=640,
                          height=480, frame="cam")
        # u = 200*1/2 + 320 = 420, v = 100*0.5/2 + 240 = 265
        assert project(cam, (1.0, 0.5, 2.0)) == (420.0, 265.0)

    def test_outside_image(self):
        assert project(CAM, (10.0, 0.0, 1.0)) is None

    def test_scale_consistency(self):
        for _ in range(200):
            pt = RNG.uniform(-1, 1, size=3)
            pt[2] = RNG.uniform(0.5, 10.0)
            lam = RNG.uniform(0.5, 20.0)
            a = project(CAM, pt)
            b = project(CAM, pt * lam)
            if a is None:
                assert b is None
            else:
                assert abs(a[0] - b[0]) < 1e-9 and abs(a[1] - b[1]) < 1e-9

    def test_axis_always_center(self):
        for z in (0.2, 1.0, 5.0, 500.0):
            u, v = project(CAM, (0.0, 0.0, z))
            assert abs(u - CAM.cx) < 1e-9 and abs(v - CAM.cy) < 1e-9

    def test_batch_matches_scalar(self):
        pts = RNG.uniform(-3, 3, size=(500, 3))
        uv, valid = project_points(CAM, pts)
        for i in range(len(pts)):
            single = project(CAM, pts[i])
            if single is None:
                assert not valid[i]
            else:
                assert valid[i]
                np.testing.assert_allclose(uv[i], single, atol=1e-12)


class TestLookupLabel:
    def test_uniform(self):
        img = SemanticImage(labels=np.full((100, 100), 7, dtype=np.uint8),
                            camera=CAM, time=0)
        assert lookup_label(img, 12.3, 45.6) == 7

    def test_floor_rule_on_boundary(self):
        labels = np.zeros((100, 100), dtype=np.uint8)
        labels[:, 10] = 3
        img = SemanticImage(labels=labels, camera=CAM, time=0)
        assert lookup_label(img, 10.0, 0.0) == 3

    def test_checkerboard(self):
        labels = np.indices((100, 100)).sum(axis=0) % 2
        img = SemanticImage(labels=labels.astype(np.uint8), camera=CAM, time=0)
        # pixel (col 3, row 4) -> labels[4, 3]
        assert lookup_label(img, 3.7, 4.2) == labels[4, 3]

    def test_out_of_bounds(self):
        img = SemanticImage(labels=np.zeros((100, 100), dtype=np.uint8),
                            camera=CAM, time=0)
        with pytest.raises(BoundsError):
            lookup_label(img, 100.0, 0.0)
        with pytest.raises(BoundsError):
            lookup_labels(img, np.array([[-0.5, 2.0]]))

    def test_shape_must_match_camera(self):
        with pytest.raises(ValueError):
            SemanticImage(labels=np.zeros((10, 10), dtype=np.uint8),
                          camera=CAM, time=0)


class TestRadarScan:
    def _scan(self, **kw):
        args = dict(power=np.ones((4, 8), dtype=np.float32),
                    azimuth_times=np.arange(4) * 100,
                    range_resolution=0.5, frame="radar", scan_time=0)
        args.update(kw)
        return RadarScan(**args)

    def test_valid(self):
        scan = self._scan()
        assert scan.num_azimuths == 4 and scan.num_range_bins == 8
        assert scan.max_range == 4.0

    def test_negative_power_rejected(self):
        with pytest.raises(ValueError):
            self._scan(power=np.full((4, 8), -1.0))

    def test_decreasing_azimuth_times_rejected(self):
        with pytest.raises(ValueError):
            self._scan(azimuth_times=np.array([3, 2, 1, 0]))

    def test_azimuth_time_count(self):
        with pytest.raises(ValueError):
            self._scan(azimuth_times=np.arange(5))
