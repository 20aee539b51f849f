import math

import numpy as np
import pytest

from radarlabel import FrameError, Pose, UnitQuaternion, compose, transform_point

from oracles import hom, random_pose_and_matrix, rodrigues, rotation_angle_between

RNG = np.random.default_rng(1234)


def rot_z(deg):
    return UnitQuaternion.from_axis_angle((0, 0, 1), math.radians(deg))


class TestUnitQuaternion:
    def test_normalized_on_construction(self):
        q = UnitQuaternion(2.0, 0.0, 0.0, 0.0)
        assert abs(q.norm() - 1.0) < 1e-12
        assert q.w == 1.0

    def test_canonical_sign(self):
        q = UnitQuaternion(-0.5, 0.5, 0.5, 0.5)
        assert q.w >= 0.0
        # 180 degree rotations (w == 0) also get a deterministic sign
        q2 = UnitQuaternion(0.0, 0.0, 0.0, -1.0)
        assert q2.z == 1.0

    def test_zero_quaternion_rejected(self):
        with pytest.raises(ValueError):
            UnitQuaternion(0.0, 0.0, 0.0, 0.0)

    def test_norm_stable_over_100_compositions(self):
        for _ in range(20):
            q = UnitQuaternion(*RNG.normal(size=4))
            for _ in range(100):
                step = UnitQuaternion(*RNG.normal(size=4))
                q = q.multiply(step)
                assert abs(q.norm() - 1.0) < 1e-9

    def test_rotation_matches_rodrigues(self):
        for _ in range(100):
            axis = RNG.normal(size=3)
            angle = RNG.uniform(-math.pi, math.pi)
            q = UnitQuaternion.from_axis_angle(axis, angle)
            np.testing.assert_allclose(q.to_matrix(), rodrigues(axis, angle),
                                       atol=1e-12)

    def test_yaw(self):
        assert rot_z(30).yaw() == pytest.approx(math.radians(30))


class TestCompose:
    def test_identity_left(self):
        p, _ = random_pose_and_matrix(RNG, "a", "b")
        ident = Pose.identity("a", "a")
        assert compose(ident, p).approx_equal(p)

    def test_inverse_right(self):
        p, _ = random_pose_and_matrix(RNG, "a", "b")
        assert compose(p, p.inverse()).approx_equal(
            Pose.identity("a", "a"), rot_tol=1e-9, trans_tol=1e-9)

    def test_two_quarter_turns(self):
        # rot_z(90) with t=(1,0,0), then rot_z(90): matrix product oracle
        a = Pose(rot_z(90), np.array([1.0, 0.0, 0.0]), "a", "b")
        b = Pose(rot_z(90), np.zeros(3), "b", "c")
        c = compose(a, b)
        assert c.rotation.approx_equal(rot_z(180), tol=1e-12)
        np.testing.assert_allclose(c.translation, [1.0, 0.0, 0.0], atol=1e-12)
        oracle = hom(rodrigues((0, 0, 1), math.pi / 2), [1, 0, 0]) @ \
            hom(rodrigues((0, 0, 1), math.pi / 2), [0, 0, 0])
        np.testing.assert_allclose(c.matrix(), oracle, atol=1e-12)

    def test_frame_mismatch(self):
        a = Pose.identity("a", "b")
        c = Pose.identity("c", "d")
        with pytest.raises(FrameError):
            compose(a, c)

    def test_frames_chain(self):
        a = Pose.identity("a", "b")
        b = Pose.identity("b", "c")
        out = compose(a, b)
        assert out.frame_from == "a" and out.frame_to == "c"

    def test_matches_matrix_oracle(self):
        for _ in range(200):
            a, ma = random_pose_and_matrix(RNG, "a", "b")
            b, mb = random_pose_and_matrix(RNG, "b", "c")
            c = compose(a, b)
            oracle = ma @ mb
            assert np.max(np.abs(c.translation - oracle[:3, 3])) < 1e-6
            assert rotation_angle_between(c.rotation.to_matrix(),
                                          oracle[:3, :3]) < 1e-7


class TestTransformPoint:
    def test_identity(self):
        p = Pose.identity("a", "a")
        np.testing.assert_allclose(transform_point(p, [1, 2, 3]), [1, 2, 3])

    def test_quarter_turn(self):
        p = Pose(rot_z(90), np.zeros(3), "a", "b")
        np.testing.assert_allclose(transform_point(p, [1, 0, 0]), [0, 1, 0],
                                   atol=1e-12)

    def test_eighth_turn_with_offset(self):
        p = Pose(rot_z(45), np.array([1.0, 0.0, 0.0]), "a", "b")
        expect = [1.0 + math.sqrt(2) / 2, math.sqrt(2) / 2, 0.0]
        np.testing.assert_allclose(transform_point(p, [1, 0, 0]), expect,
                                   atol=1e-12)

    def test_compose_consistency(self):
        for _ in range(100):
            a, _ = random_pose_and_matrix(RNG, "a", "b")
            b, _ = random_pose_and_matrix(RNG, "b", "c")
            pt = RNG.uniform(-1e3, 1e3, size=3)
            direct = transform_point(compose(a, b), pt)
            chained = transform_point(a, transform_point(b, pt))
            assert np.max(np.abs(direct - chained)) < 1e-7

    def test_batched_matches_single(self):
        p, _ = random_pose_and_matrix(RNG, "a", "b")
        pts = RNG.uniform(-10, 10, size=(32, 3))
        batched = p.transform_points(pts)
        for i in range(32):
            np.testing.assert_allclose(batched[i], p.transform_point(pts[i]),
                                       atol=1e-12)


class TestInverse:
    def test_involutive(self):
        for _ in range(50):
            p, _ = random_pose_and_matrix(RNG, "a", "b")
            assert p.inverse().inverse().approx_equal(p, rot_tol=1e-9,
                                                      trans_tol=1e-9)

    def test_inverse_matches_matrix(self):
        for _ in range(50):
            p, m = random_pose_and_matrix(RNG, "a", "b")
            inv = p.inverse()
            np.testing.assert_allclose(inv.matrix(), np.linalg.inv(m),
                                       atol=1e-9)
            assert inv.frame_from == "b" and inv.frame_to == "a"

    def test_translation_immutable(self):
        p, _ = random_pose_and_matrix(RNG, "a", "b")
        with pytest.raises(ValueError):
            p.translation[0] = 99.0
