import math
import time

import numpy as np
import pytest

from radarlabel import OutOfRangeError, Pose, PoseChain, UnitQuaternion, slerp

from oracles import random_pose_and_matrix, rotation_angle_between

RNG = np.random.default_rng(77)


def rot(axis, deg):
    return UnitQuaternion.from_axis_angle(axis, math.radians(deg))


def random_unit_quaternion(rng):
    return UnitQuaternion(*rng.normal(size=4))


class TestSlerp:
    def test_endpoints(self):
        q0 = random_unit_quaternion(RNG)
        q1 = random_unit_quaternion(RNG)
        assert slerp(q0, q1, 0.0).approx_equal(q0, tol=1e-12)
        assert slerp(q0, q1, 1.0).approx_equal(q1, tol=1e-12)

    def test_midpoint_symmetry(self):
        mid = slerp(UnitQuaternion.identity(), rot((0, 0, 1), 90), 0.5)
        assert mid.approx_equal(rot((0, 0, 1), 45), tol=1e-12)

    def test_coaxial_linearity(self):
        # same-axis rotations interpolate linearly in angle
        out = slerp(rot((1, 0, 0), 10), rot((1, 0, 0), 70), 0.25)
        assert out.approx_equal(rot((1, 0, 0), 25), tol=1e-9)

    def test_angle_proportionality(self):
        for _ in range(500):
            q0 = random_unit_quaternion(RNG)
            q1 = random_unit_quaternion(RNG)
            theta = q0.angle_to(q1)
            if not 1e-6 < theta < math.pi - 0.1:
                continue
            alpha = float(RNG.uniform(0, 1))
            out = slerp(q0, q1, alpha)
            assert abs(q0.angle_to(out) - alpha * theta) < 1e-9

    def test_shorter_arc(self):
        # relative angle never exceeds pi regardless of representative signs
        for _ in range(200):
            q0 = random_unit_quaternion(RNG)
            q1 = random_unit_quaternion(RNG)
            full = q0.angle_to(q1)
            half = q0.angle_to(slerp(q0, q1, 0.5))
            assert half <= full / 2 + 1e-9

    def test_near_parallel_fallback(self):
        q0 = rot((0, 0, 1), 10)
        q1 = rot((0, 0, 1), 10 + 1e-8)
        out = slerp(q0, q1, 0.5)
        assert out.approx_equal(q0, tol=1e-6)

    def test_alpha_range(self):
        q = UnitQuaternion.identity()
        with pytest.raises(ValueError):
            slerp(q, q, 1.5)


def straight_chain(v=(1.0, 0.0, 0.0), n=11, dt_us=1_000_000, t0=0):
    """Constant-velocity straight-line chain with identity rotations."""
    entries = []
    for k in range(n):
        t = t0 + k * dt_us
        pos = np.asarray(v) * (k * dt_us / 1e6)
        entries.append((t, Pose(UnitQuaternion.identity(), pos,
                                "world", "radar")))
    return PoseChain(entries)


class TestInterpolate:
    def test_exact_entry_returns_stored(self):
        chain = straight_chain()
        t, pose = chain.entries()[3]
        assert chain.interpolate(t) is pose

    def test_linear_midpoint(self):
        entries = [
            (0, Pose(UnitQuaternion.identity(), np.zeros(3), "world", "radar")),
            (2_000_000, Pose(UnitQuaternion.identity(),
                             np.array([2.0, 0.0, 0.0]), "world", "radar")),
        ]
        chain = PoseChain(entries)
        pose = chain.interpolate(1_000_000)
        np.testing.assert_allclose(pose.translation, [1.0, 0.0, 0.0])

    def test_constant_velocity_with_rotation(self):
        entries = [
            (0, Pose(rot((0, 0, 1), 0), np.zeros(3), "world", "radar")),
            (4_000_000, Pose(rot((0, 0, 1), 40),
                             np.array([4.0, 0.0, 0.0]), "world", "radar")),
        ]
        chain = PoseChain(entries)
        pose = chain.interpolate(3_000_000)
        np.testing.assert_allclose(pose.translation, [3.0, 0.0, 0.0],
                                   atol=1e-12)
        assert pose.rotation.approx_equal(rot((0, 0, 1), 30), tol=1e-9)

    def test_out_of_range(self):
        chain = straight_chain(t0=1000)
        with pytest.raises(OutOfRangeError):
            chain.interpolate(999)
        with pytest.raises(OutOfRangeError):
            chain.interpolate(chain.end_time + 1)

    def test_continuity_at_entries(self):
        # vehicle-plausible rates: under 1 m/s and 1 rad/s, so a 1 us step
        # must stay within 1e-6 m and 1e-6 rad
        pose = Pose(UnitQuaternion.identity(),
                    RNG.uniform(-5, 5, size=3), "world", "radar")
        entries = [(0, pose)]
        t = 0
        for _ in range(8):
            t += int(RNG.integers(500_000, 1_500_000))
            axis = RNG.normal(size=3)
            delta = Pose(UnitQuaternion.from_axis_angle(
                axis, float(RNG.uniform(-0.25, 0.25))),
                RNG.uniform(-0.4, 0.4, size=3), "radar", "radar")
            pose = pose.compose(delta)
            entries.append((t, pose))
        chain = PoseChain(entries)
        for tk, _ in chain.entries()[1:-1]:
            at = chain.interpolate(tk)
            before = chain.interpolate(tk - 1)
            after = chain.interpolate(tk + 1)
            for other in (before, after):
                assert np.max(np.abs(at.translation - other.translation)) < 1e-6
                assert at.rotation.angle_to(other.rotation) < 1e-6

    def test_strictly_increasing_required(self):
        p = Pose.identity("world", "radar")
        with pytest.raises(ValueError):
            PoseChain([(0, p), (0, p)])

    def test_lookup_scales_logarithmically(self):
        # 10k queries on a million-entry chain; generous bound that a linear
        # scan would blow through by orders of magnitude
        n = 1_000_000
        times = np.arange(n, dtype=np.int64) * 1000
        pose = Pose.identity("world", "radar")
        chain = PoseChain.__new__(PoseChain)
        chain._times = times
        chain._poses = [pose] * n
        chain.frame_from = "world"
        chain.frame_to = "radar"
        queries = RNG.integers(0, times[-1], size=10_000)
        start = time.perf_counter()
        for q in queries:
            chain.interpolate(int(q))
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0


class TestRelativePose:
    def test_same_time_identity(self):
        chain = straight_chain()
        rel = chain.relative_pose(2_500_000, 2_500_000)
        assert rel.rotation.angle() == 0.0
        np.testing.assert_array_equal(rel.translation, np.zeros(3))

    def test_constant_velocity_shift(self):
        chain = straight_chain(v=(1.0, 0.0, 0.0))
        rel = chain.relative_pose(1_000_000, 3_000_000)
        np.testing.assert_allclose(rel.translation, [2.0, 0.0, 0.0],
                                   atol=1e-9)

    def test_matches_matrix_oracle(self):
        entries = []
        mats = []
        t = 0
        for _ in range(6):
            p, m = random_pose_and_matrix(RNG, "world", "radar")
            entries.append((t, p))
            mats.append(m)
            t += 1_000_000
        chain = PoseChain(entries)
        for _ in range(50):
            t_a = int(RNG.integers(0, t - 1_000_000))
            t_b = int(RNG.integers(0, t - 1_000_000))
            rel = chain.relative_pose(t_a, t_b)
            ma = chain.interpolate(t_a).matrix()
            mb = chain.interpolate(t_b).matrix()
            oracle = np.linalg.inv(ma) @ mb
            assert np.max(np.abs(rel.translation - oracle[:3, 3])) < 1e-6
            assert rotation_angle_between(rel.rotation.to_matrix(),
                                          oracle[:3, :3]) < 1e-7
