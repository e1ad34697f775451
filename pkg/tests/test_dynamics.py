import math

import numpy as np
import pytest

from softgrip.dynamics import (
    ActuationMap,
    DynamicParams,
    chain_mass_points,
    chain_tip,
    config_map,
    direct_dynamics,
    dyn_regressor,
    dynamics_mass_parts,
    equilibrium_bend,
    gravity_potential,
    map_jacobian,
    map_jacobian_dot,
    rigid_dynamics,
    soft_dynamics,
)
from softgrip.kinematics import KinematicParams, fk_tip, wrap_angle

K = KinematicParams(0.067, 0.077)
PARAMS = DynamicParams(0.020, 0.0251, 0.068, 0.07, 0.0029, 0.0029)
GRAVITY = np.array([0.0, -9.81])
RNG = np.random.default_rng(99)


def rel_err(A, B, floor):
    return np.linalg.norm(A - B) / max(np.linalg.norm(A), np.linalg.norm(B), floor)


class TestConfigMap:
    def test_straight(self):
        z = config_map(np.zeros(2), K)
        np.testing.assert_allclose(
            z, [0, 0.0335, 0.0335, 0, 0, 0.0385, 0.0385, 0], atol=1e-15)

    def test_half_turn_slides(self):
        z = config_map(np.array([math.pi, math.pi]), K)
        np.testing.assert_allclose(z[1:3], K.L1 / math.pi, rtol=1e-12)
        np.testing.assert_allclose(z[5:7], K.L2 / math.pi, rtol=1e-12)

    def test_chained_segments_reproduce_tip(self):
        for _ in range(100):
            q = RNG.uniform(-2 * math.pi, 2 * math.pi, 2)
            tip = chain_tip(config_map(q, K))
            pose = fk_tip(q, K)
            np.testing.assert_allclose(tip[:2], [pose.x, pose.y], atol=1e-14)
            assert abs(wrap_angle(tip[2] - pose.theta)) < 1e-12


class TestMapJacobian:
    def test_block_structure(self):
        q = RNG.uniform(-math.pi, math.pi, 2)
        Jm = map_jacobian(q, K)
        np.testing.assert_allclose(Jm[:4, 1], 0.0)
        np.testing.assert_allclose(Jm[4:, 0], 0.0)

    def test_finite_difference(self):
        h = 1e-7
        for _ in range(100):
            q = RNG.uniform(-math.pi, math.pi, 2)
            Jm = map_jacobian(q, K)
            for i in range(2):
                qp, qm = q.copy(), q.copy()
                qp[i] += h
                qm[i] -= h
                col = (config_map(qp, K) - config_map(qm, K)) / (2 * h)
                assert np.abs(Jm[:, i] - col).max() < 1e-6

    def test_dot_zero_velocity(self):
        q = RNG.uniform(-math.pi, math.pi, 2)
        np.testing.assert_allclose(map_jacobian_dot(q, np.zeros(2), K), np.zeros((8, 2)))

    def test_dot_finite_difference(self):
        h = 1e-7
        for _ in range(50):
            q = RNG.uniform(-math.pi, math.pi, 2)
            qd = RNG.standard_normal(2)
            Jmd = map_jacobian_dot(q, qd, K)
            Jn = (map_jacobian(q + h * qd, K) - map_jacobian(q - h * qd, K)) / (2 * h)
            assert np.abs(Jmd - Jn).max() < 1e-5


class TestRigidChain:
    def test_zero_gravity_torque(self):
        z = config_map(RNG.uniform(-math.pi, math.pi, 2), K)
        _, _, Gz = rigid_dynamics(z, np.zeros(8), PARAMS.masses(), np.zeros(2))
        np.testing.assert_allclose(Gz, np.zeros(8))

    def test_inertia_gram_structure(self):
        # two planar point masses: symmetric PSD with rank at most 4
        z = config_map(RNG.uniform(-math.pi, math.pi, 2), K)
        Mz, _, _ = rigid_dynamics(z, np.zeros(8), PARAMS.masses(), GRAVITY)
        np.testing.assert_allclose(Mz, Mz.T, atol=1e-18)
        eig = np.linalg.eigvalsh(Mz)
        assert eig.min() > -1e-18
        assert np.sum(eig > 1e-15) <= 4

    def test_kinetic_energy_oracle(self):
        for _ in range(50):
            q = RNG.uniform(-math.pi, math.pi, 2)
            qd = RNG.standard_normal(2)
            z = config_map(q, K)
            zd = map_jacobian(q, K) @ qd
            Mz, _, _ = rigid_dynamics(z, zd, PARAMS.masses(), GRAVITY)
            (_, J1), (_, J2) = chain_mass_points(z)
            direct = 0.5 * PARAMS.m1 * float((J1 @ zd) @ (J1 @ zd)) \
                + 0.5 * PARAMS.m2 * float((J2 @ zd) @ (J2 @ zd))
            assert abs(0.5 * float(zd @ Mz @ zd) - direct) < 1e-10


class TestTwoRoutes:
    def test_mapped_equals_direct(self):
        # the two independent derivations must agree on all three matrices
        for _ in range(1000):
            q = RNG.uniform(-math.pi, math.pi, 2)
            qd = RNG.standard_normal(2)
            da = direct_dynamics(q, qd, PARAMS, K, GRAVITY)
            db = soft_dynamics(q, qd, PARAMS, K, GRAVITY)
            scale = np.linalg.norm(da.M) * max(float(np.hypot(*qd)), 1.0)
            assert rel_err(da.M, db.M, 1e-12) < 1e-9
            assert np.linalg.norm(da.C - db.C) < 1e-9 * scale
            assert rel_err(da.G, db.G, 1e-12) < 1e-9

    def test_inertia_spd_on_grid(self):
        qs = np.linspace(-math.pi, math.pi, 50)
        for q1 in qs:
            for q2 in qs:
                M = direct_dynamics((q1, q2), np.zeros(2), PARAMS, K, GRAVITY).M
                assert abs(M[0, 1] - M[1, 0]) < 1e-12
                assert np.linalg.eigvalsh(M).min() > 0.0

    def test_gravity_straight_axis(self):
        dyn = direct_dynamics(np.zeros(2), np.zeros(2), PARAMS, K, GRAVITY)
        np.testing.assert_allclose(dyn.G, np.zeros(2), atol=1e-18)

    def test_single_segment_inertia_limit(self):
        # chord-midpoint mass: |d com/dq| = L/4 at q = 0, so M -> m L^2/16
        (Ma, _, _), _ = dynamics_mass_parts(np.zeros(2), np.zeros(2), K, GRAVITY)
        assert Ma[0, 0] == pytest.approx(K.L1 ** 2 / 16, rel=1e-12)

    def test_skew_symmetry_along_motion(self):
        h = 1e-7
        for _ in range(100):
            q = RNG.uniform(-math.pi, math.pi, 2)
            qd = RNG.standard_normal(2)
            Mp = direct_dynamics(q + h * qd, qd, PARAMS, K, GRAVITY).M
            Mm = direct_dynamics(q - h * qd, qd, PARAMS, K, GRAVITY).M
            N = (Mp - Mm) / (2 * h) - 2.0 * direct_dynamics(q, qd, PARAMS, K, GRAVITY).C
            assert np.abs(N + N.T).max() < 1e-6

    def test_gravity_matches_potential_gradient(self):
        h = 1e-6
        for _ in range(100):
            q = RNG.uniform(-math.pi, math.pi, 2)
            G = direct_dynamics(q, np.zeros(2), PARAMS, K, GRAVITY).G
            for i in range(2):
                qp, qm = q.copy(), q.copy()
                qp[i] += h
                qm[i] -= h
                dU = (gravity_potential(qp, PARAMS, K, GRAVITY)
                      - gravity_potential(qm, PARAMS, K, GRAVITY)) / (2 * h)
                assert abs(G[i] - dU) < 1e-6


class TestDynRegressor:
    def test_exact_identity(self):
        for _ in range(1000):
            q = RNG.uniform(-math.pi, math.pi, 2)
            qd, qrd, qrdd = (RNG.standard_normal(2) for _ in range(3))
            Y = dyn_regressor(q, qd, qrd, qrdd, K, GRAVITY)
            dyn = direct_dynamics(q, qd, PARAMS, K, GRAVITY)
            lhs = (dyn.M @ qrdd + dyn.C @ qrd + dyn.G
                   + PARAMS.damping() * qd + PARAMS.stiffness() * q)
            scale = max(np.abs(lhs).max(), 1e-9)
            assert np.abs(Y @ PARAMS.theta() - lhs).max() < 1e-10 * scale

    def test_zero_state(self):
        Y = dyn_regressor(np.zeros(2), np.zeros(2), np.zeros(2), np.zeros(2), K,
                          np.zeros(2))
        np.testing.assert_allclose(Y, np.zeros((2, 6)), atol=1e-18)

    def test_mass_column_linearity(self):
        q = RNG.uniform(-math.pi, math.pi, 2)
        qd, qrd, qrdd = (RNG.standard_normal(2) for _ in range(3))
        Y = dyn_regressor(q, qd, qrd, qrdd, K, GRAVITY)
        doubled = PARAMS.theta().copy()
        doubled[0] *= 2
        diff = Y @ doubled - Y @ PARAMS.theta()
        np.testing.assert_allclose(diff, Y[:, 0] * PARAMS.m1, rtol=1e-12)

    def test_stiffness_damping_columns(self):
        q = np.array([0.4, -0.9])
        qd = np.array([1.5, -2.5])
        Y = dyn_regressor(q, qd, np.zeros(2), np.zeros(2), K, GRAVITY)
        assert Y[0, 2] == q[0] and Y[1, 3] == q[1]
        assert Y[0, 3] == 0.0 and Y[1, 2] == 0.0
        assert Y[0, 4] == qd[0] and Y[1, 5] == qd[1]


class TestParams:
    def test_positive_validation(self):
        with pytest.raises(ValueError):
            DynamicParams(0.0, 0.02, 0.07, 0.07, 0.003, 0.003)
        with pytest.raises(ValueError):
            DynamicParams(0.02, 0.02, 0.07, 0.07, -0.001, 0.003)
        with pytest.raises(ValueError):
            ActuationMap(0.076, 0.0)
        # zero damping is allowed for conservative-motion studies
        DynamicParams(0.02, 0.02, 0.07, 0.07, 0.0, 0.0)

    def test_equilibrium_solver(self):
        tau = np.array([0.05, 0.03])
        q = equilibrium_bend(tau, PARAMS, K, GRAVITY)
        dyn = direct_dynamics(q, np.zeros(2), PARAMS, K, GRAVITY)
        np.testing.assert_allclose(PARAMS.stiffness() * q + dyn.G, tau, atol=1e-10)
