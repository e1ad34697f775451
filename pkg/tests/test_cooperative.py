import math

import numpy as np
import pytest

from softgrip.control import SineReference
from softgrip.cooperative import (
    CoopController,
    CoopGains,
    GripSpec,
    GripperLayout,
    S_INV,
    S_MATRIX,
    block_jacobian,
    block_jacobian_dot,
    coop_dynamic_regressors,
    coop_simulate,
    grip_force,
    initial_grasp_state,
    locked_control,
    shaped_control,
    shaped_locked_inverse,
    shaped_locked_transform,
    transformed_dynamics,
    world_jacobian,
    world_tip,
)
from softgrip.dynamics import ActuationMap, DynamicParams
from softgrip.kinematics import KinematicParams, jacobian
from softgrip.simulate import FingerModel, SimConfig

K = KinematicParams(0.067, 0.077)
PARAMS = DynamicParams(0.020, 0.0251, 0.068, 0.07, 0.0029, 0.0029)
ACT = ActuationMap(0.076, 0.062)
MODEL = FingerModel(PARAMS, K, ACT)
G = np.array([0.0, -9.81])
LAYOUTS = GripperLayout(0.20).fingers()
L4 = np.concatenate([K.as_array(), K.as_array()])
RNG = np.random.default_rng(31)

LOCKED_REFS = (SineReference(0.010, 0.010, 3.0), SineReference(0.081, -0.017, 3.0))
SHAPED_REFS = (SineReference(0.020), SineReference(0.0))


class TestShapedLockedTransform:
    def test_direct_example(self):
        x_l, x_e = shaped_locked_transform([0.01, 0.08, -0.01, 0.08])
        np.testing.assert_allclose(x_l, [0.0, 0.08])
        np.testing.assert_allclose(x_e, [0.02, 0.0])

    def test_round_trip_exact(self):
        for _ in range(100):
            tips = RNG.standard_normal(4)
            x_l, x_e = shaped_locked_transform(tips)
            np.testing.assert_allclose(shaped_locked_inverse(x_l, x_e), tips,
                                       atol=1e-15)
        np.testing.assert_allclose(S_MATRIX @ S_INV, np.eye(4), atol=1e-15)

    def test_swapping_fingers(self):
        tips = RNG.standard_normal(4)
        swapped = np.concatenate([tips[2:], tips[:2]])
        xl1, xe1 = shaped_locked_transform(tips)
        xl2, xe2 = shaped_locked_transform(swapped)
        np.testing.assert_allclose(xl1, xl2, atol=1e-15)
        np.testing.assert_allclose(xe1, -xe2, atol=1e-15)


class TestGripForce:
    def test_coincident_tips(self):
        f1, f2 = grip_force([0.01, 0.08, 0.01, 0.08], 50.0)
        np.testing.assert_allclose(f1, np.zeros(2))
        np.testing.assert_allclose(f2, np.zeros(2))

    def test_direct_evaluation(self):
        # tips 20 mm apart in x at 50 N/m pull with 1 N each
        f1, f2 = grip_force([0.0, 0.08, 0.02, 0.08], 50.0)
        np.testing.assert_allclose(f1, [1.0, 0.0])
        np.testing.assert_allclose(f2, [-1.0, 0.0])

    def test_antisymmetric_always(self):
        for _ in range(100):
            tips = RNG.standard_normal(4) * 0.05
            f1, f2 = grip_force(tips, 50.0)
            np.testing.assert_allclose(f1 + f2, np.zeros(2), atol=1e-15)

    def test_spec_margin_check(self):
        GripSpec()  # defaults satisfy the friction margin
        with pytest.raises(ValueError):
            GripSpec(stiffness=1.0)


class TestBlockJacobian:
    def test_off_diagonal_zero(self):
        q4 = RNG.uniform(-1.5, 1.5, 4)
        J = block_jacobian(q4, L4, LAYOUTS)
        np.testing.assert_allclose(J[:2, 2:], np.zeros((2, 2)))
        np.testing.assert_allclose(J[2:, :2], np.zeros((2, 2)))

    def test_finite_difference_world_tips(self):
        h = 1e-7
        for _ in range(50):
            q4 = RNG.uniform(-1.5, 1.5, 4)
            J = block_jacobian(q4, L4, LAYOUTS)
            for i in range(4):
                qp, qm = q4.copy(), q4.copy()
                qp[i] += h
                qm[i] -= h

                def tips(q):
                    return np.concatenate([
                        world_tip(q[:2], K.as_array(), LAYOUTS[0]),
                        world_tip(q[2:], K.as_array(), LAYOUTS[1])])

                np.testing.assert_allclose(J[:, i], (tips(qp) - tips(qm)) / (2 * h),
                                           atol=1e-6)

    def test_mirror_symmetry(self):
        q = RNG.uniform(-1.5, 1.5, 2)
        J1 = world_jacobian(q, K.as_array(), LAYOUTS[0])
        J2 = world_jacobian(q, K.as_array(), LAYOUTS[1])
        mirror = np.diag([1.0, -1.0])
        np.testing.assert_allclose(J2, mirror @ J1, atol=1e-15)


class TestTransformedDynamics:
    def test_inertia_spd(self):
        for _ in range(30):
            q4 = RNG.uniform(0.3, 1.8, 4)
            td = transformed_dynamics(q4, RNG.standard_normal(4), (PARAMS, PARAMS),
                                      L4, LAYOUTS, G)
            if td.damped:
                continue
            np.testing.assert_allclose(td.Mz, td.Mz.T, atol=1e-12)
            assert np.linalg.eigvalsh(td.Mz).min() > 0.0

    def test_power_invariance(self):
        # mapped wrench and joint torque do the same work
        for _ in range(100):
            q4 = RNG.uniform(0.3, 1.8, 4)
            qd4 = RNG.standard_normal(4)
            td = transformed_dynamics(q4, qd4, (PARAMS, PARAMS), L4, LAYOUTS, G)
            Tz = RNG.standard_normal(4)
            tau = td.T.T @ Tz
            zdot = td.T @ qd4
            assert abs(float(tau @ qd4) - float(Tz @ zdot)) < 1e-10

    def test_joint_torque_consistency(self):
        for _ in range(100):
            q4 = RNG.uniform(0.3, 1.8, 4)
            td = transformed_dynamics(q4, RNG.standard_normal(4), (PARAMS, PARAMS),
                                      L4, LAYOUTS, G)
            if td.damped:
                continue
            Tz = RNG.standard_normal(4)
            tau = td.T.T @ Tz
            np.testing.assert_allclose(td.Tinv.T @ tau, Tz, atol=1e-10)

    def test_skew_symmetry_in_task_coordinates(self):
        h = 1e-6
        for _ in range(30):
            q4 = RNG.uniform(0.4, 1.6, 4)
            qd4 = RNG.standard_normal(4)
            td = transformed_dynamics(q4, qd4, (PARAMS, PARAMS), L4, LAYOUTS, G)
            tp = transformed_dynamics(q4 + h * qd4, qd4, (PARAMS, PARAMS), L4,
                                      LAYOUTS, G)
            tm = transformed_dynamics(q4 - h * qd4, qd4, (PARAMS, PARAMS), L4,
                                      LAYOUTS, G)
            N = (tp.Mz - tm.Mz) / (2 * h) - 2.0 * td.Cz
            assert np.abs(N + N.T).max() < 1e-5

    def test_partition_shapes(self):
        td = transformed_dynamics(RNG.uniform(0.4, 1.6, 4), RNG.standard_normal(4),
                                  (PARAMS, PARAMS), L4, LAYOUTS, G)
        assert td.M_L.shape == (2, 2) and td.M_E.shape == (2, 2)
        assert td.M_LE.shape == (2, 2) and td.C_LE.shape == (2, 2)
        assert td.F_LG.shape == (2,) and td.F_EG.shape == (2,)


class TestRegressors:
    def test_linear_in_parameters(self):
        q4 = RNG.uniform(0.4, 1.6, 4)
        qd4 = RNG.standard_normal(4)
        zr_dot = RNG.standard_normal(4)
        zr_ddot = RNG.standard_normal(4)
        Y_L, Y_E = coop_dynamic_regressors(q4, qd4, zr_dot, zr_ddot, L4, LAYOUTS, G)
        assert Y_L.shape == (2, 12) and Y_E.shape == (2, 12)
        theta = np.concatenate([PARAMS.theta(), PARAMS.theta()])
        # doubling one finger's mass doubles only that column's contribution
        theta2 = theta.copy()
        theta2[0] *= 2.0
        np.testing.assert_allclose(Y_L @ theta2 - Y_L @ theta, Y_L[:, 0] * theta[0],
                                   rtol=1e-12)

    def test_locked_diagonal_feedforward(self):
        # with matched parameters the regressor reproduces the locked rows of
        # the transformed dynamics driven at the reference
        q4 = RNG.uniform(0.4, 1.6, 4)
        qd4 = RNG.standard_normal(4) * 0.3
        zr_dot = RNG.standard_normal(4) * 0.2
        zr_ddot = RNG.standard_normal(4) * 0.5
        Y_L, Y_E = coop_dynamic_regressors(q4, qd4, zr_dot, zr_ddot, L4, LAYOUTS, G)
        theta = np.concatenate([PARAMS.theta(), PARAMS.theta()])
        td = transformed_dynamics(q4, qd4, (PARAMS, PARAMS), L4, LAYOUTS, G)
        want_L = td.M_L @ zr_ddot[:2] + td.C_L @ zr_dot[:2] - td.F_LG
        want_E = td.M_E @ zr_ddot[2:] + td.C_E @ zr_dot[2:] - td.F_EG
        np.testing.assert_allclose(Y_L @ theta, want_L, atol=1e-10)
        np.testing.assert_allclose(Y_E @ theta, want_E, atol=1e-10)


class TestControllers:
    def test_frozen_adaptation_zero_error(self):
        gains = CoopGains()
        Y = RNG.standard_normal((2, 12))
        Yk = RNG.standard_normal((2, 4))
        theta = RNG.standard_normal(12)
        f = RNG.standard_normal(2)
        T_L, th_rate, len_rate, f_rate = locked_control(
            np.zeros(2), np.zeros(2), np.zeros(2), Y, Yk, theta, f, gains)
        np.testing.assert_allclose(T_L, Y @ theta - f)
        np.testing.assert_allclose(th_rate, np.zeros(12))
        np.testing.assert_allclose(len_rate, np.zeros(4))
        np.testing.assert_allclose(f_rate, np.zeros(2))
        T_E, thE_rate, fE_rate = shaped_control(np.zeros(2), np.zeros(2), Y, theta,
                                                f, gains)
        np.testing.assert_allclose(T_E, Y @ theta - f)
        np.testing.assert_allclose(thE_rate, np.zeros(12))
        np.testing.assert_allclose(fE_rate, np.zeros(2))

    def test_initial_state_on_reference(self):
        q4, qd4 = initial_grasp_state(LOCKED_REFS, SHAPED_REFS, LAYOUTS, L4)
        tips = np.concatenate([world_tip(q4[:2], K.as_array(), LAYOUTS[0]),
                               world_tip(q4[2:], K.as_array(), LAYOUTS[1])])
        x_l, x_e = shaped_locked_transform(tips)
        np.testing.assert_allclose(x_l, [0.010, 0.081], atol=1e-8)
        np.testing.assert_allclose(x_e, [0.020, 0.0], atol=1e-8)

    def test_short_grasp_run(self):
        theta = np.concatenate([PARAMS.theta(), PARAMS.theta()])
        ctl = CoopController(CoopGains(), LAYOUTS, LOCKED_REFS, SHAPED_REFS, G,
                             theta_Ld0=0.85 * theta, theta_Ed0=0.85 * theta,
                             lengths0=L4.copy())
        cfg = SimConfig(dt=2e-4, duration=2.0, gravity=(0.0, -9.81),
                        pressure_limit=None)
        res = coop_simulate(MODEL, GripperLayout(0.20), GripSpec(), ctl, cfg,
                            disturbance=(0.0, -0.3), disturbance_on=1.0)
        # disturbance window respected: forces on finger 1 change only at 1 s
        t_arr = res.finger1.t
        before = res.finger1.force[t_arr < 1.0]
        after = res.finger1.force[t_arr >= 1.0]
        assert abs(before[:, 1].mean() - after[:, 1].mean()) > 0.2
        # object pose equals the locked coordinates by construction
        np.testing.assert_array_equal(res.coop["obj_x"], res.coop["XL_x"])
        np.testing.assert_array_equal(res.coop["obj_y"], res.coop["XL_y"])
        # grasp-width error bounded after the transient
        mask = t_arr >= 1.5
        err = np.abs(res.coop["XE_x"][mask] - 0.020)
        assert err.max() < 0.002
