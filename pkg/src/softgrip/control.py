"""Single-finger controllers: adaptive-sliding bend control with disturbance
adaptation, a PID baseline, Cartesian adaptive control that also estimates the
segment lengths, and a computed-torque baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    ActuationMap,
    DynamicParams,
    direct_dynamics,
    dyn_regressor,
)
from .kinematics import KinematicParams, jacobian, jacobian_dot, kin_regressor


@dataclass(frozen=True)
class JointGains:
    """Adaptive-sliding gains for bend-angle tracking."""

    Kp: float = 0.015
    Kv: float = 0.002
    Ld: float = 0.001    # dynamic-parameter adaptation gain
    lam: float = 10.0    # sliding-surface slope
    Pf: float = 0.01     # disturbance-force adaptation gain

    def __post_init__(self) -> None:
        if min(self.Kp, self.Kv, self.Ld, self.lam, self.Pf) <= 0.0:
            raise ValueError("joint gains must be positive")


@dataclass(frozen=True)
class PIDGains:
    kp: float = 0.03
    kI: float = 1.2
    kd1: float = 0.004
    kd2: float = 0.0005
    integral_limit: float = 10.0  # anti-windup clamp [rad s]


@dataclass(frozen=True)
class CartesianGains:
    Kp: float = 50.0
    Kv: float = 10.0
    Ld: float = 0.01
    Lk: float = 1.6      # length-estimate adaptation gain
    alpha_s: float = 3.0  # task-space sliding rate
    Pf: float = 1.0

    def __post_init__(self) -> None:
        if min(self.Kp, self.Kv, self.Ld, self.Lk, self.alpha_s, self.Pf) <= 0.0:
            raise ValueError("cartesian gains must be positive")


@dataclass(frozen=True)
class SineReference:
    """offset + amplitude * sin(frequency t + phase) with analytic rates."""

    offset: float
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0

    def value(self, t: float) -> float:
        return self.offset + self.amplitude * math.sin(self.frequency * t + self.phase)

    def rate(self, t: float) -> float:
        return self.amplitude * self.frequency * math.cos(self.frequency * t + self.phase)

    def accel(self, t: float) -> float:
        return -self.amplitude * self.frequency ** 2 * math.sin(self.frequency * t + self.phase)


def _ref_vec(refs, t):
    return (np.array([refs[0].value(t), refs[1].value(t)]),
            np.array([refs[0].rate(t), refs[1].rate(t)]),
            np.array([refs[0].accel(t), refs[1].accel(t)]))


# ---------------------------------------------------------------------------
# control laws (stateless forms)
# ---------------------------------------------------------------------------

def sliding_reference(q, qdot, q_d, qd_d, qdd_d, lam: float):
    """Sliding-mode reference velocity, acceleration and the sliding vector

        qr_dot = qd_d - lam (q - q_d),   s = qdot - qr_dot = dq_err + lam q_err.
    """
    q_err = np.asarray(q) - np.asarray(q_d)
    dq_err = np.asarray(qdot) - np.asarray(qd_d)
    qr_dot = np.asarray(qd_d) - lam * q_err
    qr_ddot = np.asarray(qdd_d) - lam * dq_err
    s = np.asarray(qdot) - qr_dot
    return qr_dot, qr_ddot, s


def adaptive_sliding_torque(q, qdot, q_d, qd_d, qdd_d, gains: JointGains,
                            theta_hat, f_hat, kins, gravity):
    """Adaptive-sliding torque and the adaptation rates.

    tau = Yd theta_hat - Kv dq_err - Kp q_err - J^T f_hat, with
    theta_rate = -Ld Yd^T s and f_rate = Pf^-1 J s.
    """
    q_err = np.asarray(q) - np.asarray(q_d)
    dq_err = np.asarray(qdot) - np.asarray(qd_d)
    qr_dot, qr_ddot, s = sliding_reference(q, qdot, q_d, qd_d, qdd_d, gains.lam)
    Yd = dyn_regressor(q, qdot, qr_dot, qr_ddot, kins, gravity)
    lengths = kins.as_array() if isinstance(kins, KinematicParams) else np.asarray(kins)
    J = jacobian(q, lengths)
    tau = Yd @ np.asarray(theta_hat) - gains.Kv * dq_err - gains.Kp * q_err - J.T @ np.asarray(f_hat)
    theta_rate = -gains.Ld * (Yd.T @ s)
    f_rate = (J @ s) / gains.Pf
    return tau, theta_rate, f_rate, s


def lyapunov_value(s, dtheta, q_err, df, M, gains: JointGains) -> float:
    """Diagnostic energy of the adaptive-sliding loop; zero only at zero error."""
    s = np.asarray(s)
    dtheta = np.asarray(dtheta)
    q_err = np.asarray(q_err)
    df = np.asarray(df)
    return float(0.5 * s @ M @ s
                 + 0.5 * (dtheta @ dtheta) / gains.Ld
                 + 0.5 * (gains.Kp + gains.lam * gains.Kv) * (q_err @ q_err)
                 + 0.5 * gains.Pf * (df @ df))


def pid_torque(q_err, integ, dq_err, gains: PIDGains) -> np.ndarray:
    kd = np.array([gains.kd1, gains.kd2])
    return -(gains.kp * np.asarray(q_err) + gains.kI * np.asarray(integ) + kd * np.asarray(dq_err))


# ---------------------------------------------------------------------------
# stateful controllers for the simulator
# ---------------------------------------------------------------------------

class JointAdaptiveController:
    """Bend-angle tracking with adaptation of the dynamic parameters and of a
    lumped tip disturbance."""

    needs_tip = False

    def __init__(self, gains: JointGains, kins: KinematicParams, act: ActuationMap,
                 gravity, refs, theta0, f0=(0.0, 0.0), output: str = "pressure",
                 lyap_truth: DynamicParams | None = None):
        self.gains = gains
        self.kins = kins
        self.act = act
        self.gravity = np.asarray(gravity, dtype=float)
        self.refs = refs
        self.theta0 = np.asarray(theta0, dtype=float).copy()
        self.f0 = np.asarray(f0, dtype=float).copy()
        self.output = output
        self.lyap_truth = lyap_truth
        self.reset()

    def reset(self) -> None:
        self.theta_hat = self.theta0.copy()
        self.f_hat = self.f0.copy()

    def command(self, t, meas, dt):
        q_d, qd_d, qdd_d = _ref_vec(self.refs, t)
        tau, theta_rate, f_rate, s = adaptive_sliding_torque(
            meas.q, meas.qdot, q_d, qd_d, qdd_d, self.gains,
            self.theta_hat, self.f_hat, self.kins, self.gravity)
        if not (np.all(np.isfinite(self.theta_hat)) and np.all(np.isfinite(self.f_hat))):
            raise FloatingPointError("adaptive estimates became non-finite")
        info = {"qd1": q_d[0], "qd2": q_d[1], "s1": s[0], "s2": s[1],
                "Fhat_x": self.f_hat[0], "Fhat_y": self.f_hat[1]}
        for i, name in enumerate(("m1", "m2", "K1", "K2", "D1", "D2")):
            info[f"that_{name}"] = self.theta_hat[i]
        if self.lyap_truth is not None:
            M = direct_dynamics(meas.q, meas.qdot, self.lyap_truth, self.kins, self.gravity).M
            info["lyap"] = lyapunov_value(s, self.theta_hat - self.lyap_truth.theta(),
                                          meas.q - q_d, self.f_hat, M, self.gains)
        self.theta_hat = self.theta_hat + dt * theta_rate
        self.f_hat = self.f_hat + dt * f_rate
        if self.output == "torque":
            return tau, info
        return tau / self.act.as_array(), info


class JointPIDController:
    """Per-segment PID on the bend angles with integral anti-windup."""

    output = "pressure"
    needs_tip = False

    def __init__(self, gains: PIDGains, act: ActuationMap, refs):
        self.gains = gains
        self.act = act
        self.refs = refs
        self.reset()

    def reset(self) -> None:
        self.integ = np.zeros(2)

    def command(self, t, meas, dt):
        q_d, qd_d, _ = _ref_vec(self.refs, t)
        q_err = meas.q - q_d
        tau = pid_torque(q_err, self.integ, meas.qdot - qd_d, self.gains)
        lim = self.gains.integral_limit
        self.integ = np.clip(self.integ + dt * q_err, -lim, lim)
        info = {"qd1": q_d[0], "qd2": q_d[1],
                "integ1": self.integ[0], "integ2": self.integ[1]}
        return tau / self.act.as_array(), info


class CartesianAdaptiveController:
    """Tip-position tracking robust to wrong segment lengths: the actuation
    command is formed with estimated lengths, which adapt alongside the
    dynamic parameters and a lumped tip disturbance."""

    output = "pressure"

    def __init__(self, gains: CartesianGains, refs, gravity, theta_d0, lengths0,
                 act_hat: ActuationMap):
        self.gains = gains
        self.refs = refs
        self.gravity = np.asarray(gravity, dtype=float)
        self.theta_d0 = np.asarray(theta_d0, dtype=float).copy()
        self.lengths0 = np.asarray(lengths0, dtype=float).copy()
        self.k_hat = act_hat.as_array()  # held fixed; no adaptation law for it
        self.reset()

    def reset(self) -> None:
        self.theta_d = self.theta_d0.copy()
        self.lengths = self.lengths0.copy()
        self.f_hat = np.zeros(2)
        self.singular_events = 0

    def _solve(self, J, rhs):
        if abs(float(np.linalg.det(J))) < 1e-9:
            self.singular_events += 1
            A = J.T @ J + 1e-6 * np.eye(2)
            return np.linalg.solve(A, J.T @ rhs)
        return np.linalg.solve(J, rhs)

    def command(self, t, meas, dt):
        g = self.gains
        x_d, xd_d, xdd_d = _ref_vec(self.refs, t)
        x_err = meas.tip - x_d
        xd_err = meas.tipvel - xd_d
        u_pd = g.Kv * xd_err + g.Kp * x_err

        J_hat = jacobian(meas.q, self.lengths)
        qr_dot = self._solve(J_hat, xd_d - g.alpha_s * x_err)
        s = meas.qdot - qr_dot

        length_rate = g.Lk * (kin_regressor(meas.q, meas.qdot).T @ u_pd)
        # dJ/dt includes the length-estimate drift: the Jacobian is linear in
        # the lengths, so that contribution is the Jacobian of the rates.
        J_hat_dot = jacobian_dot(meas.q, meas.qdot, self.lengths) + jacobian(meas.q, length_rate)
        qr_ddot = self._solve(J_hat, xdd_d - g.alpha_s * xd_err - J_hat_dot @ qr_dot)

        Yd = dyn_regressor(meas.q, meas.qdot, qr_dot, qr_ddot, self.lengths, self.gravity)
        theta_rate = -g.Ld * (Yd.T @ s)
        f_rate = (J_hat @ s) / g.Pf

        u = (-J_hat.T @ u_pd + Yd @ self.theta_d - J_hat.T @ self.f_hat) / self.k_hat

        info = {"xd_x": x_d[0], "xd_y": x_d[1], "ex": x_err[0], "ey": x_err[1],
                "Lhat1": self.lengths[0], "Lhat2": self.lengths[1],
                "Fhat_x": self.f_hat[0], "Fhat_y": self.f_hat[1]}
        if not np.all(np.isfinite(u)):
            raise FloatingPointError("cartesian command became non-finite")
        self.theta_d = self.theta_d + dt * theta_rate
        self.lengths = self.lengths + dt * length_rate
        self.f_hat = self.f_hat + dt * f_rate
        return u, info


class FeedbackLinearizationController:
    """Computed-torque baseline with all model quantities frozen at their
    (possibly wrong) nominal values; no adaptation."""

    output = "pressure"

    def __init__(self, gains: CartesianGains, refs, gravity,
                 params_hat: DynamicParams, kins_hat, act_hat: ActuationMap):
        self.gains = gains
        self.refs = refs
        self.gravity = np.asarray(gravity, dtype=float)
        self.params_hat = params_hat
        self.lengths_hat = (kins_hat.as_array() if isinstance(kins_hat, KinematicParams)
                            else np.asarray(kins_hat, dtype=float))
        self.act_hat = act_hat
        self.singular_events = 0

    def reset(self) -> None:
        pass

    def _solve(self, J, rhs):
        if abs(float(np.linalg.det(J))) < 1e-9:
            self.singular_events += 1
            A = J.T @ J + 1e-6 * np.eye(2)
            return np.linalg.solve(A, J.T @ rhs)
        return np.linalg.solve(J, rhs)

    def command(self, t, meas, dt):
        g = self.gains
        x_d, xd_d, xdd_d = _ref_vec(self.refs, t)
        x_err = meas.tip - x_d
        xd_err = meas.tipvel - xd_d
        J_hat = jacobian(meas.q, self.lengths_hat)
        J_hat_dot = jacobian_dot(meas.q, meas.qdot, self.lengths_hat)
        qdd_cmd = self._solve(J_hat, xdd_d - g.Kv * xd_err - g.Kp * x_err - J_hat_dot @ meas.qdot)
        dyn = direct_dynamics(meas.q, meas.qdot, self.params_hat, self.lengths_hat, self.gravity)
        tau = (dyn.M @ qdd_cmd + dyn.C @ meas.qdot
               + self.params_hat.damping() * meas.qdot
               + dyn.G + self.params_hat.stiffness() * meas.q)
        info = {"xd_x": x_d[0], "xd_y": x_d[1], "ex": x_err[0], "ey": x_err[1]}
        return tau / self.act_hat.as_array(), info
