"""Two-finger gripper: mean/difference task coordinates, cooperative adaptive
controllers, virtual-spring gripping force, and the grasp simulation.

The tip coordinates of both fingers are split into a locked part X_L (mean of
the tips, a proxy for the object center) and a shaped part X_E (tip
difference, a proxy for grasp width and object orientation):

    [X_L; X_E] = S [x1; y1; x2; y2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .control import _ref_vec
from .dynamics import direct_dynamics, dynamics_mass_parts
from .kinematics import jacobian, jacobian_dot, kin_regressor, tip_inverse, tip_position
from .simulate import (
    FingerModel,
    SimConfig,
    SimulationDiverged,
    Trajectory,
    accel,
    rk4_step,
)

S_MATRIX = np.array([
    [0.5, 0.0, 0.5, 0.0],
    [0.0, 0.5, 0.0, 0.5],
    [1.0, 0.0, -1.0, 0.0],
    [0.0, 1.0, 0.0, -1.0],
])

S_INV = np.array([
    [1.0, 0.0, 0.5, 0.0],
    [0.0, 1.0, 0.0, 0.5],
    [1.0, 0.0, -0.5, 0.0],
    [0.0, 1.0, 0.0, -0.5],
])

COOP_COLUMNS = ("t", "XL_x", "XL_y", "XE_x", "XE_y",
                "XLd_x", "XLd_y", "XEd_x", "XEd_y",
                "TL_x", "TL_y", "TE_x", "TE_y",
                "grip_fx", "grip_fy", "obj_x", "obj_y", "obj_angle")


@dataclass(frozen=True)
class FingerLayout:
    """Base position [m] of a finger and whether its plane is flipped in y."""

    base: tuple
    flip_y: bool = False

    def mirror(self) -> np.ndarray:
        return np.diag([1.0, -1.0 if self.flip_y else 1.0])

    def base_vec(self) -> np.ndarray:
        return np.asarray(self.base, dtype=float).reshape(2)


@dataclass(frozen=True)
class GripperLayout:
    """Opposed fingers: finger 1 reaches up from the origin, finger 2 hangs
    down from (0, separation)."""

    separation: float = 0.20

    def __post_init__(self) -> None:
        if self.separation <= 0.0:
            raise ValueError("base separation must be positive")

    def fingers(self) -> tuple:
        return (FingerLayout((0.0, 0.0), flip_y=False),
                FingerLayout((0.0, self.separation), flip_y=True))


@dataclass(frozen=True)
class GripSpec:
    """Grasped object and the virtual gripping spring.

    The spring must squeeze hard enough for friction to carry the object:
    stiffness * side >= margin * mass * 9.81 / (2 * mu).
    """

    side: float = 0.020       # [m]
    mass: float = 0.020       # [kg]
    stiffness: float = 50.0   # [N/m]
    rest: float = 0.0         # spring rest length [m]
    mu: float = 1.0           # contact friction coefficient
    margin: float = 2.0       # safety factor on the friction requirement

    def __post_init__(self) -> None:
        if self.stiffness < 0.0:
            raise ValueError("grip stiffness must be non-negative")
        required = self.margin * self.mass * 9.81 / (2.0 * self.mu)
        provided = self.stiffness * self.side
        if provided < required:
            raise ValueError(
                f"grip spring too weak: stiffness*side = {provided:.3g} N but "
                f"margin*mass*g/(2*mu) = {required:.3g} N")


@dataclass(frozen=True)
class CoopGains:
    locked_kp: float = 200.0
    locked_kv: float = 3.0
    gamma_Lk: float = 0.0325   # length-estimate adaptation gain
    gamma_Ld: float = 0.4      # locked dynamic-parameter adaptation gain
    P_L: float = 1.0           # locked disturbance adaptation gain
    lam1: float = 20.0
    shaped_k: float = 100.0
    shaped_kd: float = 5.0
    gamma_Ed: float = 0.4
    P_E: float = 1.0
    lam2: float = 20.0


# ---------------------------------------------------------------------------
# task-coordinate transforms
# ---------------------------------------------------------------------------

def shaped_locked_transform(tips) -> tuple[np.ndarray, np.ndarray]:
    """(X_L, X_E) from stacked tip coordinates (x1, y1, x2, y2)."""
    z = S_MATRIX @ np.asarray(tips, dtype=float).reshape(4)
    return z[:2], z[2:]


def shaped_locked_inverse(x_l, x_e) -> np.ndarray:
    """Stacked tips from (X_L, X_E); exact inverse of the transform."""
    return S_INV @ np.concatenate([np.asarray(x_l, dtype=float).reshape(2),
                                   np.asarray(x_e, dtype=float).reshape(2)])


def world_tip(q, lengths, layout: FingerLayout) -> np.ndarray:
    return layout.base_vec() + layout.mirror() @ tip_position(q, lengths)


def world_jacobian(q, lengths, layout: FingerLayout) -> np.ndarray:
    return layout.mirror() @ jacobian(q, lengths)


def block_jacobian(q4, lengths4, layouts) -> np.ndarray:
    """4x4 block-diagonal tip Jacobian of both fingers in the shared frame."""
    q4 = np.asarray(q4, dtype=float).reshape(4)
    lengths4 = np.asarray(lengths4, dtype=float).reshape(4)
    J = np.zeros((4, 4))
    J[:2, :2] = world_jacobian(q4[:2], lengths4[:2], layouts[0])
    J[2:, 2:] = world_jacobian(q4[2:], lengths4[2:], layouts[1])
    return J


def block_jacobian_dot(q4, qd4, lengths4, layouts) -> np.ndarray:
    q4 = np.asarray(q4, dtype=float).reshape(4)
    qd4 = np.asarray(qd4, dtype=float).reshape(4)
    lengths4 = np.asarray(lengths4, dtype=float).reshape(4)
    Jd = np.zeros((4, 4))
    Jd[:2, :2] = layouts[0].mirror() @ jacobian_dot(q4[:2], qd4[:2], lengths4[:2])
    Jd[2:, 2:] = layouts[1].mirror() @ jacobian_dot(q4[2:], qd4[2:], lengths4[2:])
    return Jd


def grip_force(tips, stiffness: float, rest: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Equal and opposite tip forces of the virtual spring pulling the tips
    together; finger 1 feels stiffness * (tip2 - tip1)."""
    if stiffness < 0.0:
        raise ValueError("grip stiffness must be non-negative")
    tips = np.asarray(tips, dtype=float).reshape(4)
    d = tips[2:] - tips[:2]
    if rest > 0.0:
        dist = float(np.hypot(*d))
        d = d * (1.0 - rest / dist) if dist > 1e-12 else np.zeros(2)
    f1 = stiffness * d
    return f1, -f1


# ---------------------------------------------------------------------------
# transformed dynamics
# ---------------------------------------------------------------------------

@dataclass
class TransformedDynamics:
    """Dynamics of the stacked fingers expressed in (X_L, X_E) coordinates."""

    Mz: np.ndarray       # 4x4 inertia
    Cz: np.ndarray       # 4x4 velocity matrix
    bias: np.ndarray     # mapped damping + stiffness + gravity wrench (4,)
    T: np.ndarray        # S J
    Tinv: np.ndarray
    Tdot: np.ndarray
    damped: bool         # True when the damped inverse was used

    @property
    def M_L(self): return self.Mz[:2, :2]

    @property
    def M_E(self): return self.Mz[2:, 2:]

    @property
    def M_LE(self): return self.Mz[:2, 2:]

    @property
    def C_L(self): return self.Cz[:2, :2]

    @property
    def C_E(self): return self.Cz[2:, 2:]

    @property
    def C_LE(self): return self.Cz[:2, 2:]

    @property
    def C_EL(self): return self.Cz[2:, :2]

    @property
    def F_LG(self):
        # gravity/stiffness/damping wrench moved to the locked right-hand side
        return -self.bias[:2]

    @property
    def F_EG(self):
        return -self.bias[2:]


def _damped_inverse(T: np.ndarray):
    if abs(float(np.linalg.det(T))) < 1e-9:
        return T.T @ np.linalg.inv(T @ T.T + 1e-6 * np.eye(4)), True
    return np.linalg.inv(T), False


def _joint_blocks(q4, qd4, params, kins4, layouts, gravity):
    """Per-finger dynamics stacked into 4x4 joint-space blocks."""
    g_vec = np.asarray(gravity, dtype=float).reshape(2)
    M = np.zeros((4, 4))
    C = np.zeros((4, 4))
    G = np.zeros(4)
    for i, layout in enumerate(layouts):
        sl = slice(2 * i, 2 * i + 2)
        g_local = layout.mirror() @ g_vec
        dyn = direct_dynamics(q4[sl], qd4[sl], params[i], kins4[sl], g_local)
        M[sl, sl] = dyn.M
        C[sl, sl] = dyn.C
        G[sl] = dyn.G
    return M, C, G


def transformed_dynamics(q4, qd4, params, kins4, layouts, gravity) -> TransformedDynamics:
    """Map the stacked joint dynamics into locked/shaped coordinates:

        Mz = T^-T M T^-1,  Cz = T^-T (C - M T^-1 Tdot) T^-1,  T = S J.
    """
    q4 = np.asarray(q4, dtype=float).reshape(4)
    qd4 = np.asarray(qd4, dtype=float).reshape(4)
    kins4 = np.asarray(kins4, dtype=float).reshape(4)
    M, C, G = _joint_blocks(q4, qd4, params, kins4, layouts, gravity)
    D = np.concatenate([params[0].damping(), params[1].damping()])
    K = np.concatenate([params[0].stiffness(), params[1].stiffness()])
    T = S_MATRIX @ block_jacobian(q4, kins4, layouts)
    Tdot = S_MATRIX @ block_jacobian_dot(q4, qd4, kins4, layouts)
    Tinv, damped = _damped_inverse(T)
    Mz = Tinv.T @ M @ Tinv
    Cz = Tinv.T @ (C - M @ Tinv @ Tdot) @ Tinv
    bias = Tinv.T @ (D * qd4 + K * q4 + G)
    return TransformedDynamics(Mz, Cz, bias, T, Tinv, Tdot, damped)


def coop_dynamic_regressors(q4, qd4, zr_dot, zr_ddot, kins4, layouts, gravity):
    """Locked and shaped regressors, linear in the 12 per-finger dynamic
    parameters (m1, m2, K1, K2, D1, D2 for each finger).

    Column p of Y_L is the locked-row feedforward wrench produced by a unit
    value of parameter p, using only the diagonal blocks of the transformed
    inertia and velocity matrices.
    """
    q4 = np.asarray(q4, dtype=float).reshape(4)
    qd4 = np.asarray(qd4, dtype=float).reshape(4)
    zr_dot = np.asarray(zr_dot, dtype=float).reshape(4)
    zr_ddot = np.asarray(zr_ddot, dtype=float).reshape(4)
    kins4 = np.asarray(kins4, dtype=float).reshape(4)
    g_vec = np.asarray(gravity, dtype=float).reshape(2)

    T = S_MATRIX @ block_jacobian(q4, kins4, layouts)
    Tdot = S_MATRIX @ block_jacobian_dot(q4, qd4, kins4, layouts)
    Tinv, _ = _damped_inverse(T)
    TinvT = Tinv.T

    Y_L = np.zeros((2, 12))
    Y_E = np.zeros((2, 12))

    def add_column(p_idx, Mj, Cj, Gj):
        Mz = TinvT @ Mj @ Tinv
        Cz = TinvT @ (Cj - Mj @ Tinv @ Tdot) @ Tinv
        gz = TinvT @ Gj
        # diagonal blocks only; the cross terms are left to the disturbance
        # adaptation
        Y_L[:, p_idx] = Mz[:2, :2] @ zr_ddot[:2] + Cz[:2, :2] @ zr_dot[:2] + gz[:2]
        Y_E[:, p_idx] = Mz[2:, 2:] @ zr_ddot[2:] + Cz[2:, 2:] @ zr_dot[2:] + gz[2:]

    for i, layout in enumerate(layouts):
        sl = slice(2 * i, 2 * i + 2)
        g_local = layout.mirror() @ g_vec
        parts = dynamics_mass_parts(q4[sl], qd4[sl], kins4[sl], g_local)
        base = 6 * i
        for m_idx, (M_u, C_u, G_u) in enumerate(parts):
            Mj = np.zeros((4, 4))
            Cj = np.zeros((4, 4))
            Gj = np.zeros(4)
            Mj[sl, sl] = M_u
            Cj[sl, sl] = C_u
            Gj[sl] = G_u
            add_column(base + m_idx, Mj, Cj, Gj)
        for j in range(2):
            col = 2 * i + j
            Y_L[:, base + 2 + j] = TinvT[:2, col] * q4[col]
            Y_E[:, base + 2 + j] = TinvT[2:, col] * q4[col]
            Y_L[:, base + 4 + j] = TinvT[:2, col] * qd4[col]
            Y_E[:, base + 4 + j] = TinvT[2:, col] * qd4[col]
    return Y_L, Y_E


# ---------------------------------------------------------------------------
# cooperative controller
# ---------------------------------------------------------------------------

def locked_control(e_L, edot_L, s_L, Y_Lr, Y_Lk, theta_Ld, f_L, gains: CoopGains):
    """Locked wrench and adaptation rates."""
    T_L = Y_Lr @ theta_Ld - gains.locked_kv * edot_L - gains.locked_kp * e_L - f_L
    theta_rate = -gains.gamma_Ld * (Y_Lr.T @ s_L)
    length_rate = gains.gamma_Lk * (Y_Lk.T @ (gains.locked_kv * edot_L + gains.locked_kp * e_L))
    f_rate = s_L / gains.P_L
    return T_L, theta_rate, length_rate, f_rate


def shaped_control(e_E, s_E, Y_Er, theta_Ed, f_E, gains: CoopGains):
    """Shaped wrench and adaptation rates."""
    T_E = Y_Er @ theta_Ed - gains.shaped_kd * s_E - gains.shaped_k * e_E - f_E
    theta_rate = -gains.gamma_Ed * (Y_Er.T @ s_E)
    f_rate = s_E / gains.P_E
    return T_E, theta_rate, f_rate


class CoopController:
    """Adaptive controller of the locked (object center) and shaped (grasp
    width) coordinates; estimates the per-finger dynamic parameters, the
    segment lengths, and lumped disturbances in both coordinate sets."""

    def __init__(self, gains: CoopGains, layouts, locked_refs, shaped_refs,
                 gravity, theta_Ld0, theta_Ed0, lengths0):
        self.gains = gains
        self.layouts = layouts
        self.locked_refs = locked_refs
        self.shaped_refs = shaped_refs
        self.gravity = np.asarray(gravity, dtype=float)
        self.theta_Ld0 = np.asarray(theta_Ld0, dtype=float).copy()
        self.theta_Ed0 = np.asarray(theta_Ed0, dtype=float).copy()
        self.lengths0 = np.asarray(lengths0, dtype=float).copy()
        self.reset()

    def reset(self) -> None:
        self.theta_Ld = self.theta_Ld0.copy()
        self.theta_Ed = self.theta_Ed0.copy()
        self.lengths = self.lengths0.copy()
        self.f_L = np.zeros(2)
        self.f_E = np.zeros(2)

    def estimated_state(self, q4, qd4):
        tips = np.concatenate([
            world_tip(q4[:2], self.lengths[:2], self.layouts[0]),
            world_tip(q4[2:], self.lengths[2:], self.layouts[1])])
        x_l, x_e = shaped_locked_transform(tips)
        J = block_jacobian(q4, self.lengths, self.layouts)
        zdot = S_MATRIX @ (J @ qd4)
        return x_l, x_e, zdot[:2], zdot[2:], J

    def command(self, t, q4, qd4, dt):
        g = self.gains
        xl_d, xld_d, xldd_d = _ref_vec(self.locked_refs, t)
        xe_d, xed_d, xedd_d = _ref_vec(self.shaped_refs, t)
        x_l, x_e, xl_dot, xe_dot, J = self.estimated_state(q4, qd4)

        e_L = x_l - xl_d
        edot_L = xl_dot - xld_d
        e_E = x_e - xe_d
        edot_E = xe_dot - xed_d
        s_L = edot_L + g.lam1 * e_L
        s_E = edot_E + g.lam2 * e_E

        zr_dot = np.concatenate([xld_d - g.lam1 * e_L, xed_d - g.lam2 * e_E])
        zr_ddot = np.concatenate([xldd_d - g.lam1 * edot_L, xedd_d - g.lam2 * edot_E])
        Y_Lr, Y_Er = coop_dynamic_regressors(q4, qd4, zr_dot, zr_ddot,
                                             self.lengths, self.layouts, self.gravity)
        Y_Lk = 0.5 * np.hstack([
            self.layouts[0].mirror() @ kin_regressor(q4[:2], qd4[:2]),
            self.layouts[1].mirror() @ kin_regressor(q4[2:], qd4[2:])])

        T_L, thL_rate, len_rate, fL_rate = locked_control(
            e_L, edot_L, s_L, Y_Lr, Y_Lk, self.theta_Ld, self.f_L, g)
        T_E, thE_rate, fE_rate = shaped_control(
            e_E, s_E, Y_Er, self.theta_Ed, self.f_E, g)

        tau = J.T @ (S_MATRIX.T @ np.concatenate([T_L, T_E]))

        info = {"XLhat_x": x_l[0], "XLhat_y": x_l[1],
                "XLd_x": xl_d[0], "XLd_y": xl_d[1],
                "XEd_x": xe_d[0], "XEd_y": xe_d[1],
                "TL_x": T_L[0], "TL_y": T_L[1], "TE_x": T_E[0], "TE_y": T_E[1],
                "FL_x": self.f_L[0], "FL_y": self.f_L[1],
                "FE_x": self.f_E[0], "FE_y": self.f_E[1]}
        self.theta_Ld = self.theta_Ld + dt * thL_rate
        self.theta_Ed = self.theta_Ed + dt * thE_rate
        self.lengths = self.lengths + dt * len_rate
        self.f_L = self.f_L + dt * fL_rate
        self.f_E = self.f_E + dt * fE_rate
        if not np.all(np.isfinite(tau)):
            raise FloatingPointError("cooperative command became non-finite")
        return tau, info


# ---------------------------------------------------------------------------
# grasp simulation
# ---------------------------------------------------------------------------

@dataclass
class CoopResult:
    finger1: Trajectory
    finger2: Trajectory
    coop: dict

    def csv_text(self) -> str:
        names = list(COOP_COLUMNS)
        lines = [",".join(names)]
        n = len(self.coop["t"])
        for i in range(n):
            lines.append(",".join(f"{self.coop[name][i]:.9g}" for name in names))
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.csv_text())


def initial_grasp_state(locked_refs, shaped_refs, layouts, lengths4):
    """Bend angles and rates placing both tips on the initial reference."""
    xl0 = np.array([locked_refs[0].value(0.0), locked_refs[1].value(0.0)])
    xe0 = np.array([shaped_refs[0].value(0.0), shaped_refs[1].value(0.0)])
    tips = shaped_locked_inverse(xl0, xe0)
    q4 = np.zeros(4)
    for i, layout in enumerate(layouts):
        target_local = layout.mirror() @ (tips[2 * i:2 * i + 2] - layout.base_vec())
        q4[2 * i:2 * i + 2] = tip_inverse(target_local, lengths4[2 * i:2 * i + 2])
    zdot0 = np.array([locked_refs[0].rate(0.0), locked_refs[1].rate(0.0),
                      shaped_refs[0].rate(0.0), shaped_refs[1].rate(0.0)])
    J = block_jacobian(q4, lengths4, layouts)
    qd4 = np.linalg.solve(S_MATRIX @ J, zdot0)
    return q4, qd4


def coop_simulate(model: FingerModel, layout: GripperLayout, grip: GripSpec,
                  controller: CoopController, config: SimConfig,
                  disturbance=(0.0, -0.3), disturbance_on: float = 1.0) -> CoopResult:
    """Simulate the grasp: both fingers' joint dynamics under the cooperative
    controller, with tip forces from the virtual gripping spring, the object
    weight split between the fingers, and a windowed disturbance on both tips.

    The object is kinematically attached to the tips (no slip): its center is
    the locked coordinate and its orientation the tip-line angle.
    """
    dt = config.dt
    n = config.steps()
    g_vec = config.gravity_vec()
    layouts = layout.fingers()
    lengths = model.kin.as_array()
    lengths4 = np.concatenate([lengths, lengths])
    alpha = model.act.as_array()
    disturbance = np.asarray(disturbance, dtype=float).reshape(2)
    weight_share = 0.5 * grip.mass * g_vec

    def tip_forces(t, q4):
        tips = np.concatenate([
            world_tip(q4[:2], lengths, layouts[0]),
            world_tip(q4[2:], lengths, layouts[1])])
        f1, f2 = grip_force(tips, grip.stiffness, grip.rest)
        f1 = f1 + weight_share
        f2 = f2 + weight_share
        if t >= disturbance_on:
            f1 = f1 + disturbance
            f2 = f2 + disturbance
        return tips, f1, f2

    def deriv(t, y, tau4):
        q4, qd4 = y[:4], y[4:]
        _, f1, f2 = tip_forces(t, q4)
        acc = np.empty(4)
        for i, (layout_i, f_i) in enumerate(zip(layouts, (f1, f2))):
            sl = slice(2 * i, 2 * i + 2)
            tau_ext = world_jacobian(q4[sl], lengths, layout_i).T @ f_i
            g_local = layout_i.mirror() @ g_vec
            acc[sl] = accel(q4[sl], qd4[sl], tau4[sl] + tau_ext, np.zeros(2),
                            model, g_local)
        return np.concatenate([qd4, acc])

    q4, qd4 = initial_grasp_state(controller.locked_refs, controller.shaped_refs,
                                  layouts, lengths4)
    y = np.concatenate([q4, qd4])
    controller.reset()

    logs = {name: np.zeros(n + 1) for name in COOP_COLUMNS}
    finger_logs = []
    for _ in range(2):
        finger_logs.append({
            "t": np.zeros(n + 1), "q": np.zeros((n + 1, 2)), "qdot": np.zeros((n + 1, 2)),
            "qd": np.full((n + 1, 2), np.nan), "tau": np.zeros((n + 1, 2)),
            "p": np.zeros((n + 1, 2)), "tip": np.zeros((n + 1, 2)),
            "force": np.zeros((n + 1, 2))})
    extras: dict = {}

    for k in range(n + 1):
        t = k * dt
        q4, qd4 = y[:4], y[4:]
        tau4, info = controller.command(t, q4, qd4, dt)
        tips, f1, f2 = tip_forces(t, q4)
        x_l, x_e = shaped_locked_transform(tips)
        fg1, _ = grip_force(tips, grip.stiffness, grip.rest)

        logs["t"][k] = t
        logs["XL_x"][k], logs["XL_y"][k] = x_l
        logs["XE_x"][k], logs["XE_y"][k] = x_e
        logs["XLd_x"][k], logs["XLd_y"][k] = info["XLd_x"], info["XLd_y"]
        logs["XEd_x"][k], logs["XEd_y"][k] = info["XEd_x"], info["XEd_y"]
        logs["TL_x"][k], logs["TL_y"][k] = info["TL_x"], info["TL_y"]
        logs["TE_x"][k], logs["TE_y"][k] = info["TE_x"], info["TE_y"]
        logs["grip_fx"][k], logs["grip_fy"][k] = fg1
        logs["obj_x"][k], logs["obj_y"][k] = x_l
        logs["obj_angle"][k] = math.atan2(x_e[1], x_e[0])
        for key, val in info.items():
            if key in ("XLd_x", "XLd_y", "XEd_x", "XEd_y", "TL_x", "TL_y", "TE_x", "TE_y"):
                continue
            if key not in extras:
                extras[key] = np.zeros(n + 1)
            extras[key][k] = val
        for i, f_i in enumerate((f1, f2)):
            sl = slice(2 * i, 2 * i + 2)
            fl = finger_logs[i]
            fl["t"][k] = t
            fl["q"][k] = q4[sl]
            fl["qdot"][k] = qd4[sl]
            fl["tau"][k] = tau4[sl]
            fl["p"][k] = tau4[sl] / alpha
            fl["tip"][k] = tips[sl]
            fl["force"][k] = f_i

        if k == n:
            break
        try:
            y = rk4_step(lambda ts, ys: deriv(ts, ys, tau4), t, y, dt)
        except FloatingPointError as exc:
            raise SimulationDiverged(f"grasp diverged at t={t:.4f} s: {exc}",
                                     _coop_partial(finger_logs[0], k)) from exc
        if not np.all(np.isfinite(y)) or float(np.linalg.norm(y[4:])) > 1e3:
            raise SimulationDiverged(f"grasp diverged at t={t:.4f} s",
                                     _coop_partial(finger_logs[0], k))

    trajs = [Trajectory(fl["t"], fl["q"], fl["qdot"], fl["qd"], fl["tau"],
                        fl["p"], fl["tip"], fl["force"], {}) for fl in finger_logs]
    coop = dict(logs)
    for key, val in extras.items():
        coop[key] = val
    return CoopResult(trajs[0], trajs[1], coop)


def _coop_partial(fl, k) -> Trajectory:
    sl = slice(0, k + 1)
    return Trajectory(fl["t"][sl], fl["q"][sl], fl["qdot"][sl], fl["qd"][sl],
                      fl["tau"][sl], fl["p"][sl], fl["tip"][sl], fl["force"][sl], {})
