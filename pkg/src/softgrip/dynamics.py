"""Finger dynamics in bend-angle coordinates, derived two independent ways.

Route 1 (``soft_dynamics``): the finger is mapped onto an equivalent rigid
chain with joint vector zeta = (q/2, L sin(q/2)/q, L sin(q/2)/q, -q/2) per
segment; point-mass dynamics are formed in the 8-dimensional joint space and
pulled back through the configuration map.

Route 2 (``direct_dynamics``): the same point masses are differentiated
directly with respect to q.  Both routes must agree; the simulator uses the
direct route because its Coriolis matrix is analytic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kinematics import (
    KinematicParams,
    _dir,
    _dir_d,
    _qvec,
    half_chord,
    half_chord_d,
    half_chord_dd,
)

# central-difference step for the mapped-route Coriolis construction
FD_STEP = 1e-6


def _as_lengths(kins) -> np.ndarray:
    # controllers may carry raw (adapted) length estimates instead of the
    # validated parameter type
    if isinstance(kins, KinematicParams):
        return kins.as_array()
    return np.asarray(kins, dtype=float).reshape(2)


@dataclass(frozen=True)
class DynamicParams:
    """Lumped masses [kg], joint stiffness [N m/rad], damping [N m s/rad]."""

    m1: float
    m2: float
    K1: float
    K2: float
    D1: float
    D2: float

    def __post_init__(self) -> None:
        for name in ("m1", "m2", "K1", "K2"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("D1", "D2"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")

    def masses(self) -> np.ndarray:
        return np.array([self.m1, self.m2])

    def stiffness(self) -> np.ndarray:
        return np.array([self.K1, self.K2])

    def damping(self) -> np.ndarray:
        return np.array([self.D1, self.D2])

    def theta(self) -> np.ndarray:
        """Parameter vector (m1, m2, K1, K2, D1, D2) used by the regressor."""
        return np.array([self.m1, self.m2, self.K1, self.K2, self.D1, self.D2])

    def scaled(self, factor: float) -> "DynamicParams":
        return DynamicParams(*(factor * self.theta()))

    @staticmethod
    def from_theta(theta) -> "DynamicParams":
        return DynamicParams(*np.asarray(theta, dtype=float).reshape(6))


@dataclass(frozen=True)
class ActuationMap:
    """Torque produced per unit pressure for each segment [N m/bar]."""

    alpha1: float
    alpha2: float

    def __post_init__(self) -> None:
        if self.alpha1 <= 0.0 or self.alpha2 <= 0.0:
            raise ValueError("actuation slopes must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha1, self.alpha2])

    def scaled(self, factor: float) -> "ActuationMap":
        return ActuationMap(factor * self.alpha1, factor * self.alpha2)


@dataclass
class DynamicsMatrices:
    """Inertia M [kg m^2], Coriolis C, gravity torque G [N m] in q-space."""

    M: np.ndarray
    C: np.ndarray
    G: np.ndarray


# ---------------------------------------------------------------------------
# point-mass kinematics in q-space
# ---------------------------------------------------------------------------

def _mass_points(q, lengths):
    """Positions, Jacobians and Jacobian gradients of both chord-midpoint
    masses.  Returns two tuples (p, J, H) with H[k] = dJ/dq_k."""
    q1, q2 = _qvec(q)
    L1, L2 = float(lengths[0]), float(lengths[1])
    h1 = 0.5 * q1
    w = 0.5 * q2 - q1
    g1, g2 = half_chord(q1), half_chord(q2)
    d1, d2 = half_chord_d(q1), half_chord_d(q2)
    c1, c2 = half_chord_dd(q1), half_chord_dd(q2)
    v1, v1p = _dir(h1), _dir_d(h1)
    vw, vwp = _dir(w), _dir_d(w)

    a1 = d1 * v1 + 0.5 * g1 * v1p           # d/dq1 [g(q1) v(q1/2)]
    a1p = c1 * v1 + d1 * v1p - 0.25 * g1 * v1

    p1 = L1 * g1 * v1
    J1 = np.zeros((2, 2))
    J1[:, 0] = L1 * a1
    H1 = np.zeros((2, 2, 2))
    H1[0][:, 0] = L1 * a1p

    p2 = 2.0 * L1 * g1 * v1 + L2 * g2 * vw
    J2 = np.empty((2, 2))
    J2[:, 0] = 2.0 * L1 * a1 - L2 * g2 * vwp
    J2[:, 1] = L2 * (d2 * vw + 0.5 * g2 * vwp)
    H2 = np.empty((2, 2, 2))
    cross = -L2 * d2 * vwp + 0.5 * L2 * g2 * vw
    H2[0][:, 0] = 2.0 * L1 * a1p - L2 * g2 * vw
    H2[0][:, 1] = cross
    H2[1][:, 0] = cross
    H2[1][:, 1] = L2 * (c2 * vw + d2 * vwp - 0.25 * g2 * vw)
    return (p1, J1, H1), (p2, J2, H2)


def _christoffel(dM: np.ndarray, vel: np.ndarray) -> np.ndarray:
    """Coriolis matrix from the stacked inertia gradient dM[i] = dM/dq_i."""
    t1 = np.einsum("ikj,i->kj", dM, vel)
    t2 = np.einsum("jki,i->kj", dM, vel)
    t3 = np.einsum("kij,i->kj", dM, vel)
    return 0.5 * (t1 + t2 - t3)


def dynamics_mass_parts(q, qdot, kins, gravity):
    """Unit-mass (M, C, G) contributions of each lumped mass.

    The full matrices are m1 * parts[0] + m2 * parts[1]; the decomposition
    feeds the linear-in-parameters regressors.
    """
    lengths = _as_lengths(kins)
    q1, q2 = float(q[0]), float(q[1])
    qd1, qd2 = float(qdot[0]), float(qdot[1])
    L1, L2 = float(lengths[0]), float(lengths[1])
    gx, gy = float(gravity[0]), float(gravity[1])

    h1 = 0.5 * q1
    w = 0.5 * q2 - q1
    s1, co1 = math.sin(h1), math.cos(h1)
    sw, cw = math.sin(w), math.cos(w)
    g1, d1, c1 = half_chord(q1), half_chord_d(q1), half_chord_dd(q1)
    g2, d2, c2 = half_chord(q2), half_chord_d(q2), half_chord_dd(q2)

    a1x = d1 * s1 + 0.5 * g1 * co1
    a1y = d1 * co1 - 0.5 * g1 * s1
    j1x, j1y = L1 * a1x, L1 * a1y
    h1x = L1 * (c1 * s1 + d1 * co1 - 0.25 * g1 * s1)
    h1y = L1 * (c1 * co1 - d1 * s1 - 0.25 * g1 * co1)

    # mass 1: only the (0, 0) entries are nonzero
    Ma = np.zeros((2, 2))
    Ma[0, 0] = j1x * j1x + j1y * j1y
    dMa0_00 = 2.0 * (h1x * j1x + h1y * j1y)
    Ca = np.zeros((2, 2))
    Ca[0, 0] = 0.5 * dMa0_00 * qd1
    Ga = np.array([-(j1x * gx + j1y * gy), 0.0])

    # mass 2
    a = 2.0 * L1 * a1x - L2 * g2 * cw
    cc = 2.0 * L1 * a1y + L2 * g2 * sw
    b = L2 * (d2 * sw + 0.5 * g2 * cw)
    d = L2 * (d2 * cw - 0.5 * g2 * sw)
    e = 2.0 * h1x - L2 * g2 * sw
    f = 2.0 * h1y - L2 * g2 * cw
    crx = -L2 * d2 * cw + 0.5 * L2 * g2 * sw
    cry = L2 * d2 * sw + 0.5 * L2 * g2 * cw
    gxx = L2 * (c2 * sw + d2 * cw - 0.25 * g2 * sw)
    gyy = L2 * (c2 * cw - d2 * sw - 0.25 * g2 * cw)

    Mb = np.array([[a * a + cc * cc, a * b + cc * d],
                   [a * b + cc * d, b * b + d * d]])
    dM0_00 = 2.0 * (e * a + f * cc)
    dM0_01 = e * b + f * d + crx * a + cry * cc
    dM0_11 = 2.0 * (crx * b + cry * d)
    dM1_00 = 2.0 * (crx * a + cry * cc)
    dM1_01 = crx * b + cry * d + gxx * a + gyy * cc
    dM1_11 = 2.0 * (gxx * b + gyy * d)
    Cb = np.array([
        [0.5 * (dM0_00 * qd1 + dM1_00 * qd2),
         0.5 * (dM1_00 * qd1 + (2.0 * dM1_01 - dM0_11) * qd2)],
        [0.5 * ((2.0 * dM0_01 - dM1_00) * qd1 + dM0_11 * qd2),
         0.5 * (dM0_11 * qd1 + dM1_11 * qd2)]])
    Gb = np.array([-(a * gx + cc * gy), -(b * gx + d * gy)])
    return (Ma, Ca, Ga), (Mb, Cb, Gb)


def direct_dynamics(q, qdot, params: DynamicParams, kins,
                    gravity) -> DynamicsMatrices:
    """Point-mass dynamics differentiated directly in q-space.

    Scalar-unrolled: this sits inside every integrator stage.
    """
    lengths = _as_lengths(kins)
    q1, q2 = float(q[0]), float(q[1])
    qd1, qd2 = float(qdot[0]), float(qdot[1])
    L1, L2 = float(lengths[0]), float(lengths[1])
    m1, m2 = params.m1, params.m2
    gx, gy = float(gravity[0]), float(gravity[1])

    h1 = 0.5 * q1
    w = 0.5 * q2 - q1
    s1, co1 = math.sin(h1), math.cos(h1)
    sw, cw = math.sin(w), math.cos(w)
    g1, d1, c1 = half_chord(q1), half_chord_d(q1), half_chord_dd(q1)
    g2, d2, c2 = half_chord(q2), half_chord_d(q2), half_chord_dd(q2)

    # first mass: J has only column 0
    a1x = d1 * s1 + 0.5 * g1 * co1
    a1y = d1 * co1 - 0.5 * g1 * s1
    j1x, j1y = L1 * a1x, L1 * a1y
    h1x = L1 * (c1 * s1 + d1 * co1 - 0.25 * g1 * s1)
    h1y = L1 * (c1 * co1 - d1 * s1 - 0.25 * g1 * co1)

    # second mass: full 2x2 Jacobian [[a, b], [cc, d]]
    a = 2.0 * L1 * a1x - L2 * g2 * cw
    cc = 2.0 * L1 * a1y + L2 * g2 * sw
    b = L2 * (d2 * sw + 0.5 * g2 * cw)
    d = L2 * (d2 * cw - 0.5 * g2 * sw)
    # dJ2/dq1 = [[e, crx], [f, cry]], dJ2/dq2 = [[crx, gxx], [cry, gyy]]
    e = 2.0 * h1x - L2 * g2 * sw
    f = 2.0 * h1y - L2 * g2 * cw
    crx = -L2 * d2 * cw + 0.5 * L2 * g2 * sw
    cry = L2 * d2 * sw + 0.5 * L2 * g2 * cw
    gxx = L2 * (c2 * sw + d2 * cw - 0.25 * g2 * sw)
    gyy = L2 * (c2 * cw - d2 * sw - 0.25 * g2 * cw)

    M00 = m1 * (j1x * j1x + j1y * j1y) + m2 * (a * a + cc * cc)
    M01 = m2 * (a * b + cc * d)
    M11 = m2 * (b * b + d * d)

    # dM/dq1
    dM0_00 = 2.0 * (m1 * (h1x * j1x + h1y * j1y) + m2 * (e * a + f * cc))
    dM0_01 = m2 * (e * b + f * d + crx * a + cry * cc)
    dM0_11 = 2.0 * m2 * (crx * b + cry * d)
    # dM/dq2
    dM1_00 = 2.0 * m2 * (crx * a + cry * cc)
    dM1_01 = m2 * (crx * b + cry * d + gxx * a + gyy * cc)
    dM1_11 = 2.0 * m2 * (gxx * b + gyy * d)

    # Christoffel C[k, j] = 0.5 sum_i (dMi[k,j] + dMj[k,i] - dMk[i,j]) qd_i
    C00 = 0.5 * (dM0_00 * qd1 + dM1_00 * qd2)
    C01 = 0.5 * (dM1_00 * qd1 + (2.0 * dM1_01 - dM0_11) * qd2)
    C10 = 0.5 * ((2.0 * dM0_01 - dM1_00) * qd1 + dM0_11 * qd2)
    C11 = 0.5 * (dM0_11 * qd1 + dM1_11 * qd2)

    G0 = -(m1 * (j1x * gx + j1y * gy) + m2 * (a * gx + cc * gy))
    G1 = -m2 * (b * gx + d * gy)
    return DynamicsMatrices(np.array([[M00, M01], [M01, M11]]),
                            np.array([[C00, C01], [C10, C11]]),
                            np.array([G0, G1]))


def gravity_potential(q, params: DynamicParams, kins, gravity) -> float:
    """Gravitational potential energy [J] of the two lumped masses."""
    g_vec = np.asarray(gravity, dtype=float).reshape(2)
    (p1, _, _), (p2, _, _) = _mass_points(q, _as_lengths(kins))
    return -params.m1 * float(g_vec @ p1) - params.m2 * float(g_vec @ p2)


def gravity_torque_gradient(q, params: DynamicParams, kins, gravity) -> np.ndarray:
    """dG/dq, used by the static-equilibrium solver."""
    g_vec = np.asarray(gravity, dtype=float).reshape(2)
    (_, _, H1), (_, _, H2) = _mass_points(q, _as_lengths(kins))
    dG = np.empty((2, 2))
    for k in range(2):
        dG[:, k] = -params.m1 * (H1[k].T @ g_vec) - params.m2 * (H2[k].T @ g_vec)
    return dG


# ---------------------------------------------------------------------------
# equivalent rigid chain (mapped route)
# ---------------------------------------------------------------------------

def config_map(q, kins: KinematicParams) -> np.ndarray:
    """Joint vector zeta of the equivalent rigid chain.

    Per segment: half-bend rotation, two half-chord slides, and the closing
    rotation -q/2 whose in-plane effect is a further +q/2.
    """
    q1, q2 = _qvec(q)
    d1 = kins.L1 * half_chord(q1)
    d2 = kins.L2 * half_chord(q2)
    return np.array([0.5 * q1, d1, d1, -0.5 * q1,
                     0.5 * q2, d2, d2, -0.5 * q2])


def map_jacobian(q, kins: KinematicParams) -> np.ndarray:
    """d(zeta)/dq, 8x2 and block diagonal per segment."""
    q1, q2 = _qvec(q)
    Jm = np.zeros((8, 2))
    s1 = kins.L1 * half_chord_d(q1)
    s2 = kins.L2 * half_chord_d(q2)
    Jm[0, 0] = 0.5
    Jm[1, 0] = s1
    Jm[2, 0] = s1
    Jm[3, 0] = -0.5
    Jm[4, 1] = 0.5
    Jm[5, 1] = s2
    Jm[6, 1] = s2
    Jm[7, 1] = -0.5
    return Jm


def map_jacobian_dot(q, qdot, kins: KinematicParams) -> np.ndarray:
    """Time derivative of map_jacobian along (q, qdot)."""
    q1, q2 = _qvec(q)
    qd1, qd2 = np.asarray(qdot, dtype=float).reshape(2)
    Jmd = np.zeros((8, 2))
    r1 = kins.L1 * half_chord_dd(q1) * qd1
    r2 = kins.L2 * half_chord_dd(q2) * qd2
    Jmd[1, 0] = r1
    Jmd[2, 0] = r1
    Jmd[5, 1] = r2
    Jmd[6, 1] = r2
    return Jmd


def chain_mass_points(zeta):
    """Positions and Jacobians of the two point masses as functions of the
    rigid-chain joints."""
    z = np.asarray(zeta, dtype=float).reshape(8)
    h1 = z[0]                    # first-segment slide heading
    h2 = z[4] + z[3] - z[0]      # second-segment slide heading
    v1, v1p = _dir(h1), _dir_d(h1)
    v2, v2p = _dir(h2), _dir_d(h2)

    p1 = z[1] * v1
    J1 = np.zeros((2, 8))
    J1[:, 0] = z[1] * v1p
    J1[:, 1] = v1

    reach = z[1] + z[2]
    p2 = reach * v1 + z[5] * v2
    J2 = np.zeros((2, 8))
    J2[:, 0] = reach * v1p - z[5] * v2p
    J2[:, 1] = v1
    J2[:, 2] = v1
    J2[:, 3] = z[5] * v2p
    J2[:, 4] = z[5] * v2p
    J2[:, 5] = v2
    return (p1, J1), (p2, J2)


def chain_tip(zeta) -> np.ndarray:
    """Tip (x, y, theta) of the chained rigid segments."""
    z = np.asarray(zeta, dtype=float).reshape(8)
    h1 = z[0]
    h2 = z[4] + z[3] - z[0]
    p = (z[1] + z[2]) * _dir(h1) + (z[5] + z[6]) * _dir(h2)
    theta = (z[0] - z[3]) + (z[4] - z[7])
    return np.array([p[0], p[1], theta])


def _chain_inertia(zeta, masses) -> np.ndarray:
    (p1, J1), (p2, J2) = chain_mass_points(zeta)
    return masses[0] * (J1.T @ J1) + masses[1] * (J2.T @ J2)


def rigid_dynamics(zeta, zetadot, masses, gravity):
    """Point-mass dynamics of the equivalent chain in its 8 joint coordinates.

    The Coriolis matrix comes from Christoffel symbols of the inertia, with
    the inertia gradient taken by central differences.
    """
    z = np.asarray(zeta, dtype=float).reshape(8)
    zd = np.asarray(zetadot, dtype=float).reshape(8)
    m = np.asarray(masses, dtype=float).reshape(2)
    g_vec = np.asarray(gravity, dtype=float).reshape(2)

    (p1, J1), (p2, J2) = chain_mass_points(z)
    Mz = m[0] * (J1.T @ J1) + m[1] * (J2.T @ J2)
    Gz = -(m[0] * J1.T @ g_vec + m[1] * J2.T @ g_vec)

    dM = np.empty((8, 8, 8))
    for i in range(8):
        zp = z.copy()
        zp[i] += FD_STEP
        zm = z.copy()
        zm[i] -= FD_STEP
        dM[i] = (_chain_inertia(zp, m) - _chain_inertia(zm, m)) / (2.0 * FD_STEP)
    Cz = _christoffel(dM, zd)
    return Mz, Cz, Gz


def soft_dynamics(q, qdot, params: DynamicParams, kins: KinematicParams,
                  gravity) -> DynamicsMatrices:
    """Bend-angle dynamics obtained by pulling the rigid-chain dynamics back
    through the configuration map."""
    qd = np.asarray(qdot, dtype=float).reshape(2)
    zeta = config_map(q, kins)
    Jm = map_jacobian(q, kins)
    Jmd = map_jacobian_dot(q, qd, kins)
    Mz, Cz, Gz = rigid_dynamics(zeta, Jm @ qd, params.masses(), gravity)
    M = Jm.T @ Mz @ Jm
    C = Jm.T @ Mz @ Jmd + Jm.T @ Cz @ Jm
    G = Jm.T @ Gz
    return DynamicsMatrices(M, C, G)


# ---------------------------------------------------------------------------
# linear-in-parameters regressor
# ---------------------------------------------------------------------------

def dyn_regressor(q, qdot, qr_dot, qr_ddot, kins, gravity) -> np.ndarray:
    """2x6 matrix Yd with

        Yd @ (m1, m2, K1, K2, D1, D2) =
            M(q) qr_ddot + C(q, qdot) qr_dot + G(q) + D qdot + K q.

    Mass columns come from the unit-mass dynamics; stiffness and damping act
    through diag(q) and diag(qdot).
    """
    qv = _qvec(q)
    qd = np.asarray(qdot, dtype=float).reshape(2)
    qrd = np.asarray(qr_dot, dtype=float).reshape(2)
    qrdd = np.asarray(qr_ddot, dtype=float).reshape(2)
    parts = dynamics_mass_parts(qv, qd, kins, gravity)
    Y = np.zeros((2, 6))
    for i, (M_u, C_u, G_u) in enumerate(parts):
        Y[:, i] = M_u @ qrdd + C_u @ qrd + G_u
    Y[0, 2] = qv[0]
    Y[1, 3] = qv[1]
    Y[0, 4] = qd[0]
    Y[1, 5] = qd[1]
    return Y


# ---------------------------------------------------------------------------
# static equilibrium helper
# ---------------------------------------------------------------------------

def equilibrium_bend(tau, params: DynamicParams, kins, gravity,
                     q0=None, tol: float = 1e-12, max_iter: int = 100) -> np.ndarray:
    """Solve K q + G(q) = tau for the static bend angles by Newton iteration."""
    tau = np.asarray(tau, dtype=float).reshape(2)
    K = np.diag(params.stiffness())
    q = np.zeros(2) if q0 is None else np.asarray(q0, dtype=float).reshape(2).copy()
    for _ in range(max_iter):
        dyn = direct_dynamics(q, np.zeros(2), params, kins, gravity)
        r = K @ q + dyn.G - tau
        if float(np.hypot(*r)) < tol:
            return q
        Jr = K + gravity_torque_gradient(q, params, kins, gravity)
        q = q - np.linalg.solve(Jr, r)
    return q
