"""Planar constant-curvature kinematics of a two-segment pneumatic finger.

Each segment bends as a single circular arc parametrized by its bend angle
q_i [rad].  The finger is straight along +y at q = 0 and bends toward +x for
q > 0.  All positions are in meters, expressed in the finger base frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Below this bend angle the closed-form arc expressions are replaced by their
# series expansions to avoid 0/0 cancellation.
SERIES_EPS = 1e-4

# Workspace bound: each actuator can wrap at most one full turn.
Q_LIMIT = TWO_PI


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    th = math.remainder(theta, TWO_PI)
    if th <= -math.pi:
        th += TWO_PI
    return th


@dataclass(frozen=True)
class KinematicParams:
    """Segment lengths of the two bending actuators [m]."""

    L1: float
    L2: float

    def __post_init__(self) -> None:
        for name in ("L1", "L2"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            if value <= 0.0:
                raise ValueError(f"{name} must be positive, got {value!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.L1, self.L2])

    def scaled(self, factor: float) -> "KinematicParams":
        return KinematicParams(factor * self.L1, factor * self.L2)


@dataclass
class CurvatureState:
    """Bend angles q [rad] and rates qdot [rad/s] of both segments."""

    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=float).reshape(2).copy()
        self.qdot = np.asarray(self.qdot, dtype=float).reshape(2).copy()
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qdot))):
            raise ValueError("curvature state must be finite")
        if np.any(np.abs(self.q) > Q_LIMIT + 1e-12):
            raise ValueError(f"|q| exceeds the one-turn workspace bound {Q_LIMIT}")


@dataclass(frozen=True)
class PlanarPose:
    """Planar position [m] and orientation [rad], theta wrapped to (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


# ---------------------------------------------------------------------------
# arc shape functions
# ---------------------------------------------------------------------------

def arc_x(q: float) -> float:
    """(1 - cos q)/q, the lateral arc offset per unit length."""
    if abs(q) < SERIES_EPS:
        return 0.5 * q - q ** 3 / 24.0
    return (1.0 - math.cos(q)) / q


def arc_y(q: float) -> float:
    """sin(q)/q, the axial arc offset per unit length."""
    if abs(q) < SERIES_EPS:
        return 1.0 - q * q / 6.0
    return math.sin(q) / q


def arc_x_series(q: float) -> float:
    return 0.5 * q - q ** 3 / 24.0


def arc_y_series(q: float) -> float:
    return 1.0 - q * q / 6.0


# the derivative formulas cancel terms of order 1/q^2 and 1/q^3, so their
# series take over at much larger angles than the plain shape functions
SERIES_EPS_D = 1e-2
SERIES_EPS_DD = 5e-2


def half_chord(q: float) -> float:
    """sin(q/2)/q, half the chord length per unit arc length."""
    if abs(q) < SERIES_EPS:
        return 0.5 - q * q / 48.0
    return math.sin(0.5 * q) / q


def half_chord_d(q: float) -> float:
    """d/dq of half_chord."""
    if abs(q) < SERIES_EPS_D:
        return -q / 24.0 + q ** 3 / 960.0 - q ** 5 / 107520.0
    return math.cos(0.5 * q) / (2.0 * q) - math.sin(0.5 * q) / (q * q)


def half_chord_dd(q: float) -> float:
    """d2/dq2 of half_chord."""
    if abs(q) < SERIES_EPS_DD:
        return -1.0 / 24.0 + q * q / 320.0 - q ** 4 / 21504.0 + q ** 6 / 3317760.0
    s, c = math.sin(0.5 * q), math.cos(0.5 * q)
    return -s / (4.0 * q) - c / (q * q) + 2.0 * s / q ** 3


def _dir(h: float) -> np.ndarray:
    # unit vector at compass heading h (h = 0 along +y, positive toward +x)
    return np.array([math.sin(h), math.cos(h)])


def _dir_d(h: float) -> np.ndarray:
    return np.array([math.cos(h), -math.sin(h)])


# ---------------------------------------------------------------------------
# forward kinematics
# ---------------------------------------------------------------------------

def segment_transform(q_i: float, L_i: float) -> PlanarPose:
    """Pose of a single segment tip relative to its base.

    The segment rotates the frame by q_i and translates it by
    (L_i (1 - cos q_i)/q_i, L_i sin(q_i)/q_i).
    """
    if not (math.isfinite(q_i) and math.isfinite(L_i)):
        raise ValueError("segment_transform requires finite inputs")
    if L_i <= 0.0:
        raise ValueError(f"segment length must be positive, got {L_i!r}")
    return PlanarPose(L_i * arc_x(q_i), L_i * arc_y(q_i), q_i)


def _qvec(q) -> np.ndarray:
    if isinstance(q, CurvatureState):
        return q.q
    return np.asarray(q, dtype=float).reshape(2)


def fk_tip(q, k: KinematicParams) -> PlanarPose:
    """Tip pose of the two-segment finger: first-segment transform composed
    with the second-segment transform."""
    q1, q2 = _qvec(q)
    p1 = segment_transform(q1, k.L1)
    p2 = segment_transform(q2, k.L2)
    c, s = math.cos(q1), math.sin(q1)
    x = p1.x + c * p2.x - s * p2.y
    y = p1.y + s * p2.x + c * p2.y
    return PlanarPose(x, y, q1 + q2)


def tip_position(q, lengths) -> np.ndarray:
    """Tip position [m] for raw segment lengths (no validation)."""
    q1, q2 = float(q[0]), float(q[1])
    L1, L2 = float(lengths[0]), float(lengths[1])
    h1 = 0.5 * q1
    w = 0.5 * q2 - q1
    r1 = 2.0 * L1 * half_chord(q1)
    r2 = 2.0 * L2 * half_chord(q2)
    return np.array([r1 * math.sin(h1) + r2 * math.sin(w),
                     r1 * math.cos(h1) + r2 * math.cos(w)])


def fk_com(q, k: KinematicParams) -> tuple[np.ndarray, np.ndarray]:
    """Chord midpoints of both segments in the base frame.

    The lumped mass of segment i sits at half its chord; segment 2's chord
    starts at segment 1's tip frame.
    """
    q1, q2 = _qvec(q)
    w = 0.5 * q2 - q1
    com1 = k.L1 * half_chord(q1) * _dir(0.5 * q1)
    com2 = 2.0 * k.L1 * half_chord(q1) * _dir(0.5 * q1) + k.L2 * half_chord(q2) * _dir(w)
    return com1, com2


# ---------------------------------------------------------------------------
# differential kinematics
# ---------------------------------------------------------------------------

def jacobian(q, lengths) -> np.ndarray:
    """Tip Jacobian d(tip)/dq [m/rad] for raw segment lengths."""
    q1, q2 = float(q[0]), float(q[1])
    L1, L2 = float(lengths[0]), float(lengths[1])
    h1 = 0.5 * q1
    w = 0.5 * q2 - q1
    s1, c1v = math.sin(h1), math.cos(h1)
    sw, cw = math.sin(w), math.cos(w)
    g1, g2 = half_chord(q1), half_chord(q2)
    d1, d2 = half_chord_d(q1), half_chord_d(q2)
    return np.array([
        [2.0 * L1 * (d1 * s1 + 0.5 * g1 * c1v) - 2.0 * L2 * g2 * cw,
         2.0 * L2 * (d2 * sw + 0.5 * g2 * cw)],
        [2.0 * L1 * (d1 * c1v - 0.5 * g1 * s1) + 2.0 * L2 * g2 * sw,
         2.0 * L2 * (d2 * cw - 0.5 * g2 * sw)]])


def jacobian_dot(q, qdot, lengths) -> np.ndarray:
    """Time derivative of the tip Jacobian along (q, qdot)."""
    q1, q2 = float(q[0]), float(q[1])
    qd1, qd2 = float(qdot[0]), float(qdot[1])
    L1, L2 = float(lengths[0]), float(lengths[1])
    h1 = 0.5 * q1
    w = 0.5 * q2 - q1
    wd = 0.5 * qd2 - qd1
    s1, c1v = math.sin(h1), math.cos(h1)
    sw, cw = math.sin(w), math.cos(w)
    g1, g2 = half_chord(q1), half_chord(q2)
    d1, d2 = half_chord_d(q1), half_chord_d(q2)
    c1, c2 = half_chord_dd(q1), half_chord_dd(q2)
    # d/dt of the column-0 first-segment part; the unit-vector second
    # derivative is -v
    a1dx = (c1 * s1 + d1 * c1v - 0.25 * g1 * s1) * qd1
    a1dy = (c1 * c1v - d1 * s1 - 0.25 * g1 * c1v) * qd1
    return np.array([
        [2.0 * L1 * a1dx - 2.0 * L2 * (d2 * qd2 * cw - g2 * sw * wd),
         2.0 * L2 * (c2 * qd2 * sw + d2 * cw * (wd + 0.5 * qd2) - 0.5 * g2 * sw * wd)],
        [2.0 * L1 * a1dy + 2.0 * L2 * (d2 * qd2 * sw + g2 * cw * wd),
         2.0 * L2 * (c2 * qd2 * cw - d2 * sw * (wd + 0.5 * qd2) - 0.5 * g2 * cw * wd)]])


def task_jacobian(q, k: KinematicParams) -> np.ndarray:
    return jacobian(q, k.as_array())


def task_jacobian_dot(q, qdot, k: KinematicParams) -> np.ndarray:
    return jacobian_dot(q, qdot, k.as_array())


def kin_regressor(q, qdot) -> np.ndarray:
    """Matrix Yk with Yk @ (L1, L2) = tip velocity, exactly.

    Column i is the tip-velocity contribution of segment i per unit length;
    the tip map is linear in the segment lengths.
    """
    q1, q2 = float(q[0]), float(q[1])
    qd1, qd2 = float(qdot[0]), float(qdot[1])
    h1 = 0.5 * q1
    w = 0.5 * q2 - q1
    s1, c1v = math.sin(h1), math.cos(h1)
    sw, cw = math.sin(w), math.cos(w)
    g1, g2 = half_chord(q1), half_chord(q2)
    d1, d2 = half_chord_d(q1), half_chord_d(q2)
    return np.array([
        [2.0 * (d1 * s1 + 0.5 * g1 * c1v) * qd1,
         -2.0 * g2 * cw * qd1 + 2.0 * (d2 * sw + 0.5 * g2 * cw) * qd2],
        [2.0 * (d1 * c1v - 0.5 * g1 * s1) * qd1,
         2.0 * g2 * sw * qd1 + 2.0 * (d2 * cw - 0.5 * g2 * sw) * qd2]])


# ---------------------------------------------------------------------------
# inverse kinematics (scenario setup helper)
# ---------------------------------------------------------------------------

_IK_SEEDS = (
    (0.3, 0.3), (0.8, 0.8), (1.2, 1.2), (0.5, 1.5), (1.5, 0.5),
    (1.0, 2.5), (2.0, 3.0), (1.5, 3.5), (2.5, 1.0), (0.2, 2.0),
    (-0.8, -0.8), (-1.0, -2.5), (-0.5, -1.5), (3.0, 4.5), (0.9, 1.9),
)


def tip_inverse(target, lengths, q0=None, tol: float = 1e-12, max_iter: int = 200):
    """Solve tip_position(q) = target by damped Newton iteration.

    Returns the first converged solution with |q_i| <= 2*pi; raises
    ValueError when no seed converges.
    """
    target = np.asarray(target, dtype=float).reshape(2)
    seeds = [np.asarray(q0, dtype=float)] if q0 is not None else [np.array(s) for s in _IK_SEEDS]
    for seed in seeds:
        q = seed.astype(float).copy()
        lam = 1e-10
        for _ in range(max_iter):
            r = tip_position(q, lengths) - target
            if float(r @ r) < tol * tol:
                break
            J = jacobian(q, lengths)
            A = J.T @ J + lam * np.eye(2)
            try:
                step = np.linalg.solve(A, J.T @ r)
            except np.linalg.LinAlgError:
                break
            q_new = q - step
            r_new = tip_position(q_new, lengths) - target
            if float(r_new @ r_new) < float(r @ r):
                q = q_new
                lam = max(lam * 0.5, 1e-12)
            else:
                lam = min(lam * 10.0, 1e6)
        r = tip_position(q, lengths) - target
        if float(np.hypot(*r)) < 1e-9 and np.all(np.abs(q) <= TWO_PI):
            return q
    raise ValueError(f"tip target {target} is not reachable with lengths {lengths}")
