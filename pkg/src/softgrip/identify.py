"""Least-squares identification of stiffness, damping and actuation slopes
from pressure-ramp trajectories.

The equation of motion is rearranged into a tall linear system: each logged
sample contributes the row block

    [diag(q)  diag(qdot)  -diag(P)] @ (K1, K2, D1, D2, a1, a2)
        = -(M(q) qdd + C(q, qdot) qdot + G(q))

with masses and lengths known from direct measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DynamicParams, direct_dynamics, equilibrium_bend
from .kinematics import CurvatureState, KinematicParams
from .simulate import (
    FingerModel,
    OpenLoopPressure,
    PressureSignal,
    Scenario,
    SimConfig,
    Trajectory,
    accel,
    simulate,
)

PARAM_NAMES = ("K1", "K2", "D1", "D2", "alpha1", "alpha2")


class IdentificationError(ValueError):
    pass


@dataclass
class IdentSample:
    q: np.ndarray       # [rad]
    qdot: np.ndarray    # [rad/s]
    qddot: np.ndarray   # [rad/s^2]
    pressure: np.ndarray  # [bar]


@dataclass
class IdentResult:
    x: np.ndarray                 # (K1, K2, D1, D2, alpha1, alpha2)
    residual: float               # ||A x - Y||
    condition: float              # cond(A)
    negative: tuple = ()          # names of non-physical negative estimates

    def as_dict(self) -> dict:
        return dict(zip(PARAM_NAMES, self.x))


def build_regression(samples, masses, kins: KinematicParams, gravity):
    """Stack one 2-row block per sample into (A, Y)."""
    samples = list(samples)
    if len(samples) < 3:
        raise IdentificationError(f"need at least 3 samples, got {len(samples)}")
    masses = np.asarray(masses, dtype=float).reshape(2)
    params = DynamicParams(masses[0], masses[1], 1.0, 1.0, 0.0, 0.0)  # K, D unused here
    n = len(samples)
    A = np.zeros((2 * n, 6))
    Y = np.zeros(2 * n)
    for i, s in enumerate(samples):
        r = 2 * i
        A[r, 0] = s.q[0]
        A[r + 1, 1] = s.q[1]
        A[r, 2] = s.qdot[0]
        A[r + 1, 3] = s.qdot[1]
        A[r, 4] = -s.pressure[0]
        A[r + 1, 5] = -s.pressure[1]
        dyn = direct_dynamics(s.q, s.qdot, params, kins, gravity)
        Y[r:r + 2] = -(dyn.M @ s.qddot + dyn.C @ s.qdot + dyn.G)
    return A, Y


def solve_least_squares(A, Y) -> IdentResult:
    """Minimum-residual solve by orthogonal (SVD) factorization."""
    A = np.asarray(A, dtype=float)
    Y = np.asarray(Y, dtype=float)
    u, sing, vt = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(sing > sing[0] * max(A.shape) * np.finfo(float).eps))
    if rank < A.shape[1]:
        null = vt[rank:]
        bad = sorted({PARAM_NAMES[j] for row in null for j in np.nonzero(np.abs(row) > 1e-8)[0]})
        raise IdentificationError(
            f"regression rank {rank} < 6; unidentifiable directions involve {', '.join(bad)}")
    x = vt.T @ ((u.T @ Y) / sing)
    residual = float(np.linalg.norm(A @ x - Y))
    condition = float(sing[0] / sing[-1])
    negative = tuple(name for name, val in zip(PARAM_NAMES, x) if val < 0.0)
    return IdentResult(x, residual, condition, negative)


# ---------------------------------------------------------------------------
# ramp experiment
# ---------------------------------------------------------------------------

@dataclass
class RampProtocol:
    start: float = 0.3        # [bar]
    end: float = 1.8          # [bar]
    slope: float = 0.1        # [bar/s]
    mode: str = "separate"    # pressurize each actuator alone, or "joint"
    settle_start: bool = True  # start from the static bend under the start pressure
    decimate: int = 50        # sensor-pipeline resampling factor
    sg_window: int = 1201     # smoothing window [samples], odd; the damping
    sg_order: int = 3          # signal is quasi-static so wide windows win

    def duration(self) -> float:
        return (self.end - self.start) / self.slope


def _savgol_weights(window: int, order: int, deriv: int, dt: float) -> np.ndarray:
    """Least-squares polynomial smoothing weights for the window center."""
    half = window // 2
    x = np.arange(-half, half + 1) * dt
    V = np.vander(x, order + 1, increasing=True)
    # row of the pseudo-inverse picking the deriv-th polynomial coefficient
    coeff = np.linalg.pinv(V)[deriv] * math.factorial(deriv)
    return coeff


def _smooth_derivatives(signal: np.ndarray, dt: float, window: int, order: int):
    """Smoothed value, rate and acceleration of a sampled signal.

    Returns arrays shortened by one window at each end.
    """
    n = signal.shape[0]
    if n < 3 * window:
        raise IdentificationError("trajectory too short for the smoothing window")
    out = []
    for deriv in range(3):
        w = _savgol_weights(window, order, deriv, dt)
        cols = []
        for j in range(signal.shape[1]):
            cols.append(np.convolve(signal[:, j], w[::-1], mode="valid"))
        out.append(np.stack(cols, axis=1))
    return out


def _ramp_signals(protocol: RampProtocol, active: tuple) -> tuple:
    sig = []
    for seg in range(2):
        if active[seg]:
            sig.append(PressureSignal(kind="ramp", start=protocol.start,
                                      end=protocol.end, slope=protocol.slope))
        else:
            sig.append(PressureSignal(kind="constant", offset=0.0))
    return tuple(sig)


# toward full pressure the smallest inertia eigenvalue collapses and the fast
# mode climbs past 300 rad/s; the ramp integrates at this step or finer
RAMP_MAX_DT = 2e-4


def _run_ramp(model: FingerModel, config: SimConfig, protocol: RampProtocol,
              active: tuple) -> Trajectory:
    controller = OpenLoopPressure(*_ramp_signals(protocol, active))
    p0 = np.array([protocol.start if a else 0.0 for a in active])
    if protocol.settle_start:
        q0 = equilibrium_bend(model.act.as_array() * p0, model.params, model.kin,
                              config.gravity_vec())
    else:
        q0 = np.zeros(2)
    scenario = Scenario(initial=CurvatureState(q0, np.zeros(2)))
    stride = max(1, int(round(config.dt / RAMP_MAX_DT)))
    run_cfg = SimConfig(dt=config.dt / stride, duration=protocol.duration(),
                        gravity=config.gravity, noise_std=0.0, seed=config.seed,
                        filter_cutoff=math.inf, pressure_limit=config.pressure_limit)
    return simulate(model, controller, scenario, run_cfg).subsample(stride)


def _exact_samples(traj: Trajectory, model: FingerModel, gravity) -> list:
    samples = []
    for i in range(len(traj.t)):
        qdd = accel(traj.q[i], traj.qdot[i], traj.tau[i], traj.force[i], model, gravity)
        samples.append(IdentSample(traj.q[i].copy(), traj.qdot[i].copy(), qdd,
                                   traj.pressure[i].copy()))
    return samples


def _sensor_samples(traj: Trajectory, protocol: RampProtocol, dt: float,
                    noise_std: float, rng: np.random.Generator) -> list:
    q_noisy = traj.q + rng.normal(0.0, noise_std, size=traj.q.shape)
    q_s, qd_s, qdd_s = _smooth_derivatives(q_noisy, dt, protocol.sg_window, protocol.sg_order)
    trim = protocol.sg_window // 2
    p = traj.pressure[trim:trim + q_s.shape[0]]
    step = max(protocol.decimate, 1)
    samples = []
    for i in range(0, q_s.shape[0], step):
        samples.append(IdentSample(q_s[i], qd_s[i], qdd_s[i], p[i].copy()))
    return samples


def generate_ramp_experiment(model: FingerModel, config: SimConfig,
                             protocol: RampProtocol | None = None):
    """Run the identification ramps and return (samples, trajectories).

    With noise disabled the samples carry the exact logged state and the
    acceleration recomputed from the equation of motion.  With sensor noise,
    bend angles are perturbed, smoothed and differentiated numerically.
    """
    protocol = protocol or RampProtocol()
    gravity = config.gravity_vec()
    if protocol.mode == "separate":
        runs = [(True, False), (False, True)]
    elif protocol.mode == "joint":
        runs = [(True, True)]
    else:
        raise IdentificationError(f"unknown ramp mode {protocol.mode!r}")

    rng = np.random.default_rng(config.seed)
    samples: list = []
    trajectories = []
    for active in runs:
        traj = _run_ramp(model, config, protocol, active)
        trajectories.append(traj)
        if config.noise_std > 0.0:
            samples.extend(_sensor_samples(traj, protocol, config.dt, config.noise_std, rng))
        else:
            samples.extend(_exact_samples(traj, model, gravity))
    return samples, trajectories


def identify(model: FingerModel, config: SimConfig,
             protocol: RampProtocol | None = None) -> IdentResult:
    """Full round trip: ramp experiment, regression, least-squares solve."""
    samples, _ = generate_ramp_experiment(model, config, protocol)
    A, Y = build_regression(samples, model.params.masses(), model.kin, config.gravity_vec())
    return solve_least_squares(A, Y)


def samples_from_trajectory_csv(path) -> list:
    """Load identification samples from an exported trajectory file.

    The file must carry the standard columns (t, q1, q2, qdot1, qdot2, p1,
    p2); accelerations are reconstructed by central differences.
    """
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    col = {name: data[:, i] for i, name in enumerate(header)}
    t = col["t"]
    if len(t) < 3:
        raise IdentificationError("trajectory too short to differentiate")
    dt = float(t[1] - t[0])
    q = np.stack([col["q1"], col["q2"]], axis=1)
    qd = np.stack([col["qdot1"], col["qdot2"]], axis=1)
    p = np.stack([col["p1"], col["p2"]], axis=1)
    qdd = (qd[2:] - qd[:-2]) / (2.0 * dt)
    return [IdentSample(q[i], qd[i], qdd[i - 1], p[i]) for i in range(1, len(t) - 1)]
