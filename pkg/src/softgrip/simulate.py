"""Deterministic fixed-step simulation of one finger under pressure inputs,
tip forces, obstacle contact and sensor filtering."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    ActuationMap,
    DynamicParams,
    direct_dynamics,
    gravity_potential,
)
from .kinematics import CurvatureState, KinematicParams, jacobian, tip_position

PRESSURE_MIN = 0.0   # [bar]
PRESSURE_MAX = 1.8   # [bar]

# a run is aborted once the state leaves any physically meaningful regime
DIVERGENCE_SPEED = 1e3  # [rad/s]

BASE_COLUMNS = ("t", "q1", "q2", "qd1", "qd2", "qdot1", "qdot2",
                "tau1", "tau2", "p1", "p2", "tipx", "tipy", "fx", "fy")


class SimulationDiverged(RuntimeError):
    """Raised when the state blows up; carries the partial trajectory."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class FingerModel:
    """Physical description of one finger."""

    params: DynamicParams
    kin: KinematicParams
    act: ActuationMap


@dataclass
class SimConfig:
    dt: float = 1e-3                  # [s]
    duration: float = 10.0            # [s]
    gravity: tuple = (0.0, -9.81)     # [m/s^2]
    noise_std: float = 0.0            # bend-angle sensor noise [rad]
    seed: int = 0
    filter_cutoff: float = 30.0       # [Hz]; math.inf disables the filter
    pressure_limit: float | None = PRESSURE_MAX  # None = ideal actuation

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.duration < self.dt:
            raise ValueError("duration must be at least one step")

    def gravity_vec(self) -> np.ndarray:
        return np.asarray(self.gravity, dtype=float).reshape(2)

    def steps(self) -> int:
        return int(round(self.duration / self.dt))


@dataclass
class PressureSignal:
    """Scalar pressure source [bar]; output clamped to the valve range."""

    kind: str = "constant"
    offset: float = 0.0      # constant / sinusoid offset [bar]
    amplitude: float = 0.0   # sinusoid amplitude [bar]
    frequency: float = 0.0   # [rad/s]
    phase: float = 0.0       # [rad]
    slope: float = 0.0       # ramp slope [bar/s]
    start: float = 0.0       # ramp start level [bar]
    end: float = PRESSURE_MAX  # ramp end level [bar]

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "ramp", "sinusoid"):
            raise ValueError(f"unknown pressure signal kind {self.kind!r}")

    def value(self, t: float) -> float:
        if self.kind == "constant":
            p = self.offset
        elif self.kind == "sinusoid":
            p = self.offset + self.amplitude * math.sin(self.frequency * t + self.phase)
        else:
            lo, hi = min(self.start, self.end), max(self.start, self.end)
            p = min(max(self.start + self.slope * t, lo), hi)
        return min(max(p, PRESSURE_MIN), PRESSURE_MAX)


@dataclass
class Obstacle:
    """Half-plane spring obstacle; the normal points out of the obstacle."""

    point: tuple
    normal: tuple
    stiffness: float

    def __post_init__(self) -> None:
        if self.stiffness < 0.0:
            raise ValueError("obstacle stiffness must be non-negative")
        n = np.asarray(self.normal, dtype=float).reshape(2)
        norm = float(np.hypot(*n))
        if norm == 0.0:
            raise ValueError("obstacle normal must be nonzero")
        self.normal = tuple(n / norm)
        self.point = tuple(np.asarray(self.point, dtype=float).reshape(2))


def obstacle_force(tip, obstacle: Obstacle | None) -> np.ndarray:
    """One-sided linear spring force on the tip; zero outside the obstacle."""
    if obstacle is None:
        return np.zeros(2)
    n = np.asarray(obstacle.normal)
    depth = -float((np.asarray(tip) - np.asarray(obstacle.point)) @ n)
    if depth <= 0.0:
        return np.zeros(2)
    return obstacle.stiffness * depth * n


@dataclass
class ForceScenario:
    """Externally applied tip force: a constant force over a time window plus
    an optional obstacle."""

    tip_force: tuple = (0.0, 0.0)   # [N]
    t_on: float = 0.0
    t_off: float = math.inf
    obstacle: Obstacle | None = None

    def force_at(self, t: float, tip) -> np.ndarray:
        f = np.zeros(2)
        if self.t_on <= t < self.t_off:
            f = f + np.asarray(self.tip_force, dtype=float)
        return f + obstacle_force(tip, self.obstacle)

    def is_trivial(self) -> bool:
        return self.obstacle is None and self.tip_force[0] == 0.0 and self.tip_force[1] == 0.0


@dataclass
class Scenario:
    """Initial state plus the force environment of a run."""

    initial: CurvatureState
    forces: ForceScenario = field(default_factory=ForceScenario)


# ---------------------------------------------------------------------------
# plant
# ---------------------------------------------------------------------------

def pressure_to_torque(pressure, act: ActuationMap) -> np.ndarray:
    """Joint torque [N m] produced by chamber pressures [bar]."""
    p = np.asarray(pressure, dtype=float).reshape(2)
    if np.any(p < 0.0):
        raise ValueError(f"pressure must be non-negative, got {p}")
    return act.as_array() * p


def accel(q, qdot, tau, f_tip, model: FingerModel, gravity) -> np.ndarray:
    """Bend-angle acceleration from the equation of motion

        M qdd + (C + D) qd + G + K q = tau + J^T f_tip.
    """
    q = np.asarray(q, dtype=float).reshape(2)
    qd = np.asarray(qdot, dtype=float).reshape(2)
    dyn = direct_dynamics(q, qd, model.params, model.kin, gravity)
    f_tip = np.asarray(f_tip, dtype=float)
    rhs = (np.asarray(tau, dtype=float)
           - dyn.C @ qd - model.params.damping() * qd
           - dyn.G - model.params.stiffness() * q)
    if f_tip[0] != 0.0 or f_tip[1] != 0.0:
        rhs = rhs + jacobian(q, model.kin.as_array()).T @ f_tip
    # closed-form 2x2 solve; M is positive definite
    m00, m01 = dyn.M[0, 0], dyn.M[0, 1]
    m11 = dyn.M[1, 1]
    det = m00 * m11 - m01 * m01
    qdd = np.array([(m11 * rhs[0] - m01 * rhs[1]) / det,
                    (m00 * rhs[1] - m01 * rhs[0]) / det])
    if not (math.isfinite(qdd[0]) and math.isfinite(qdd[1])):
        raise FloatingPointError(f"non-finite acceleration at q={q}, qdot={qd}")
    return qdd


def rk4_step(f, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    """Classical 4th-order Runge-Kutta step for y' = f(t, y)."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


_ZERO2 = np.zeros(2)


def plant_step(t, y, tau, forces: ForceScenario, model: FingerModel, gravity, dt):
    """Advance (q, qdot) one step with the torque held constant; contact and
    windowed forces are re-evaluated inside each stage."""
    trivial = forces.is_trivial()

    def deriv(ts, ys):
        q, qd = ys[:2], ys[2:]
        if trivial:
            f_tip = _ZERO2
        else:
            f_tip = forces.force_at(ts, tip_position(q, model.kin.as_array()))
        return np.concatenate([qd, accel(q, qd, tau, f_tip, model, gravity)])

    return rk4_step(deriv, t, y, dt)


def total_energy(q, qdot, model: FingerModel, gravity) -> float:
    """Kinetic + gravitational + elastic energy [J]."""
    q = np.asarray(q, dtype=float).reshape(2)
    qd = np.asarray(qdot, dtype=float).reshape(2)
    dyn = direct_dynamics(q, qd, model.params, model.kin, gravity)
    elastic = 0.5 * float(q @ (model.params.stiffness() * q))
    return 0.5 * float(qd @ dyn.M @ qd) + gravity_potential(q, model.params, model.kin, gravity) + elastic


# ---------------------------------------------------------------------------
# sensing
# ---------------------------------------------------------------------------

class LowpassFilter:
    """First-order discrete low-pass, exact exponential update."""

    def __init__(self, cutoff_hz: float, dt: float):
        if cutoff_hz <= 0.0:
            raise ValueError("cutoff must be positive")
        self.alpha = 1.0 if math.isinf(cutoff_hz) else 1.0 - math.exp(-2.0 * math.pi * cutoff_hz * dt)
        self.y = None

    def reset(self, y0) -> None:
        self.y = np.array(y0, dtype=float)

    def update(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.y is None:
            self.y = np.zeros_like(x)
        self.y = self.y + self.alpha * (x - self.y)
        return self.y.copy()


@dataclass
class Measurement:
    q: np.ndarray
    qdot: np.ndarray
    tip: np.ndarray
    tipvel: np.ndarray


class _Sensor:
    """Measurement pipeline: optional Gaussian noise, then low-pass filtering,
    with the rate reconstructed by backward differences."""

    def __init__(self, config: SimConfig, rng: np.random.Generator, with_tip: bool = True):
        self.noise_std = config.noise_std
        self.exact = config.noise_std == 0.0 and math.isinf(config.filter_cutoff)
        self.filter = LowpassFilter(config.filter_cutoff, config.dt)
        self.dt = config.dt
        self.rng = rng
        self.prev = None
        self.with_tip = with_tip

    def measure(self, q, qdot, lengths) -> Measurement:
        if self.exact:
            q_m, qd_m = np.array(q), np.array(qdot)
        else:
            raw = np.array(q)
            if self.noise_std > 0.0:
                raw = raw + self.rng.normal(0.0, self.noise_std, size=2)
            if self.prev is None:
                self.filter.reset(raw)
            q_m = self.filter.update(raw)
            qd_m = np.zeros(2) if self.prev is None else (q_m - self.prev) / self.dt
            self.prev = q_m
        if self.with_tip:
            tip = tip_position(q, lengths)
            tipvel = jacobian(q, lengths) @ np.asarray(qdot)
        else:
            tip = tipvel = _ZERO2
        return Measurement(q_m, qd_m, tip, tipvel)


# ---------------------------------------------------------------------------
# trajectory log
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    qd: np.ndarray
    tau: np.ndarray
    pressure: np.ndarray
    tip: np.ndarray
    force: np.ndarray
    extras: dict

    def columns(self) -> list:
        return list(BASE_COLUMNS) + list(self.extras.keys())

    def column(self, name: str) -> np.ndarray:
        if name in self.extras:
            return self.extras[name]
        mapping = {"t": self.t,
                   "q1": self.q[:, 0], "q2": self.q[:, 1],
                   "qd1": self.qd[:, 0], "qd2": self.qd[:, 1],
                   "qdot1": self.qdot[:, 0], "qdot2": self.qdot[:, 1],
                   "tau1": self.tau[:, 0], "tau2": self.tau[:, 1],
                   "p1": self.pressure[:, 0], "p2": self.pressure[:, 1],
                   "tipx": self.tip[:, 0], "tipy": self.tip[:, 1],
                   "fx": self.force[:, 0], "fy": self.force[:, 1]}
        return mapping[name]

    def csv_text(self) -> str:
        names = self.columns()
        cols = [self.column(n) for n in names]
        lines = [",".join(names)]
        for i in range(len(self.t)):
            lines.append(",".join(f"{col[i]:.9g}" for col in cols))
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.csv_text())

    def subsample(self, stride: int) -> "Trajectory":
        if stride <= 1:
            return self
        sl = slice(None, None, stride)
        return Trajectory(self.t[sl], self.q[sl], self.qdot[sl], self.qd[sl],
                          self.tau[sl], self.pressure[sl], self.tip[sl],
                          self.force[sl], {k: v[sl] for k, v in self.extras.items()})


def simulate(model: FingerModel, controller, scenario: Scenario,
             config: SimConfig) -> Trajectory:
    """Run the closed loop at the integration rate with the command held over
    each step.  Deterministic for a fixed (config, seed)."""
    dt = config.dt
    n = config.steps()
    gravity = config.gravity_vec()
    lengths = model.kin.as_array()
    alpha = model.act.as_array()
    rng = np.random.default_rng(config.seed)
    sensor = _Sensor(config, rng, with_tip=getattr(controller, "needs_tip", True))
    torque_mode = getattr(controller, "output", "pressure") == "torque"

    t_log = np.zeros(n + 1)
    q_log = np.zeros((n + 1, 2))
    qdot_log = np.zeros((n + 1, 2))
    qd_log = np.full((n + 1, 2), np.nan)
    tau_log = np.zeros((n + 1, 2))
    p_log = np.zeros((n + 1, 2))
    tip_log = np.zeros((n + 1, 2))
    f_log = np.zeros((n + 1, 2))
    extras: dict = {}

    controller.reset()
    y = np.concatenate([scenario.initial.q, scenario.initial.qdot])

    def partial(k: int) -> Trajectory:
        sl = slice(0, k + 1)
        return Trajectory(t_log[sl], q_log[sl], qdot_log[sl], qd_log[sl],
                          tau_log[sl], p_log[sl], tip_log[sl], f_log[sl],
                          {key: val[sl] for key, val in extras.items()})

    for k in range(n + 1):
        t = k * dt
        q, qd = y[:2], y[2:]
        meas = sensor.measure(q, qd, lengths)
        command, info = controller.command(t, meas, dt)
        command = np.asarray(command, dtype=float).reshape(2)
        if torque_mode:
            tau = command
            p = tau / alpha
        else:
            p = command
            if config.pressure_limit is not None:
                p = np.clip(p, PRESSURE_MIN, config.pressure_limit)
            tau = alpha * p

        tip = tip_position(q, lengths)
        f_tip = scenario.forces.force_at(t, tip)

        t_log[k] = t
        q_log[k] = q
        qdot_log[k] = qd
        tau_log[k] = tau
        p_log[k] = p
        tip_log[k] = tip
        f_log[k] = f_tip
        if "qd1" in info:
            qd_log[k] = (info["qd1"], info["qd2"])
        for key, val in info.items():
            if key in ("qd1", "qd2"):
                continue
            if key not in extras:
                extras[key] = np.zeros(n + 1)
            extras[key][k] = val

        if k == n:
            break
        try:
            y = plant_step(t, y, tau, scenario.forces, model, gravity, dt)
        except FloatingPointError as exc:
            raise SimulationDiverged(f"state became non-finite at t={t:.4f} s: {exc}",
                                     partial(k)) from exc
        if not np.all(np.isfinite(y)):
            raise SimulationDiverged(f"state became non-finite at t={t:.4f} s", partial(k))
        if float(np.hypot(*y[2:])) > DIVERGENCE_SPEED:
            raise SimulationDiverged(
                f"bend rate {np.hypot(*y[2:]):.3g} rad/s exceeds {DIVERGENCE_SPEED} at t={t:.4f} s",
                partial(k))

    return partial(n)


class OpenLoopPressure:
    """Controller shim replaying two pressure signals."""

    output = "pressure"
    needs_tip = False

    def __init__(self, signal1: PressureSignal, signal2: PressureSignal):
        self.signals = (signal1, signal2)

    def reset(self) -> None:
        pass

    def command(self, t, meas, dt):
        return np.array([self.signals[0].value(t), self.signals[1].value(t)]), {}
