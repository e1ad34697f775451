"""INI-style run configuration with hardware defaults.

Every key has a typed default; unknown sections or keys are hard errors that
name the offending line, so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .control import CartesianGains, JointGains, PIDGains
from .cooperative import CoopGains, GripperLayout, GripSpec
from .dynamics import ActuationMap, DynamicParams
from .identify import RampProtocol
from .kinematics import KinematicParams
from .simulate import FingerModel, Obstacle, SimConfig


class ConfigError(ValueError):
    pass


SCENARIOS = (
    "identify", "validate-dynamics",
    "joint-adaptive", "joint-pid", "joint-adaptive-contact", "joint-pid-contact",
    "cartesian-adaptive", "cartesian-fblin", "grasp",
)


@dataclass(frozen=True)
class _Opt:
    default: object
    kind: str = "float"          # float | int | str
    lo: float | None = None      # exclusive lower bound
    lo_closed: float | None = None  # inclusive lower bound
    choices: tuple = ()


# defaults: measured geometry/mass, identified stiffness/damping/actuation,
# and the controller gain tables
SCHEMA: dict = {
    "finger": {
        "L1_mm": _Opt(67.0, lo=0.0),
        "L2_mm": _Opt(77.0, lo=0.0),
        "m1_g": _Opt(20.0, lo=0.0),
        "m2_g": _Opt(25.1, lo=0.0),
        "K1": _Opt(0.068, lo=0.0),
        "K2": _Opt(0.07, lo=0.0),
        "D1": _Opt(0.0029, lo_closed=0.0),
        "D2": _Opt(0.0029, lo_closed=0.0),
        "alpha1": _Opt(0.076, lo=0.0),
        "alpha2": _Opt(0.062, lo=0.0),
    },
    "sim": {
        "dt": _Opt(1e-3, lo=0.0),
        "duration": _Opt(0.0, lo_closed=0.0),   # 0 = scenario default
        "gravity_x": _Opt(0.0),
        "gravity_y": _Opt(-9.81),
        "noise_std": _Opt(0.0, lo_closed=0.0),
        "seed": _Opt(0, kind="int"),
        "filter_cutoff_hz": _Opt(30.0, lo=0.0),
        "pressure_limit_bar": _Opt(1.8, lo_closed=0.0),  # 0 = unlimited
        "rmse_skip_s": _Opt(3.0, lo_closed=0.0),
    },
    "joint": {
        "Kp": _Opt(0.015, lo=0.0),
        "Kv": _Opt(0.002, lo=0.0),
        "Ld": _Opt(0.001, lo=0.0),
        "lam": _Opt(10.0, lo=0.0),
        "Pf": _Opt(0.01, lo=0.0),
        "estimate_scale": _Opt(0.7, lo=0.0),
    },
    "pid": {
        "kp": _Opt(0.03),
        "kI": _Opt(1.2),
        "kd1": _Opt(0.004),
        "kd2": _Opt(0.0005),
        "integral_limit": _Opt(10.0, lo=0.0),
    },
    "cartesian": {
        "Kp": _Opt(50.0, lo=0.0),
        "Kv": _Opt(10.0, lo=0.0),
        "Ld": _Opt(0.01, lo=0.0),
        "Lk": _Opt(1.6, lo=0.0),
        "alpha_s": _Opt(3.0, lo=0.0),
        "Pf": _Opt(0.01, lo=0.0),
        "estimate_scale": _Opt(0.7, lo=0.0),
        "force_x_n": _Opt(0.2),
        "force_y_n": _Opt(0.0),
        "force_on_s": _Opt(3.0, lo_closed=0.0),
        "force_off_s": _Opt(12.0, lo_closed=0.0),
        "base_offset_x_mm": _Opt(62.0),
        "base_offset_y_mm": _Opt(0.0),
        "fblin_Kp": _Opt(3600.0, lo=0.0),
        "fblin_Kv": _Opt(84.0, lo=0.0),
    },
    "obstacle": {
        "point_x_mm": _Opt(0.0),
        "point_y_mm": _Opt(135.0),
        "normal_x": _Opt(0.0),
        "normal_y": _Opt(-1.0),
        "stiffness": _Opt(50.0, lo_closed=0.0),
    },
    "locked": {
        "kp": _Opt(200.0, lo=0.0),
        "kv": _Opt(3.0, lo=0.0),
        "gamma_k": _Opt(0.0325, lo=0.0),
        "gamma_d": _Opt(0.4, lo=0.0),
        "P": _Opt(1.0, lo=0.0),
        "lam": _Opt(20.0, lo=0.0),
    },
    "shaped": {
        "k": _Opt(100.0, lo=0.0),
        "kd": _Opt(5.0, lo=0.0),
        "gamma_d": _Opt(0.4, lo=0.0),
        "P": _Opt(1.0, lo=0.0),
        "lam": _Opt(20.0, lo=0.0),
    },
    "grasp": {
        "base_separation_mm": _Opt(200.0, lo=0.0),
        "object_side_mm": _Opt(20.0, lo=0.0),
        "object_mass_g": _Opt(20.0, lo=0.0),
        "Ks": _Opt(50.0, lo_closed=0.0),
        "rest_mm": _Opt(0.0, lo_closed=0.0),
        "mu": _Opt(1.0, lo=0.0),
        "margin": _Opt(2.0, lo=0.0),
        "disturbance_x_n": _Opt(0.0),
        "disturbance_y_n": _Opt(-0.3),
        "disturbance_on_s": _Opt(1.0, lo_closed=0.0),
        "kin_estimate_scale": _Opt(1.0, lo=0.0),
        "dyn_estimate_scale": _Opt(0.85, lo=0.0),
    },
    "identify": {
        "ramp_start_bar": _Opt(0.3, lo_closed=0.0),
        "ramp_end_bar": _Opt(1.8, lo=0.0),
        "ramp_slope_bar_s": _Opt(0.1, lo=0.0),
        "mode": _Opt("separate", kind="str", choices=("separate", "joint")),
        "decimate": _Opt(50, kind="int", lo_closed=1),
        "sg_window": _Opt(1201, kind="int", lo_closed=5),
        "sg_order": _Opt(3, kind="int", lo_closed=2),
    },
}

# per-scenario default overrides, applied before user values
SCENARIO_DEFAULTS: dict = {
    "validate-dynamics": {("sim", "duration"): 10.0},
    "joint-adaptive": {("sim", "duration"): 10.0},
    "joint-pid": {("sim", "duration"): 10.0},
    "joint-adaptive-contact": {("sim", "duration"): 10.0},
    "joint-pid-contact": {("sim", "duration"): 10.0},
    "cartesian-adaptive": {("sim", "duration"): 15.0, ("sim", "pressure_limit_bar"): 0.0,
                           ("sim", "dt"): 1e-4, ("sim", "filter_cutoff_hz"): math.inf},
    "cartesian-fblin": {("sim", "duration"): 15.0, ("sim", "pressure_limit_bar"): 0.0,
                        ("sim", "dt"): 1e-4, ("sim", "filter_cutoff_hz"): math.inf},
    "grasp": {("sim", "duration"): 8.0, ("sim", "pressure_limit_bar"): 0.0,
              ("sim", "dt"): 2e-4},
    # passive ramps run with the finger hanging tip-down; pointing up, the
    # gravity softening would snap the finger through before 1.8 bar
    "identify": {("sim", "gravity_y"): 9.81},
}


def _convert(section: str, key: str, raw: str, line_no: int):
    opt = SCHEMA[section][key]
    where = f"[{section}] {key} (line {line_no})"
    if opt.kind == "str":
        value = raw.strip()
        if opt.choices and value not in opt.choices:
            raise ConfigError(f"{where}: expected one of {opt.choices}, got {value!r}")
        return value
    try:
        value = int(raw) if opt.kind == "int" else float(raw)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {opt.kind}") from None
    if opt.lo is not None and not value > opt.lo:
        raise ConfigError(f"{where}: must be > {opt.lo}, got {value}")
    if opt.lo_closed is not None and not value >= opt.lo_closed:
        raise ConfigError(f"{where}: must be >= {opt.lo_closed}, got {value}")
    return value


@dataclass
class RunConfig:
    """Fully resolved configuration of one scenario run."""

    scenario: str
    values: dict = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.values[(section, key)]

    # --- structured views ---------------------------------------------

    def model(self) -> FingerModel:
        v = self.values
        return FingerModel(
            params=DynamicParams(v[("finger", "m1_g")] * 1e-3, v[("finger", "m2_g")] * 1e-3,
                                 v[("finger", "K1")], v[("finger", "K2")],
                                 v[("finger", "D1")], v[("finger", "D2")]),
            kin=KinematicParams(v[("finger", "L1_mm")] * 1e-3, v[("finger", "L2_mm")] * 1e-3),
            act=ActuationMap(v[("finger", "alpha1")], v[("finger", "alpha2")]))

    def sim(self, default_duration: float = 10.0) -> SimConfig:
        v = self.values
        duration = v[("sim", "duration")] or default_duration
        limit = v[("sim", "pressure_limit_bar")]
        return SimConfig(dt=v[("sim", "dt")], duration=duration,
                         gravity=(v[("sim", "gravity_x")], v[("sim", "gravity_y")]),
                         noise_std=v[("sim", "noise_std")], seed=v[("sim", "seed")],
                         filter_cutoff=v[("sim", "filter_cutoff_hz")],
                         pressure_limit=None if limit == 0.0 else limit)

    def joint_gains(self) -> JointGains:
        v = self.values
        return JointGains(Kp=v[("joint", "Kp")], Kv=v[("joint", "Kv")],
                          Ld=v[("joint", "Ld")], lam=v[("joint", "lam")],
                          Pf=v[("joint", "Pf")])

    def pid_gains(self) -> PIDGains:
        v = self.values
        return PIDGains(kp=v[("pid", "kp")], kI=v[("pid", "kI")],
                        kd1=v[("pid", "kd1")], kd2=v[("pid", "kd2")],
                        integral_limit=v[("pid", "integral_limit")])

    def cartesian_gains(self) -> CartesianGains:
        v = self.values
        return CartesianGains(Kp=v[("cartesian", "Kp")], Kv=v[("cartesian", "Kv")],
                              Ld=v[("cartesian", "Ld")], Lk=v[("cartesian", "Lk")],
                              alpha_s=v[("cartesian", "alpha_s")], Pf=v[("cartesian", "Pf")])

    def coop_gains(self) -> CoopGains:
        v = self.values
        return CoopGains(locked_kp=v[("locked", "kp")], locked_kv=v[("locked", "kv")],
                         gamma_Lk=v[("locked", "gamma_k")], gamma_Ld=v[("locked", "gamma_d")],
                         P_L=v[("locked", "P")], lam1=v[("locked", "lam")],
                         shaped_k=v[("shaped", "k")], shaped_kd=v[("shaped", "kd")],
                         gamma_Ed=v[("shaped", "gamma_d")], P_E=v[("shaped", "P")],
                         lam2=v[("shaped", "lam")])

    def grip_spec(self) -> GripSpec:
        v = self.values
        return GripSpec(side=v[("grasp", "object_side_mm")] * 1e-3,
                        mass=v[("grasp", "object_mass_g")] * 1e-3,
                        stiffness=v[("grasp", "Ks")], rest=v[("grasp", "rest_mm")] * 1e-3,
                        mu=v[("grasp", "mu")], margin=v[("grasp", "margin")])

    def gripper_layout(self) -> GripperLayout:
        return GripperLayout(separation=self.values[("grasp", "base_separation_mm")] * 1e-3)

    def obstacle(self) -> Obstacle:
        v = self.values
        return Obstacle(point=(v[("obstacle", "point_x_mm")] * 1e-3,
                               v[("obstacle", "point_y_mm")] * 1e-3),
                        normal=(v[("obstacle", "normal_x")], v[("obstacle", "normal_y")]),
                        stiffness=v[("obstacle", "stiffness")])

    def ramp_protocol(self) -> RampProtocol:
        v = self.values
        return RampProtocol(start=v[("identify", "ramp_start_bar")],
                            end=v[("identify", "ramp_end_bar")],
                            slope=v[("identify", "ramp_slope_bar_s")],
                            mode=v[("identify", "mode")],
                            decimate=v[("identify", "decimate")],
                            sg_window=v[("identify", "sg_window")],
                            sg_order=v[("identify", "sg_order")])


def parse_config(text: str, scenario: str = "joint-adaptive",
                 overrides: tuple = ()) -> RunConfig:
    """Resolve the INI-style text plus command-line overrides ("sec.key=val")
    against the schema and the scenario defaults."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    values = {(sec, key): opt.default for sec, keys in SCHEMA.items() for key, opt in keys.items()}
    values.update(SCENARIO_DEFAULTS.get(scenario, {}))

    section = None
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}] (line {line_no})")
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value' (line {line_no}): {raw_line.strip()!r}")
        if section is None:
            raise ConfigError(f"key outside any section (line {line_no}): {raw_line.strip()!r}")
        key, raw_val = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}] (line {line_no})")
        values[(section, key)] = _convert(section, key, raw_val, line_no)

    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        target, raw_val = item.split("=", 1)
        section, key = (part.strip() for part in target.split(".", 1))
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown override key {target!r}")
        values[(section, key)] = _convert(section, key, raw_val, 0)

    return RunConfig(scenario=scenario, values=values)
