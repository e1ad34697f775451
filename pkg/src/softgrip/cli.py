"""Command-line front end: scenario execution, CSV/metric/plot emission.

    softgrip <scenario> --config cfg.ini --out results [--seed N] [--set k=v]

Exit codes: 0 success, 1 configuration error, 2 simulation divergence,
3 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .config import SCENARIOS, ConfigError, RunConfig, parse_config
from .control import (
    CartesianAdaptiveController,
    CartesianGains,
    FeedbackLinearizationController,
    JointAdaptiveController,
    JointPIDController,
    SineReference,
)
from .cooperative import CoopController, coop_simulate
from .dynamics import equilibrium_bend
from .identify import PARAM_NAMES, build_regression, generate_ramp_experiment, solve_least_squares
from .kinematics import CurvatureState, jacobian, tip_inverse
from .metrics import MetricsReport, read_csv_columns, report_from_columns
from .simulate import (
    ForceScenario,
    OpenLoopPressure,
    PressureSignal,
    Scenario,
    SimulationDiverged,
    simulate,
)
from .svgplot import write_line_chart


def _write_metrics(out: Path, csv_name: str, pairs, t_skip: float) -> MetricsReport:
    # metrics are recomputed from the rounded CSV so that re-deriving them
    # from the file reproduces the report exactly
    columns = read_csv_columns(out / csv_name)
    report = report_from_columns(columns, pairs, t_skip)
    report.to_csv(out / "metrics.csv")
    return report


def _tracking_plots(out: Path, columns: dict, pairs, ylabel: str) -> None:
    series = []
    for sig, ref in pairs:
        series.append((sig, columns["t"], columns[sig]))
        series.append((f"{ref}", columns["t"], columns[ref]))
    write_line_chart(out / "tracking.svg", "tracking", "t [s]", ylabel, series)
    err_series = [(f"{sig}-{ref}", columns["t"], columns[sig] - columns[ref])
                  for sig, ref in pairs]
    write_line_chart(out / "error.svg", "tracking error", "t [s]", ylabel, err_series)


def _print_report(report: MetricsReport) -> None:
    for name, r, mx, fin in report.rows:
        print(f"{name}: rmse={r:.6g} max={mx:.6g} final={fin:.6g} (t >= {report.t_skip:g} s)")


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def _run_identify(cfg: RunConfig, out: Path) -> int:
    model = cfg.model()
    sim_cfg = cfg.sim(default_duration=15.0)
    protocol = cfg.ramp_protocol()
    samples, trajs = generate_ramp_experiment(model, sim_cfg, protocol)
    for i, traj in enumerate(trajs, start=1):
        traj.to_csv(out / f"ramp_segment{i}.csv")
    A, Y = build_regression(samples, model.params.masses(), model.kin, sim_cfg.gravity_vec())
    result = solve_least_squares(A, Y)
    truth = np.concatenate([model.params.stiffness(), model.params.damping(),
                            model.act.as_array()])
    lines = ["parameter,value,truth,rel_error"]
    for name, value, true_val in zip(PARAM_NAMES, result.x, truth):
        rel = abs(value - true_val) / abs(true_val)
        lines.append(f"{name},{value:.9g},{true_val:.9g},{rel:.9g}")
        print(f"{name}: {value:.6g} (truth {true_val:.6g}, rel err {rel:.3g})")
    print(f"residual={result.residual:.6g} cond={result.condition:.6g}")
    if result.negative:
        print(f"warning: non-physical negative estimates for {', '.join(result.negative)}",
              file=sys.stderr)
    with open(out / "ident.csv", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    traj = trajs[0]
    write_line_chart(out / "ramp.svg", "identification ramp", "t [s]", "q [rad], P [bar]",
                     [("q1", traj.t, traj.q[:, 0]), ("q2", traj.t, traj.q[:, 1]),
                      ("p1", traj.t, traj.pressure[:, 0]), ("p2", traj.t, traj.pressure[:, 1])])
    return 0


def _run_validate(cfg: RunConfig, out: Path) -> int:
    model = cfg.model()
    sim_cfg = cfg.sim(default_duration=10.0)
    signals = (PressureSignal(kind="sinusoid", offset=0.8, amplitude=0.4, frequency=3.0),
               PressureSignal(kind="sinusoid", offset=0.8, amplitude=0.4, frequency=3.0,
                              phase=1.57))
    p0 = np.array([signals[0].value(0.0), signals[1].value(0.0)])
    q0 = equilibrium_bend(model.act.as_array() * p0, model.params, model.kin,
                          sim_cfg.gravity_vec())
    traj = simulate(model, OpenLoopPressure(*signals),
                    Scenario(initial=CurvatureState(q0, np.zeros(2))), sim_cfg)
    traj.to_csv(out / "trajectory.csv")
    write_line_chart(out / "response.svg", "bend response to harmonic pressure",
                     "t [s]", "q [rad]",
                     [("q1", traj.t, traj.q[:, 0]), ("q2", traj.t, traj.q[:, 1])])
    write_line_chart(out / "pressure.svg", "input pressure", "t [s]", "P [bar]",
                     [("p1", traj.t, traj.pressure[:, 0]), ("p2", traj.t, traj.pressure[:, 1])])
    print(f"final q = ({traj.q[-1, 0]:.4f}, {traj.q[-1, 1]:.4f}) rad")
    return 0


def _joint_refs(contact: bool, pid: bool):
    # the PID runs keep their own published reference pair in both regimes
    if pid:
        return (SineReference(0.8, 0.4, 3.0), SineReference(0.8, 0.4, 3.0, 1.57))
    if contact:
        return (SineReference(0.7, 0.3, 2.0), SineReference(0.7, 0.3, 2.0))
    return (SineReference(0.8, 0.4, 2.0), SineReference(0.8, 0.4, 2.0))


def _run_joint(cfg: RunConfig, out: Path, pid: bool, contact: bool) -> int:
    model = cfg.model()
    sim_cfg = cfg.sim(default_duration=10.0)
    refs = _joint_refs(contact, pid)
    if pid:
        controller = JointPIDController(cfg.pid_gains(), model.act, refs)
    else:
        scale = cfg.get("joint", "estimate_scale")
        controller = JointAdaptiveController(
            cfg.joint_gains(), model.kin, model.act, sim_cfg.gravity_vec(), refs,
            theta0=scale * model.params.theta())
    forces = ForceScenario(obstacle=cfg.obstacle()) if contact else ForceScenario()
    q0 = np.array([refs[0].value(0.0), refs[1].value(0.0)])
    qd0 = np.array([refs[0].rate(0.0), refs[1].rate(0.0)])
    traj = simulate(model, controller, Scenario(initial=CurvatureState(q0, qd0), forces=forces),
                    sim_cfg)
    traj.to_csv(out / "trajectory.csv")
    pairs = [("q1", "qd1"), ("q2", "qd2")]
    report = _write_metrics(out, "trajectory.csv", pairs, cfg.get("sim", "rmse_skip_s"))
    _tracking_plots(out, read_csv_columns(out / "trajectory.csv"), pairs, "q [rad]")
    _print_report(report)
    return 0


def _cartesian_refs(cfg: RunConfig):
    # tip reference in the finger base frame; the published trajectory is
    # measured in a camera frame with the finger base at (offset_x, offset_y)
    offset_x = cfg.get("cartesian", "base_offset_x_mm") * 1e-3
    offset_y = cfg.get("cartesian", "base_offset_y_mm") * 1e-3
    return (SineReference(0.062 - offset_x, 0.033, 1.0),
            SineReference(0.113 - offset_y, 0.0265, 1.0, 1.57))


def _run_cartesian(cfg: RunConfig, out: Path, adaptive: bool) -> int:
    model = cfg.model()
    sim_cfg = cfg.sim(default_duration=15.0)
    gains = cfg.cartesian_gains()
    refs = _cartesian_refs(cfg)
    scale = cfg.get("cartesian", "estimate_scale")
    if adaptive:
        controller = CartesianAdaptiveController(
            gains, refs, sim_cfg.gravity_vec(),
            theta_d0=scale * model.params.theta(),
            lengths0=scale * model.kin.as_array(),
            act_hat=model.act.scaled(scale))
    else:
        # pole-placement gains: the computed-torque loop shapes accelerations,
        # so its PD constants are squared-frequency / damping terms
        fgains = CartesianGains(Kp=cfg.get("cartesian", "fblin_Kp"),
                                Kv=cfg.get("cartesian", "fblin_Kv"),
                                Ld=gains.Ld, Lk=gains.Lk, alpha_s=gains.alpha_s,
                                Pf=gains.Pf)
        controller = FeedbackLinearizationController(
            fgains, refs, sim_cfg.gravity_vec(),
            params_hat=model.params.scaled(scale),
            kins_hat=model.kin.scaled(scale),
            act_hat=model.act.scaled(scale))
    forces = ForceScenario(tip_force=(cfg.get("cartesian", "force_x_n"),
                                      cfg.get("cartesian", "force_y_n")),
                           t_on=cfg.get("cartesian", "force_on_s"),
                           t_off=cfg.get("cartesian", "force_off_s"))
    target0 = np.array([refs[0].value(0.0), refs[1].value(0.0)])
    q0 = tip_inverse(target0, model.kin.as_array())
    qd0 = np.linalg.solve(jacobian(q0, model.kin.as_array()),
                          np.array([refs[0].rate(0.0), refs[1].rate(0.0)]))
    traj = simulate(model, controller, Scenario(initial=CurvatureState(q0, qd0), forces=forces),
                    sim_cfg)
    traj.to_csv(out / "trajectory.csv")
    pairs = [("tipx", "xd_x"), ("tipy", "xd_y")]
    report = _write_metrics(out, "trajectory.csv", pairs, cfg.get("sim", "rmse_skip_s"))
    _tracking_plots(out, read_csv_columns(out / "trajectory.csv"), pairs, "tip [m]")
    _print_report(report)
    return 0


def _run_grasp(cfg: RunConfig, out: Path) -> int:
    model = cfg.model()
    sim_cfg = cfg.sim(default_duration=8.0)
    layout = cfg.gripper_layout()
    grip = cfg.grip_spec()
    locked_refs = (SineReference(0.010, 0.010, 3.0), SineReference(0.081, -0.017, 3.0))
    shaped_refs = (SineReference(0.020), SineReference(0.0))
    kin_scale = cfg.get("grasp", "kin_estimate_scale")
    dyn_scale = cfg.get("grasp", "dyn_estimate_scale")
    theta_one = model.params.theta()
    controller = CoopController(
        cfg.coop_gains(), layout.fingers(), locked_refs, shaped_refs,
        sim_cfg.gravity_vec(),
        theta_Ld0=dyn_scale * np.concatenate([theta_one, theta_one]),
        theta_Ed0=dyn_scale * np.concatenate([theta_one, theta_one]),
        lengths0=kin_scale * np.concatenate([model.kin.as_array(), model.kin.as_array()]))
    result = coop_simulate(
        model, layout, grip, controller, sim_cfg,
        disturbance=(cfg.get("grasp", "disturbance_x_n"), cfg.get("grasp", "disturbance_y_n")),
        disturbance_on=cfg.get("grasp", "disturbance_on_s"))
    result.finger1.to_csv(out / "trajectory_finger1.csv")
    result.finger2.to_csv(out / "trajectory_finger2.csv")
    result.to_csv(out / "trajectory_coop.csv")
    columns = read_csv_columns(out / "trajectory_coop.csv")
    pairs = [("XL_x", "XLd_x"), ("XL_y", "XLd_y"), ("XE_x", "XEd_x"), ("XE_y", "XEd_y")]
    report = report_from_columns(columns, pairs, cfg.get("sim", "rmse_skip_s"))
    report.to_csv(out / "metrics.csv")
    write_line_chart(out / "locked.svg", "object-center tracking", "t [s]", "X_L [m]",
                     [("XL_x", columns["t"], columns["XL_x"]),
                      ("XLd_x", columns["t"], columns["XLd_x"]),
                      ("XL_y", columns["t"], columns["XL_y"]),
                      ("XLd_y", columns["t"], columns["XLd_y"])])
    write_line_chart(out / "shaped.svg", "grasp-width tracking", "t [s]", "X_E [m]",
                     [("XE_x", columns["t"], columns["XE_x"]),
                      ("XEd_x", columns["t"], columns["XEd_x"]),
                      ("XE_y", columns["t"], columns["XE_y"]),
                      ("XEd_y", columns["t"], columns["XEd_y"])])
    _print_report(report)
    return 0


SCENARIO_RUNNERS = {
    "identify": _run_identify,
    "validate-dynamics": _run_validate,
    "joint-adaptive": lambda cfg, out: _run_joint(cfg, out, pid=False, contact=False),
    "joint-pid": lambda cfg, out: _run_joint(cfg, out, pid=True, contact=False),
    "joint-adaptive-contact": lambda cfg, out: _run_joint(cfg, out, pid=False, contact=True),
    "joint-pid-contact": lambda cfg, out: _run_joint(cfg, out, pid=True, contact=True),
    "cartesian-adaptive": lambda cfg, out: _run_cartesian(cfg, out, adaptive=True),
    "cartesian-fblin": lambda cfg, out: _run_cartesian(cfg, out, adaptive=False),
    "grasp": _run_grasp,
}


def run(cfg: RunConfig, out_dir) -> int:
    """Execute one scenario; writes CSVs, metrics and SVG plots into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return SCENARIO_RUNNERS[cfg.scenario](cfg, out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="softgrip",
        description="Two-segment soft-finger simulator and gripper control scenarios.")
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", type=Path, default=None, help="INI config file")
    parser.add_argument("--out", type=Path,
                        default=os.environ.get("SOFTGRIP_OUT", "out"),
                        help="output directory (default $SOFTGRIP_OUT or ./out)")
    parser.add_argument("--seed", type=int, default=None, help="override [sim] seed")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override a config value")
    args = parser.parse_args(argv)

    try:
        text = args.config.read_text() if args.config else ""
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 3

    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"sim.seed={args.seed}")
    try:
        cfg = parse_config(text, args.scenario, tuple(overrides))
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        return run(cfg, args.out)
    except SimulationDiverged as exc:
        try:
            exc.trajectory.to_csv(Path(args.out) / "partial_trajectory.csv")
        except OSError:
            pass
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
