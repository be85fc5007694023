"""Command line front end for the cruise-control benchmark.

Subcommands:
    run                  closed-loop run for one controller variant
    compare              the four controller variants on the same scenario
    gamma-table          estimation error bound gamma(T) across cadences
    verify-certificates  worst-case CLF/CBF grid check over a region
    sweep-T              short closed-loop runs across sampling periods

Every command writes CSV artifacts into --out; --plot adds SVG figures.
The exit code is 0 iff nothing aborted and every enabled check passed;
otherwise failure.json in --out carries a machine-readable report.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from .acc import build_acc_setup, verification_region, verification_theta
from .bounds import gamma_table
from .certificates import verify_robust_certificates
from .config import RunConfig, parse_config
from .controllers import Variant
from .errors import (AdmissibleSetExit, ConfigurationError,
                     ContractViolationError, QpInfeasibleError)
from .simulator import check_trace_invariants, run_simulation
from .svgplot import Band, Panel, Series, render_panels, write_svg

SUMMARY_COLUMNS = ("variant", "min_h", "max_tracking_err",
                   "integrated_tracking_err", "cbf_active_fraction",
                   "max_est_err_t_ge_T", "gamma_T", "n_infeasible")
SWEEP_COLUMNS = ("T_s", "gamma", "max_est_err_t_ge_T", "min_h",
                 "n_infeasible", "ok")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())


def _write_summaries(path: Path, summaries) -> None:
    rows = [[s[k] for k in SUMMARY_COLUMNS] for s in summaries]
    _write_csv(path, SUMMARY_COLUMNS, rows)


def _build_setup(cfg: RunConfig, variant: Variant, *, T=None, t_end=None):
    params = cfg.params if T is None else dataclasses.replace(cfg.params, T=T)
    b = cfg.bounds
    return build_acc_setup(
        variant, params, cfg.scenario,
        t_end=cfg.sim.t_end if t_end is None else t_end,
        substeps=cfg.sim.substeps, seed=cfg.sim.seed, assertions_on=False,
        infeasibility=cfg.infeasibility, grid_density=b.grid_density,
        calibrated=b.calibrated, theta=b.theta, phi=b.phi, eta=b.eta)


def _run_setup(setup, check: bool):
    """One closed loop. Returns (trace or None, failure dicts).

    Invariant checks run here rather than inside the simulator so the
    trace gets written even when a check fails.
    """
    failures = []
    variant = setup.controller.variant.value
    try:
        trace = run_simulation(setup.model, setup.clf, setup.cbf, setup.bounds,
                               setup.controller, setup.sim, setup.x0)
    except AdmissibleSetExit as exc:
        trace = exc.trace
        failures.append({"kind": "admissible-set-exit", "variant": variant,
                         "t": float(exc.t), "detail": str(exc)})
    except QpInfeasibleError as exc:
        failures.append({"kind": "qp-infeasible", "variant": variant,
                         "t": None if exc.t is None else float(exc.t),
                         "detail": str(exc)})
        return None, failures
    if check and trace is not None:
        for msg in check_trace_invariants(trace, setup.model, setup.clf,
                                          setup.cbf, setup.bounds,
                                          setup.controller.variant):
            failures.append({"kind": "invariant", "variant": variant,
                             "detail": msg})
    return trace, failures


def _print_summary(s) -> None:
    print(f"  {s['variant']:<18} min_h={s['min_h']:+.4f}"
          f"  int_V={s['integrated_tracking_err']:.1f}"
          f"  cbf_active={s['cbf_active_fraction']:.3f}"
          f"  est_err={s['max_est_err_t_ge_T']:.4g}/{s['gamma_T']:.4g}"
          f"  infeasible={s['n_infeasible']}")


# ---------------------------------------------------------------- figures

def _speed_input_panels(trace, setup):
    t = trace.t
    top = Panel(
        series=[Series(t, trace.x[:, 0], "lead", color="#7f7f7f", dash="6 3"),
                Series(t, trace.x[:, 1], "follower", color="#1f77b4")],
        ylabel="speed [m/s]", hlines=(setup.params.v_d,))
    bot = Panel(
        series=[Series(t, trace.u[:, 0], "u", color="#d62728")],
        ylabel="wheel force [N]",
        hlines=(setup.params.u_max, -setup.params.u_max))
    return [top, bot]


def _plot_run(out: Path, trace, setup) -> None:
    name = trace.variant
    write_svg(out / "fig_speed_input.svg",
              render_panels(_speed_input_panels(trace, setup),
                            title=f"speeds and input ({name})"))
    barrier = Panel(series=[Series(trace.t, trace.h, "h", color="#2ca02c")],
                    ylabel="h [m]", hlines=(0.0,))
    write_svg(out / "fig_barrier.svg",
              render_panels([barrier], title=f"barrier value ({name})"))
    g = trace.gamma_T
    unc = Panel(
        series=[Series(trace.t, trace.d_true[:, 1], "true", color="#1f77b4"),
                Series(trace.t, trace.d_hat[:, 1], "estimate",
                       color="#d62728", dash="5 3")],
        bands=[Band(trace.t, trace.d_hat[:, 1] - g, trace.d_hat[:, 1] + g,
                    color="#d62728", label="estimate +/- gamma(T)")],
        ylabel="d_2 [m/s^2]")
    write_svg(out / "fig_uncertainty.svg",
              render_panels([unc], title=f"matched uncertainty ({name})"))


def _plot_compare(out: Path, traces, setup) -> None:
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e")
    speed = Panel(ylabel="v_follow [m/s]", hlines=(setup.params.v_d,))
    barrier = Panel(ylabel="h [m]", hlines=(0.0,))
    for trace, color in zip(traces, colors):
        speed.series.append(Series(trace.t, trace.x[:, 1], trace.variant,
                                   color=color))
        barrier.series.append(Series(trace.t, trace.h, trace.variant,
                                     color=color))
    if traces:
        speed.series.append(Series(traces[0].t, traces[0].x[:, 0], "lead",
                                   color="#7f7f7f", dash="6 3"))
    write_svg(out / "fig_speed_compare.svg",
              render_panels([speed], title="follower speed by variant"))
    write_svg(out / "fig_barrier_compare.svg",
              render_panels([barrier], title="barrier value by variant"))


def _plot_sweep(out: Path, rows) -> None:
    done = [r for r in rows if math.isfinite(r[2])]
    if not done:
        return
    lx = np.log10([r[0] for r in done])
    panel = Panel(
        series=[Series(lx, np.log10([r[1] for r in done]), "gamma(T)",
                       color="#1f77b4"),
                Series(lx, np.log10([max(r[2], 1e-300) for r in done]),
                       "max est err (t >= T)", color="#d62728")],
        ylabel="log10 value")
    write_svg(out / "fig_gamma_sweep.svg",
              render_panels([panel], xlabel="log10 T [s]",
                            title="estimation error vs bound"))


# --------------------------------------------------------------- commands

def _cmd_run(cfg: RunConfig, args, out: Path):
    setup = _build_setup(cfg, cfg.variant)
    print(f"run: variant={cfg.variant.value} t_end={cfg.sim.t_end:g} "
          f"T={cfg.params.T:g} T_qp={cfg.params.T_qp:g} "
          f"gamma(T)={setup.bounds.gamma_T:.6g}")
    trace, failures = _run_setup(setup, args.assertions)
    if trace is not None:
        trace.write_csv(out / f"trace_{trace.variant}.csv")
        _write_summaries(out / "summary.csv", [trace.summary()])
        _print_summary(trace.summary())
        if args.plot:
            _plot_run(out, trace, setup)
    return failures


def _cmd_compare(cfg: RunConfig, args, out: Path):
    failures, traces, summaries = [], [], []
    for variant in Variant:
        setup = _build_setup(cfg, variant)
        trace, fails = _run_setup(setup, args.assertions)
        failures.extend(fails)
        if trace is None:
            continue
        trace.write_csv(out / f"trace_{trace.variant}.csv")
        traces.append(trace)
        summaries.append(trace.summary())
        _print_summary(summaries[-1])
    if summaries:
        _write_summaries(out / "summary.csv", summaries)
    if args.plot and traces:
        _plot_compare(out, traces, _build_setup(cfg, cfg.variant))
    return failures


def _cmd_gamma_table(cfg: RunConfig, args, out: Path):
    setup = _build_setup(cfg, cfg.variant)
    rows = gamma_table(setup.bounds, cfg.sweep_T)
    _write_csv(out / "gamma_table.csv", ("T_s", "gamma"), rows)
    print(f"theta={setup.bounds.theta:.6g} eta={setup.bounds.eta:.6g} "
          f"a={setup.bounds.a:g}")
    for T, g in rows:
        print(f"  T={T:<8g} gamma={g:.6g}")
    if args.plot:
        _plot_sweep(out, [(T, g, math.nan, 0, 0, True) for T, g in rows])
    return []


def _cmd_verify_certificates(cfg: RunConfig, args, out: Path):
    setup = _build_setup(cfg, cfg.variant)
    theta = verification_theta(cfg.params)
    region = verification_region(cfg.params)
    report = verify_robust_certificates(setup.clf, setup.cbf, setup.model,
                                        theta, region=region)
    report.write_csv(out / "certificates_report.csv")
    print(f"verify-certificates: theta={theta:.6g} "
          f"points={report.points.shape[0]}")
    print(f"  clf: ok={report.clf_ok} worst_margin={report.clf_worst_margin:.6g}")
    print(f"  cbf: ok={report.cbf_ok} worst_margin={report.cbf_worst_margin:.6g}")
    failures = []
    if not report.clf_ok:
        failures.append({"kind": "certificate", "which": "clf",
                         "worst_margin": float(report.clf_worst_margin),
                         "witness": [float(v) for v in report.clf_witness]})
    if not report.cbf_ok:
        failures.append({"kind": "certificate", "which": "cbf",
                         "worst_margin": float(report.cbf_worst_margin),
                         "witness": [float(v) for v in report.cbf_witness]})
    return failures


def _cmd_sweep_T(cfg: RunConfig, args, out: Path):
    failures, rows = [], []
    print(f"sweep-T: variant={cfg.variant.value} t_end={cfg.sweep_t_end:g}")
    for T in cfg.sweep_T:
        setup = _build_setup(cfg, cfg.variant, T=T, t_end=cfg.sweep_t_end)
        trace, fails = _run_setup(setup, args.assertions)
        failures.extend(fails)
        gamma = setup.bounds.gamma_T
        if trace is None:
            rows.append((T, gamma, math.nan, math.nan, 0, False))
            continue
        s = trace.summary()
        err = s["max_est_err_t_ge_T"]
        ok = err <= gamma * (1.0 + 1e-9)
        rows.append((T, gamma, err, s["min_h"], s["n_infeasible"], ok))
        print(f"  T={T:<8g} gamma={gamma:<12.6g} max_est_err={err:<12.6g} "
              f"{'ok' if ok else 'VIOLATED'}")
        if not ok:
            failures.append({"kind": "estimation-bound", "T": float(T),
                             "gamma": float(gamma), "max_est_err": float(err)})
    _write_csv(out / "sweep_summary.csv", SWEEP_COLUMNS, rows)
    if args.plot:
        _plot_sweep(out, rows)
    return failures


_COMMANDS = {
    "run": _cmd_run,
    "compare": _cmd_compare,
    "gamma-table": _cmd_gamma_table,
    "verify-certificates": _cmd_verify_certificates,
    "sweep-T": _cmd_sweep_T,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="arcbf",
        description="Adaptive robust CLF-CBF cruise-control benchmark.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="INI configuration file (defaults used if omitted)")
    common.add_argument("--out", metavar="DIR", default="arcbf-out",
                        help="output directory (default: %(default)s)")
    common.add_argument("--plot", action="store_true",
                        help="also write SVG figures")
    common.add_argument("--assert", dest="assertions", action="store_true",
                        help="run post-hoc trace invariant checks")
    common.add_argument("--seed", type=int, metavar="N",
                        help="override the configured RNG seed")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("run", parents=[common],
                   help="closed-loop run for one controller variant")
    sub.add_parser("compare", parents=[common],
                   help="run all four controller variants")
    sub.add_parser("gamma-table", parents=[common],
                   help="estimation bound gamma(T) across sampling periods")
    sub.add_parser("verify-certificates", parents=[common],
                   help="grid-check the worst-case CLF/CBF conditions")
    sub.add_parser("sweep-T", parents=[common],
                   help="short runs across sampling periods, checking the bound")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg = dataclasses.replace(
                cfg, sim=dataclasses.replace(cfg.sim, seed=args.seed))
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        failures = _COMMANDS[args.command](cfg, args, out)
    except (ConfigurationError, ContractViolationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if failures:
        report = {"command": args.command, "failures": failures}
        (out / "failure.json").write_text(json.dumps(report, indent=2) + "\n")
        print(f"FAILED: {len(failures)} problem(s); see {out / 'failure.json'}",
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
