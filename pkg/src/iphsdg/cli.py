"""Command-line front end.

    iphsdg run --config CFG [--method KIND] [--h H] [--steps N] [--out DIR]
    iphsdg validate --config CFG
    iphsdg sweep --config CFG --param section.key --values v1,v2,...

Exit codes: 0 ok, 1 configuration error, 2 solver failure, 3 balance or
structure violation.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace

import numpy as np

from .config import ConfigError, SimConfig, load_config, to_document, with_cli_overrides
from .core import validate_structure
from .integrator import Trajectory, balance_diagnostics, integrate_trajectory
from .output import emit_csv, emit_svg_plots

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_BALANCE = 0, 1, 2, 3


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


def run_scenario(cfg: SimConfig) -> tuple:
    """Integrate the configured scenario and write the requested artifacts.

    Returns ``(trajectory, report, exit_code)``. Artifacts are written even
    when the solver fails part-way; the report flags the failure.
    """
    system = cfg.build_system()
    traj = integrate_trajectory(system, cfg.method, cfg.x0, cfg.controls, cfg.h, cfg.steps, cfg.solver)
    balance = balance_diagnostics(traj)
    if not traj.completed:
        code = EXIT_SOLVER
    elif not balance.passed:
        code = EXIT_BALANCE
    else:
        code = EXIT_OK
    report = {
        "model": cfg.model,
        "method": cfg.method.kind,
        "h": cfg.h,
        "steps_requested": cfg.steps,
        "steps_completed": traj.steps,
        "failure": traj.failure,
        "balance": balance.as_dict(),
        "max_newton_iterations": float(np.nanmax(traj.iterations)) if traj.steps else None,
        "final_state": dict(zip(traj.state_names, traj.states[-1].tolist())),
        "final_observables": {k: v[-1] for k, v in traj.observables.items()},
        "exit_code": code,
    }
    _write_artifacts(cfg, traj, report)
    return traj, report, code


def _write_artifacts(cfg: SimConfig, traj: Trajectory, report: dict) -> None:
    out = cfg.output
    out.dir.mkdir(parents=True, exist_ok=True)
    if out.csv_path is not None:
        emit_csv(traj, out.csv_path)
    if out.svg_paths and traj.steps >= 1:
        emit_svg_plots(traj, out.svg_paths)
    if out.report_path is not None:
        out.report_path.write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    (out.dir / "config.ini").write_text(to_document(cfg))


def _validate(cfg: SimConfig) -> int:
    system = cfg.build_system()
    rng = np.random.default_rng(0)
    x0 = np.asarray(cfg.x0, dtype=float)
    samples = [x0]
    while len(samples) < 20:
        cand = x0 * (1.0 + 0.5 * rng.uniform(-1, 1, size=len(x0))) + rng.normal(size=len(x0))
        if system.domain_guard(cand):
            samples.append(cand)
    report = validate_structure(system, samples, inputs=list(cfg.controls.values))
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_BALANCE


def _cmd_run(args) -> int:
    cfg = with_cli_overrides(load_config(args.config), args.method, args.h, args.steps, args.out)
    traj, report, code = run_scenario(cfg)
    b = report["balance"]
    print(f"{cfg.model}: {traj.steps}/{cfg.steps} steps, h={cfg.h}, method={cfg.method.kind}")
    print(f"  max relative energy residual  {b['max_rel_energy_residual']:.3e} (threshold {b['energy_threshold']:.1e})")
    print(f"  min relative entropy production {b['min_rel_entropy_production']:.3e}")
    print(f"  artifacts in {cfg.output.dir}")
    if traj.failure:
        print(f"  solver failure: {traj.failure}", file=sys.stderr)
    return code


def _cmd_validate(args) -> int:
    return _validate(load_config(args.config))


def _cmd_sweep(args) -> int:
    base = with_cli_overrides(load_config(args.config), out=args.out)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values: empty list")
    worst = EXIT_OK
    rows = []
    for value in values:
        cfg = base.with_override(args.param, value)
        sub = base.output.dir / f"{args.param}={value}"
        cfg = replace(cfg, output=replace(cfg.output, dir=sub))
        traj, report, code = run_scenario(cfg)
        worst = max(worst, code)
        b = report["balance"]
        rows.append((value, traj.steps, b["max_rel_energy_residual"], b["min_rel_entropy_production"], code))
    print(f"{args.param:>16} {'steps':>7} {'max rel dE':>12} {'min rel dS':>12} exit")
    for value, steps, de, ds, code in rows:
        print(f"{value:>16} {steps:>7} {de:>12.3e} {ds:>12.3e} {code:>4}")
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iphsdg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate a scenario and write CSV/SVG/report")
    run.add_argument("--config", required=True)
    run.add_argument("--method", help="midpoint_gonzalez, mean_value or coordinate_increment")
    run.add_argument("--h", type=float)
    run.add_argument("--steps", type=int)
    run.add_argument("--out")
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="structural checks only")
    val.add_argument("--config", required=True)
    val.set_defaults(func=_cmd_validate)

    sweep = sub.add_parser("sweep", help="run the scenario for several values of one key")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--param", required=True, help="section.key, e.g. model.mu")
    sweep.add_argument("--values", required=True, help="comma-separated values")
    sweep.add_argument("--out")
    sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
