"""Command-line entry points: ``run``, ``decay``, ``verify`` and ``check``."""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import replace

from . import diagnostics as dg
from . import verify as vf
from .constitutive import Params
from .config import OUTPUT_DIR_ENV, ConfigError, RunConfig, load_config
from .grid import Grid
from .initial import random_perturbation
from .runner import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, decay, simulate
from .snapshot import SnapshotError, snapshot_read
from .stepper import StepperConfig


def _load(path) -> RunConfig:
    try:
        return load_config(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def cmd_run(args) -> int:
    cfg = _load(args.config)
    result = simulate(cfg, args.output)
    if result.status != EXIT_OK:
        print(f"run failed: {result.error}", file=sys.stderr)
        return result.status
    last = result.rows[-1]
    print(f"wrote {len(result.rows)} rows to {os.path.join(result.output_dir, 'series.csv')}")
    print(f"t={last['t']:.6g} e_total={last['e_total']:.6e} div_max={last['div_max']:.3e} "
          f"phi=[{last['phi_min']:.6f}, {last['phi_max']:.6f}]")
    return EXIT_OK


def cmd_decay(args) -> int:
    cfg = _load(args.config)
    result, fit = decay(cfg, args.output, args.skip)
    if result.status != EXIT_OK:
        print(f"run failed: {result.error}", file=sys.stderr)
        return result.status
    ratio = result.rows[-1]["global_e0"] / result.rows[0]["global_e0"]
    print(f"c = {fit.rate:.6g}")
    print(f"r2 = {fit.r_squared:.6f}")
    print(f"global_e0(t_end) / global_e0(0) = {ratio:.6g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    params = Params()
    cfg = StepperConfig()
    ok = True
    out_dir = args.output
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)

    if args.quick:
        reports = [(vf.spatial_study(params, cfg, (16, 32, 64)), "spatial"),
                   (vf.temporal_study(params, cfg, dt=0.02), "temporal")]
    else:
        reports = [(vf.spatial_study(params, cfg), "spatial"), (vf.temporal_study(params, cfg), "temporal")]
    for report, kind in reports:
        if kind == "spatial":
            orders, target = [report.spatial_order_phi], 2.0
        else:
            orders, target = [report.temporal_order_u, report.temporal_order_phi], 1.0
        passed = all(abs(o - target) <= 0.3 for o in orders)
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {report.case} {kind} order: "
              f"{', '.join(f'{o:.3f}' for o in orders)} (target {target} +- 0.3)")
        if out_dir:
            with open(os.path.join(out_dir, f"{report.case}_orders.csv"), "w", encoding="ascii") as fh:
                fh.write(report.to_csv())

    tight = replace(cfg, poisson_tol=1e-12)
    grid = Grid(32, 32) if args.quick else Grid(64, 64)
    for branch in ("plus", "minus"):
        p = replace(params, branch=branch)
        state = random_perturbation(grid, p.sign, 0.3, 1e-2, seed=1)
        worst = vf.perturbation_equivalence(state, tight, p, n_steps=10)
        passed = worst <= 1e-10
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} equivalence {branch}: relative discrepancy {worst:.3e} over 10 steps")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_check(args) -> int:
    try:
        state = snapshot_read(args.snapshot)
    except (OSError, SnapshotError) as exc:
        print(f"cannot read snapshot: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    params = _load(args.config).params() if args.config else RunConfig().params()
    rep = dg.energy_report(state, params)
    for name, value in vars(rep).items():
        if isinstance(value, float) and math.isnan(value):
            continue
        print(f"{name} = {value:.10g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acns", description="Two-phase Allen-Cahn-Navier-Stokes simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a configuration, writing series.csv and snapshots")
    p.add_argument("config")
    p.add_argument("-o", "--output", help=f"output directory (overrides config and ${OUTPUT_DIR_ENV})")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("decay", help="run and fit exponential decay of global_e0")
    p.add_argument("config")
    p.add_argument("-o", "--output")
    p.add_argument("--skip", type=float, default=0.1, help="fraction of the run excluded from the fit")
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("verify", help="manufactured-solution orders and shifted-formulation equivalence")
    p.add_argument("-o", "--output", help="directory for the order reports (CSV)")
    p.add_argument("--quick", action="store_true", help="coarser grids for a fast smoke check")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("check", help="monitors and energy report of a snapshot")
    p.add_argument("snapshot")
    p.add_argument("-c", "--config", help="configuration supplying the physical parameters")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
