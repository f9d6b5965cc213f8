"""Command-line front end.

Four subcommands share one config file format:

  evolve    time-step a scenario, write conserved/state/euler tables
  singular  locate and classify angle-level events along a run
  metric    distance-ratio experiment between a datum and a perturbation
  validate  run the built-in property suite, one PASS/FAIL line each

Exit codes: 0 success, 2 config or contract violation, 3 numerical
abort (partial artifacts are still written), 4 analysis failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import cliio
from .breaking import (classify, export_points_jsonl, find_crossings,
                       fit_exponent, verify_cancellations)
from .config import ScenarioConfig, load_config, quick_override
from .errors import (AnalysisError, ConfigError, ContractError, EvolveAbort,
                     NumericalAbort)
from .evolution import OmegaBounds, evolve
from .grid import make_grid
from .initial import transform_with_map
from .metric import lipschitz_experiment
from .reconstruct import euler_fields
from .validation import run_suite

__all__ = ["main"]


def _bounds(cfg: ScenarioConfig) -> OmegaBounds:
    return OmegaBounds(q_lo=cfg.q_lo, q_hi=cfg.q_hi, slack=cfg.slack)


def _prepare(args) -> tuple[ScenarioConfig, Path]:
    cfg = load_config(args.config)
    if args.quick:
        cfg = quick_override(cfg)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, out_dir=args.out)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def _write_trajectory(traj, out: Path) -> list[str]:
    written = []
    path = out / "conserved.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        cliio.write_conserved_csv(fh, traj)
    written.append(str(path))
    for i, state in enumerate(traj.states):
        spath = out / f"state_{i:04d}.csv"
        with open(spath, "w", encoding="utf-8", newline="") as fh:
            cliio.write_state_csv(fh, state, traj.ys[i])
        written.append(str(spath))
        epath = out / f"euler_{i:04d}.csv"
        try:
            field = euler_fields(state, traj.ys[i])
        except ContractError:
            continue
        with open(epath, "w", encoding="utf-8", newline="") as fh:
            cliio.write_euler_csv(fh, field)
        written.append(str(epath))
    return written


def _run_trajectory(cfg: ScenarioConfig, out: Path):
    grid = make_grid(cfg.xi_min, cfg.xi_max, cfg.n)
    datum = cliio.datum_from_config(cfg)
    state, y0 = transform_with_map(datum, grid)
    try:
        return evolve(state, y0, cfg.t_final, cfg.dt,
                      record_every=cfg.record_every, bounds=_bounds(cfg))
    except EvolveAbort as err:
        files = _write_trajectory(err.partial, out)
        print(f"numerical abort: {err}", file=sys.stderr)
        print(f"partial artifacts: {len(files)} files in {out}", file=sys.stderr)
        raise


def cmd_evolve(args) -> int:
    cfg, out = _prepare(args)
    traj = _run_trajectory(cfg, out)
    files = _write_trajectory(traj, out)
    print(f"evolved to t={traj.times[-1]!r} in {len(traj.times)} records")
    print(f"wrote {len(files)} files in {out}")
    return 0


def cmd_singular(args) -> int:
    cfg, out = _prepare(args)
    traj = _run_trajectory(cfg, out)
    points = []
    reports = []
    for i, state in enumerate(traj.states):
        y = traj.ys[i]
        try:
            field = euler_fields(state, y)
        except ContractError:
            field = None
        for point in find_crossings(state, y, tol_pi=cfg.tol_pi):
            try:
                point = classify(point, state, tol_pi=cfg.tol_pi,
                                 tol_zero_rel=cfg.tol_zero_rel)
            except AnalysisError:
                pass
            if cfg.fit_exponents and field is not None:
                fits = {}
                for comp in ("u", "v"):
                    try:
                        slope, _ = fit_exponent(field, point.x_star,
                                                cfg.side_window, cfg.min_gap,
                                                component=comp)
                        fits[f"fitted_exponent_{comp}"] = slope
                    except AnalysisError:
                        pass
                if fits:
                    point = dataclasses.replace(point, **fits)
            points.append(point)
            if cfg.run_cancellations and point.case_label is not None:
                try:
                    reports.append(verify_cancellations(point, state))
                except AnalysisError:
                    pass
    export_points_jsonl(points, out / "points.jsonl")
    cliio.write_cancellations_jsonl(reports, out / "cancellations.jsonl")
    print(f"found {len(points)} level events over {len(traj.times)} records")
    print(f"wrote {out / 'points.jsonl'} and {out / 'cancellations.jsonl'}")
    return 0


def cmd_metric(args) -> int:
    cfg, out = _prepare(args)
    grid = make_grid(cfg.xi_min, cfg.xi_max, cfg.n)
    datum0 = cliio.datum_from_config(cfg)
    datum1 = cliio.perturbed_datum(datum0, cfg)
    rows = lipschitz_experiment(
        datum0, datum1, grid, cfg.t_final, cfg.dt, alpha=cfg.alpha,
        m_theta=cfg.m_theta, search=cfg.search,
        record_every=cfg.record_every, bounds=_bounds(cfg),
        eta_nodes=cfg.eta_nodes, iters=cfg.descent_iters)
    path = out / "ratios.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        cliio.write_ratios_csv(fh, rows)
    worst = max(r.ratio for r in rows)
    print(f"wrote {path} ({len(rows)} rows), max ratio {worst!r}")
    return 0


def cmd_validate(args) -> int:
    cfg, _ = _prepare(args)
    results = run_suite(cfg, quick=args.quick)
    failed = [r for r in results if not r.passed]
    for r in results:
        tag = "PASS" if r.passed else "FAIL"
        print(f"[{tag}] {r.name}: {r.detail}")
    if failed:
        print(f"{len(failed)} of {len(results)} checks failed: "
              + ", ".join(r.name for r in failed), file=sys.stderr)
        return 4
    print(f"all {len(results)} checks passed")
    return 0


_COMMANDS = {
    "evolve": cmd_evolve,
    "singular": cmd_singular,
    "metric": cmd_metric,
    "validate": cmd_validate,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="novlab",
        description="Characteristic-coordinate laboratory for a coupled "
                    "peakon-bearing wave system.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario config file")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--quick", action="store_true",
                       help="shrink the run for smoke testing")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except ContractError as err:
        print(f"contract violation: {err}", file=sys.stderr)
        return 2
    except EvolveAbort:
        return 3
    except NumericalAbort as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        return 3
    except AnalysisError as err:
        print(f"analysis failure: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
