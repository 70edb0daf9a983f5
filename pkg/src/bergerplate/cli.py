"""Command-line entry point.

Exit codes: 0 success, 1 verification or sweep failure, 2 invalid
configuration, 3 numerical abort (partial artifacts are still written).
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import energy_audit, exponential_tail_fit, report_json, volterra_solve
from .config import ConfigError, RunConfig, build_config, load_config
from .dynamics import BergerNonlinearity, ModelParams, SimulationAborted, evolve
from .equilibria import (EquilibriumSet, distance_to_set, enumerate_berger_equilibria,
                         solve_equilibria_general)
from .persistence import save_checkpoint, trajectory_metadata, write_json, write_trajectory_csv

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3


def equilibrium_set(params: ModelParams) -> EquilibriumSet:
    if isinstance(params.nonlinearity, BergerNonlinearity) and not np.any(params.load):
        return enumerate_berger_equilibria(params)
    return solve_equilibria_general(params)


def run_simulation(cfg: RunConfig, out: Path, index: int = 0) -> dict:
    """Simulate, write trajectory.csv, metadata.json and checkpoint.npz into ``out``.

    Returns a summary dict; ``status`` is "ok" or "aborted".
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    p = cfg.params
    U0 = cfg.initial_state(index)
    status, message = "ok", ""
    try:
        rec = evolve(p, U0, cfg.horizon, cfg.dt, stride=cfg.stride,
                     meta={"seed": cfg.seed, "config": cfg.source})
    except SimulationAborted as exc:
        rec, status, message = exc.record, "aborted", str(exc)
    audit = energy_audit(p, rec)
    write_trajectory_csv(out / "trajectory.csv", rec, audit)
    eq = equilibrium_set(p)
    dists = [distance_to_set(p, U, eq) for U in rec.states]
    final_idx, final_dist = dists[-1]
    t = rec.time_array()
    fit = exponential_tail_fit(t, [d for _, d in dists], (0.5 * t[-1], t[-1])) \
        if t[-1] > 0 else None
    summary = {"status": status, "message": message, "final_time": float(t[-1]),
               "final_phi": float(rec.channel("phi")[-1]),
               "distance_to_equilibria": final_dist, "nearest_equilibrium": eq.points[final_idx]
               if eq.points else None,
               "tail_rate": (-fit.slope if fit and math.isfinite(fit.slope) else None),
               "energy_audit": audit.to_dict()}
    write_json(out / "metadata.json", trajectory_metadata(p, rec, summary=summary,
                                                          version=__version__))
    save_checkpoint(out / "checkpoint.npz", p, rec.final, seed=cfg.seed)
    return summary


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------

def point_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1)[0])


def _sweep_point(args):
    raw, source, axis, value, index, out = args
    try:
        cfg = build_config(raw, source)
        cfg = cfg.with_override(axis, value).with_override("run.seed",
                                                             point_seed(cfg.seed, index))
        summary = run_simulation(cfg, Path(out) / f"point_{index:03d}", index)
    except Exception as exc:  # noqa: BLE001 - a failed point is recorded, not fatal
        return {"index": index, "value": value, "status": f"error: {exc}"}
    return {"index": index, "value": value, **summary}


SUMMARY_COLUMNS = ("index", "value", "status", "final_phi", "distance_to_equilibria",
                   "tail_rate")


def run_sweep(cfg: RunConfig, out: Path, jobs: int = 1) -> list:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    values = cfg.sweep_values
    args = [(cfg.raw, cfg.source, cfg.sweep_axis, v, i, str(out)) for i, v in enumerate(values)]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_point, args))
    else:
        rows = [_sweep_point(a) for a in args]
    rows.sort(key=lambda r: r["index"])
    with open(out / "summary.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(SUMMARY_COLUMNS)
        for r in rows:
            wr.writerow([r.get(c, "") if not isinstance(r.get(c), float) else repr(r[c])
                         for c in SUMMARY_COLUMNS])
    return rows


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else load_config(_demo())
    if args.seed is not None:
        cfg = cfg.with_override("run.seed", args.seed)
    return cfg


def _demo():
    from .verification import demo_config_path
    return demo_config_path()


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = Path(args.out or "out")
    summary = run_simulation(cfg, out)
    print(f"final time {summary['final_time']:g}, Phi = {summary['final_phi']:.10g}")
    print(f"distance to nearest equilibrium: {summary['distance_to_equilibria']:.3e}")
    if summary["status"] != "ok":
        print(f"aborted: {summary['message']}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verification import run_suites

    cfg = _load(args)
    try:
        results = run_suites(cfg, args.suite or "all", jobs=args.jobs)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_CONFIG
    ok = all(r.passed for r in results)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        Path(args.out, "verify.json").write_text(report_json(
            {"passed": ok, "results": [{"key": r.key, "title": r.title, "passed": r.passed,
                                        "measured": r.measured} for r in results]}))
    print("ALL PASS" if ok else "SOME CRITERIA FAILED")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if cfg.sweep_values and not cfg.sweep_axis:
        raise ConfigError("sweep.axis: missing")
    rows = run_sweep(cfg, Path(args.out or "sweep"), jobs=args.jobs)
    for r in rows:
        print(f"point {r['index']}: {cfg.sweep_axis} = {r['value']:g}  {r['status']}  "
              f"distance {r.get('distance_to_equilibria', float('nan')):.3e}")
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_FAIL


def cmd_equilibria(args) -> int:
    cfg = _load(args)
    eq = equilibrium_set(cfg.params)
    gen = solve_equilibria_general(cfg.params) if eq.method_tag == "explicit" else eq
    for q, r in zip(eq.points, eq.residuals):
        print(" ".join(f"{x: .12g}" for x in q), f"  residual {r:.2e}")
    print(f"{len(eq)} equilibria ({eq.method_tag}); general solver found {len(gen)}")
    for d in gen.diagnostics:
        print(f"note: {d['kind']} at m = {d['m']:.6g} ({d['detail']})")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        eq.to_csv(Path(args.out) / "equilibria.csv")
    return EXIT_OK


def cmd_volterra(args) -> int:
    cfg = _load(args)
    p = cfg.params
    n = int(round(cfg.horizon / cfg.dt)) + 1
    F = np.ones((n, p.model.mode_count)) / p.model.power(1.5)
    res = volterra_solve(p.kernel1, p.beta, F, cfg.dt, iterations=100, model=p.model)
    print(f"q = {res.q:.6g}; iterations {res.iterations}; residual {res.residual:.3e}")
    print("ratios: " + " ".join(f"{r:.4f}" for r in res.ratios[:12]))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        Path(args.out, "volterra.json").write_text(report_json(
            {"q": res.q, "ratios": res.ratios, "increments": res.increments,
             "residual": res.residual, "iterations": res.iterations}))
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "sweep": cmd_sweep,
            "equilibria": cmd_equilibria, "volterra": cmd_volterra}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bergerplate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI run configuration (default: shipped Berger demo)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="override run.seed")
        sp.add_argument("--jobs", type=int, default=1, help="parallel workers")
        sp.add_argument("--suite", help="verify: comma-separated suites or 'all'")
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
