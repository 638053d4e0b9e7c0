"""Command-line entry point.

    synchrony [--seed N] [--out DIR] [--config FILE] [--quiet] <command> ...

Commands: simulate, sweep, verify SUITE, calibrate [SERIES], gen-network.
Every run writes ``manifest.json`` into the output directory; passing that
manifest back as ``--config`` reproduces the run's CSV outputs exactly.

Exit codes: 0 success, 2 bad configuration or input, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__, svg
from .analysis import detect_sync, run_theorem2, stage_decompose, verify_contraction, verify_lemma2, verify_theorem1
from .calibrate import (Layout, abc_fit, load_series, mcmc_summarize, simulate_counts, write_overlay_csv,
                        write_summary_json)
from .config import RunConfig, load_config, scenario_to_dict
from .errors import ConfigError, SynchronyError
from .game import GameParams
from .netgen import make_complete, make_regular_ring, write_edge_list
from .scenario import derive_seed, run_scenario
from .sweep import run_sweep, summarize

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 2, 3
SUITES = ("lemma2", "theorem1", "theorem2", "contraction")


class InputError(Exception):
    """Bad command-line input (maps to exit 2)."""


def _global_flags(p, suppress=False):
    d = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--seed", type=int, help="override the config seed", **d)
    p.add_argument("--out", help="output directory (default: out/<command>)", **d)
    p.add_argument("--config", help="YAML config or a manifest.json from an earlier run", **d)
    p.add_argument("--quiet", action="store_true", help="print nothing on success", **d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synchrony", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", help="run one scenario; trajectory CSVs and SVG plots")
    _global_flags(p, True)
    p = sub.add_parser("sweep", help="run a parameter grid from the config's sweep section")
    _global_flags(p, True)
    p.add_argument("--workers", type=int, help="worker processes (default: SYNCHRONY_THREADS or 1)")
    p = sub.add_parser("verify", help="empirical theorem checks; certificate JSONs and a summary table")
    _global_flags(p, True)
    p.add_argument("suite", help=f"one of {', '.join(SUITES)}")
    p = sub.add_parser("calibrate", help="ABC fit of monthly event counts")
    _global_flags(p, True)
    p.add_argument("series", nargs="?", help="CSV with month,count rows")
    p.add_argument("--workers", type=int, help="worker processes (default: SYNCHRONY_THREADS or 1)")
    p = sub.add_parser("gen-network", help="build the configured network; edge list and SVG")
    _global_flags(p, True)
    return parser


class Run:
    """Output directory bookkeeping and the manifest."""

    def __init__(self, command, out, quiet):
        self.command = command
        self.out = out or os.path.join("out", command)
        self.quiet = quiet
        self.outputs = []
        self.t0 = time.perf_counter()
        os.makedirs(self.out, exist_ok=True)

    def path(self, name):
        full = os.path.join(self.out, name)
        os.makedirs(os.path.dirname(full), exist_ok=True)
        self.outputs.append(name)
        return full

    def say(self, msg):
        if not self.quiet:
            print(msg)

    def finish(self, config, seed, extra=None):
        doc = {
            "subcommand": self.command,
            "config": config,
            "seed": seed,
            "version": __version__,
            "outputs": sorted(self.outputs),
            "duration_s": round(time.perf_counter() - self.t0, 3),
        }
        doc.update(extra or {})
        with open(os.path.join(self.out, "manifest.json"), "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig({})
    if cfg.manifest is not None and cfg.manifest.get("subcommand") != args.command:
        raise ConfigError(f"manifest is for '{cfg.manifest.get('subcommand')}', not '{args.command}'", None,
                          args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise InputError("--seed must be >= 0")
        cfg = cfg.with_seed(args.seed)
    return cfg


# --------------------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    cfg = _load(args)
    scenario = cfg.scenario()
    snaps = cfg.snapshots()
    run = Run("simulate", args.out, args.quiet)
    graph, traj, schedule = run_scenario(scenario)
    traj.write_csv(run.path("trajectory.csv"))
    traj.write_summary_csv(run.path("summary.csv"))
    write_edge_list(graph, run.path("network.edges"))
    schedule.to_csv(run.path("activations.csv"))
    svg.write(run.path("pro.svg"), svg.line_chart([("Pro(t)", traj.pro)], title="Share of acting agents",
                                                  xlabel="tick t", ylabel="Pro(t)", ylim=(0.0, 1.0)))
    for t in snaps:
        if t <= traj.horizon:
            svg.write(run.path(f"snapshots/t{t:04d}.svg"),
                      svg.network_snapshot(graph, traj.actions[t], title=f"t = {t}, Pro = {traj.pro[t]:.2f}"))
    doc = scenario_to_dict(scenario)
    doc["output"] = {"snapshots": list(snaps)}
    run.finish(doc, scenario.seed)
    rep = detect_sync(traj)
    cyc = stage_decompose(traj)
    run.say(f"simulated {traj.horizon} ticks on {graph.n} nodes: final Pro {traj.pro[-1]:.3f}, "
            f"action sync tick {rep.action_sync_tick}, waves {cyc.wave_count} -> {run.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    spec = cfg.sweep()
    run = Run("sweep", args.out, args.quiet)
    result = run_sweep(spec, workers=args.workers)
    result.write_csv(run.path("results.csv"))
    result.write_pro_csv(run.path("pro_series.csv"))
    for axis in spec.axis_names:
        table = summarize(result, axis)
        with open(run.path(f"summary_{axis}.csv"), "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(table[0]), lineterminator="\n")
            w.writeheader()
            for row in table:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        series = []
        for value in dict.fromkeys(r.params[axis] for r in result.rows):
            pros = [r.pro for r in result.rows if r.params[axis] == value and r.pro is not None]
            if pros:
                series.append((f"{axis}={value:g}", np.mean(pros, axis=0)))
        svg.write(run.path(f"pro_by_{axis}.svg"),
                  svg.line_chart(series, title=f"Mean Pro(t) by {axis}", xlabel="tick t", ylabel="Pro(t)",
                                 ylim=(0.0, 1.0)))
        if not args.quiet:
            print(f"{axis:>16} {'runs':>5} {'sync':>6} {'tick':>7} {'final':>7}")
            for row in table:
                print(f"{row[axis]:>16g} {row['runs']:>5} {row['sync_rate']:>6.2f} "
                      f"{row['mean_sync_tick']:>7.2f} {row['mean_final_pro']:>7.3f}")
    doc = scenario_to_dict(spec.base)
    doc["sweep"] = {"axes": {n: list(v) for n, v in spec.axes}, "replicates": spec.replicates,
                    "base_seed": spec.base_seed}
    if spec.horizon is not None:
        doc["sweep"]["horizon"] = spec.horizon
    errors = sum(r.error is not None for r in result.rows)
    run.finish(doc, spec.base.seed, {"rows": len(result.rows), "errored_rows": errors})
    run.say(f"{len(result.rows)} runs ({errors} errored) -> {run.out}")
    return EXIT_OK


def _write_certs(run, certs, sub):
    for i, c in enumerate(certs):
        with open(run.path(f"certificates/{sub}_{i:04d}.json"), "w") as fh:
            fh.write(c.to_json())
            fh.write("\n")


def _suite_lemma2(run, seed, p=0.9, draws=10):
    rng = np.random.default_rng(seed)
    certs, rows = [], []
    for n in range(4, 13):
        for k in (2, 4):
            if k >= n:
                continue
            for r in range(draws):
                c = verify_lemma2(n, k, p, rng.uniform(0.0, 1.0, n))
                certs.append(c)
                rows.append({"n": n, "k": k, "draw": r, "premise": c.premise, "conclusion": c.conclusion,
                             "bipartite": c.details["bipartite"], "settled_tick": c.details["settled_tick"]})
    return certs, rows


def _suite_theorem1(run, seed, draws=3):
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.1, 1.0, 10)
    certs, rows = [], []
    premise_true = 0
    for n in range(5, 10):
        for k in range(n // 2 + 1, n):
            if k % 2:
                continue
            for a in grid:
                for b in grid:
                    for x in grid:
                        for y in grid:
                            if abs(x - y) < 1e-9:
                                continue
                            c = verify_theorem1(n, k, GameParams(float(a), float(b), float(x), float(y)),
                                                rng.uniform(0, 0.5, n), seed=seed)
                            if c.premise:
                                premise_true += 1
                                certs.append(c)
                                rows.append({"n": n, "k": k, "alpha": a, "beta": b, "x": x, "y": y,
                                             "premise": True, "conclusion": c.conclusion})
    rows.append({"n": "", "k": "", "alpha": "", "beta": "", "x": "", "y": "", "premise": f"{premise_true} true",
                 "conclusion": ""})
    return certs, rows


def _suite_theorem2(run, seed, seeds=10, periods=(6, 8, 16)):
    certs, rows = [], []
    for period in periods:
        for s in range(seeds):
            c = run_theorem2(period, derive_seed(seed, period, s))
            certs.append(c)
            cyc = c.details["per_cycle_full"]
            rows.append({"period": period, "replicate": s, "conclusion": c.conclusion,
                         "peak_mean_peak_pro": c.details["peak"]["mean_peak_pro"],
                         "trough_mean_peak_pro": c.details["trough"]["mean_peak_pro"],
                         "cycles_full": sum(cyc), "cycles": len(cyc)})
    return certs, rows


def _suite_contraction(run, seed, draws=10):
    rng = np.random.default_rng(seed)
    graphs = [make_complete(n) for n in range(2, 9)]
    graphs += [make_regular_ring(n, k) for n in range(3, 13) for k in range(2, n, 2)]
    certs, rows = [], []
    for g in graphs:
        for r in range(draws):
            T0 = [Fraction(int(v), 1000) for v in rng.integers(0, 1001, g.n)]
            c = verify_contraction(g, T0)
            certs.append(c)
            rows.append({"graph": g.kind, "n": g.n, "k": int(g.degrees[0]), "draw": r, "premise": c.premise,
                         "conclusion": c.conclusion,
                         "worst_ratio": c.details.get("worst_ratio", "")})
    return certs, rows


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        raise InputError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    cfg = _load(args)
    seed = cfg.seed
    run = Run("verify", args.out, args.quiet)
    suite = {"lemma2": _suite_lemma2, "theorem1": _suite_theorem1, "theorem2": _suite_theorem2,
             "contraction": _suite_contraction}[args.suite]
    certs, rows = suite(run, seed)
    _write_certs(run, certs, args.suite)
    with open(run.path("summary.csv"), "w", newline="") as fh:
        fields = list(rows[0]) if rows else ["premise", "conclusion"]
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    held = sum(c.premise for c in certs)
    bad = sum(c.violated for c in certs)
    run.finish({"seed": seed}, seed, {"suite": args.suite, "certificates": len(certs), "premise_true": held,
                                      "violations": bad})
    run.say(f"{args.suite}: {len(certs)} certificates, {held} with premise true, {bad} violations -> {run.out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _load(args)
    series_path = args.series
    if series_path is None and cfg.manifest is not None:
        series_path = cfg.manifest.get("series")
    if series_path is None:
        raise InputError("calibrate needs a series CSV")
    if not os.path.exists(series_path):
        raise InputError(f"series file not found: {series_path}")
    observed = load_series(series_path)
    observed.validate()
    calib = cfg.calibration()
    sc = cfg.scenario()
    graph = sc.network.build(derive_seed(sc.seed, 0))
    horizon = len(observed) * calib.month_len
    schedule = sc.activation.build(graph.n, horizon, sc.driver, derive_seed(sc.seed, 2))
    layout = Layout(graph, sc.driver, schedule, sc.active_fraction, sc.threshold_init,
                    sc.initial_actors if isinstance(sc.initial_actors, int) else len(sc.initial_actors))
    run = Run("calibrate", args.out, args.quiet)
    result = abc_fit(observed, calib, layout, workers=args.workers)
    mcmc = mcmc_summarize(result.kde, calib)
    result.write_accepted_csv(run.path("accepted.csv"))
    sim = simulate_counts(result.means, calib, layout, len(observed))
    write_overlay_csv(run.path("overlay.csv"), observed, sim)
    svg.write(run.path("overlay.svg"), svg.overlay_chart(observed.months, observed.counts, sim))
    write_summary_json(run.path("posterior.json"), result, mcmc)
    doc = scenario_to_dict(sc)
    doc["calibration"] = calib.to_dict()
    run.finish(doc, sc.seed, {"series": os.path.abspath(series_path)})
    if not args.quiet:
        for name, v in result.point_estimate().items():
            print(f"{name:>6} {v:.3f}")
    run.say(f"{int(result.accepted.sum())} of {len(result.thetas)} draws accepted -> {run.out}")
    return EXIT_OK


def cmd_gen_network(args) -> int:
    cfg = _load(args)
    sc = cfg.scenario()
    run = Run("gen-network", args.out, args.quiet)
    graph = sc.network.build(derive_seed(sc.seed, 0))
    write_edge_list(graph, run.path("network.edges"))
    svg.write(run.path("network.svg"), svg.network_snapshot(graph, np.zeros(graph.n), title=graph.kind))
    run.finish(scenario_to_dict(sc), sc.seed, {"edges": graph.n_edges, "mean_degree": graph.mean_degree(),
                                               "connected": graph.connected})
    run.say(f"{graph.n} nodes, {graph.n_edges} edges, mean degree {graph.mean_degree():.2f} -> {run.out}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "verify": cmd_verify, "calibrate": cmd_calibrate,
            "gen-network": cmd_gen_network}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    for name in ("seed", "out", "config"):
        if not hasattr(args, name):
            setattr(args, name, None)
    if not hasattr(args, "workers"):
        args.workers = None
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SynchronyError as exc:
        code = EXIT_INPUT if isinstance(exc, ValueError) else EXIT_RUNTIME
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
