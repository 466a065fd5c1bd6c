"""Command-line front end.

    ecnstar simulate SCENARIO OUT [--seed N]
    ecnstar estimate HISTOGRAM [--epsilon-limit E] [--format text|csv]
    ecnstar converge INPUT [--stride S] [--out TRACE] [--seed N] [--flow NAME] [--depth N]

Exit status: 0 ok, 2 bad input, 3 I/O failure, 4 estimation failed.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import csvio, report
from .convergence import DEFAULT_STRIDE, detect_thresholds, stream_estimate
from .model import NoCongestionObserved
from .scenario import ScenarioError, load_scenario
from .sim import SimulationError, export_distribution, simulate_red_path
from .solver import DEFAULT_EPSILON, NoFullSolutionBand, estimate_rates

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IO = 3
EXIT_ESTIMATION = 4


def _err(msg: str) -> None:
    print(f"ecnstar: {msg}", file=sys.stderr)


def cmd_simulate(scenario_path, out_dir, seed=None, epsilon_limit=DEFAULT_EPSILON) -> int:
    try:
        scenario = load_scenario(scenario_path)
    except ScenarioError as exc:
        _err(str(exc))
        return EXIT_INPUT
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO
    seed = scenario.seed if seed is None else seed
    try:
        output = simulate_red_path(scenario, seed=seed)
    except SimulationError as exc:
        _err(str(exc))
        return EXIT_INPUT
    text = report.render_report(report.build_report(output, seed, epsilon_limit))
    try:
        export_distribution(output, out_dir)
        (Path(out_dir) / "report.txt").write_text(text)
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO
    sys.stdout.write(text)
    return EXIT_OK


def cmd_estimate(histogram_path, epsilon_limit=DEFAULT_EPSILON, fmt="text") -> int:
    try:
        dist = csvio.read_histogram(histogram_path)
    except csvio.HistogramFormatError as exc:
        _err(str(exc))
        return EXIT_INPUT
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO
    try:
        est = estimate_rates(dist, epsilon_limit)
    except NoCongestionObserved:
        print(f"no congestion: none of the {dist.total} packets carries a mark")
        return EXIT_OK
    except ValueError as exc:
        _err(f"{histogram_path}: {exc}")
        return EXIT_INPUT
    except NoFullSolutionBand as exc:
        _err(f"{histogram_path}: {exc}")
        return EXIT_ESTIMATION
    if fmt == "csv":
        sys.stdout.write(report.estimate_csv(est))
    else:
        sys.stdout.write(report.estimate_text(est, f"{histogram_path} ({report.histogram_summary(dist)})"))
    return EXIT_OK


def _stream_from_input(path, seed, flow):
    """Per-packet counters: simulated in delivery order for a scenario, or a
    seeded shuffle of the packets of a histogram."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        scenario = load_scenario(path)
        seed = scenario.seed if seed is None else seed
        names = [f.name for f in scenario.measured_flows()]
        flow = names[0] if flow is None else flow
        if flow not in names:
            raise ScenarioError(f"{path}: no measured flow named {flow!r}")
        output = simulate_red_path(scenario, seed=seed, record_marks=True)
        return output.mark_streams[flow]
    dist = csvio.read_histogram(path)
    marks = np.repeat(np.arange(dist.max_count + 1), dist.dense())
    return np.random.default_rng(0 if seed is None else seed).permutation(marks)


def cmd_converge(input_path, stride=DEFAULT_STRIDE, out_path=None, seed=None, flow=None, depth=None,
                 epsilon_limit=DEFAULT_EPSILON) -> int:
    if stride < 1:
        _err("--stride must be >= 1")
        return EXIT_INPUT
    if depth is not None and depth < 1:
        _err("--depth must be >= 1")
        return EXIT_INPUT
    try:
        marks = _stream_from_input(input_path, seed, flow)
    except (ScenarioError, csvio.HistogramFormatError, SimulationError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO
    trace = stream_estimate(marks, stride, epsilon_limit, path_depth=depth)
    try:
        if out_path is None:
            csvio.write_trace(trace, sys.stdout)
        else:
            csvio.save_trace(trace, out_path)
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO
    info = sys.stderr if out_path is None else sys.stdout
    if not trace.checkpoints:
        print(f"{len(marks)} packets: fewer than one stride, no checkpoints", file=info)
        return EXIT_OK
    th = detect_thresholds(trace)
    last = trace.checkpoints[-1]
    print(f"packets: {last.packets_seen}  checkpoints: {len(trace)}  stride: {stride}", file=info)
    print(f"sigma_stable_at: {th.sigma_stable_at if th.sigma_stable_at is not None else 'never'}"
          f"  (window {th.stability_window}, tol {th.stability_tol})", file=info)
    print(f"solvable_at: {th.solvable_at if th.solvable_at is not None else 'never'}", file=info)
    if last.rates is not None:
        print("final rates: " + ", ".join(f"{r:.4f}" for r in last.rates.rates), file=info)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecnstar", description="ECN* marking rate estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario, write histograms, series and a report")
    p.add_argument("scenario", type=Path)
    p.add_argument("out", type=Path, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--epsilon-limit", type=float, default=DEFAULT_EPSILON)

    p = sub.add_parser("estimate", help="estimate per-router rates from a histogram CSV")
    p.add_argument("histogram", type=Path)
    p.add_argument("--epsilon-limit", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--format", choices=("text", "csv"), default="text")

    p = sub.add_parser("converge", help="re-estimate every STRIDE packets and report thresholds")
    p.add_argument("input", type=Path, help="scenario JSON or histogram CSV")
    p.add_argument("--stride", type=int, default=DEFAULT_STRIDE)
    p.add_argument("--out", type=Path, default=None, help="trace CSV (default: stdout)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--flow", default=None, help="measured flow to stream (default: the first)")
    p.add_argument("--depth", type=int, default=None,
                   help="known number of congested routers; solvable only once reached")
    p.add_argument("--epsilon-limit", type=float, default=DEFAULT_EPSILON)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.epsilon_limit <= 0:
        _err("--epsilon-limit must be positive")
        return EXIT_INPUT
    if args.command == "simulate":
        return cmd_simulate(args.scenario, args.out, args.seed, args.epsilon_limit)
    if args.command == "estimate":
        return cmd_estimate(args.histogram, args.epsilon_limit, args.format)
    return cmd_converge(args.input, args.stride, args.out, args.seed, args.flow, args.depth, args.epsilon_limit)


if __name__ == "__main__":
    sys.exit(main())
