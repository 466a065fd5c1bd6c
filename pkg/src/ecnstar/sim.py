"""Mark-count data generators.

``simulate_bernoulli`` is the stationary model made literal: every router
marks independently with a fixed probability. ``simulate_red_path`` pushes
packets through RED/ECN* queues whose marking probability follows their
EWMA average queue.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _jit, simkernel
from .model import MarkDistribution, MarkingRates
from .scenario import BernoulliMarker, PathScenario, RedQueue


def bernoulli_marks(rates, packets: int, seed: int | None = None) -> np.ndarray:
    """Per-packet counter values, in arrival order."""
    rates = rates if isinstance(rates, MarkingRates) else MarkingRates(tuple(rates))
    if packets < 1:
        raise ValueError("packets must be >= 1")
    rng = np.random.default_rng(seed)
    r = np.array(rates.rates)
    out = np.empty(packets, dtype=np.int64)
    chunk = 1 << 16
    for start in range(0, packets, chunk):
        stop = min(packets, start + chunk)
        out[start:stop] = (rng.random((stop - start, r.size)) < r).sum(axis=1)
    return out


def simulate_bernoulli(rates, packets: int, seed: int | None = None) -> MarkDistribution:
    return MarkDistribution.from_marks(bernoulli_marks(rates, packets, seed))


def red_mark_probability(avg_queue: float, model: RedQueue) -> float:
    """Linear RED law: 0 below min_th, max_p at max_th, 1 from max_th on."""
    if avg_queue < 0:
        raise ValueError("average queue must be >= 0")
    if avg_queue < model.min_th:
        return 0.0
    if avg_queue >= model.max_th:
        return 1.0
    return model.max_p * (avg_queue - model.min_th) / (model.max_th - model.min_th)


@dataclass(frozen=True)
class RouterStats:
    name: str
    avg_queue: float | None  # time average of the EWMA over the measured period
    theoretical_rate: float | None
    mark_fraction: float
    arrivals: int
    marks: int
    drops: int


@dataclass(frozen=True)
class FlowStats:
    injected: int
    delivered: int
    dropped: int
    in_network: int


@dataclass
class SimOutput:
    scenario: PathScenario
    distributions: dict[str, MarkDistribution]
    routers: dict[str, RouterStats]
    flows: dict[str, FlowStats]
    series: dict[str, np.ndarray]  # columns: tick, avg_queue, mark_fraction, drops
    ticks: int
    measure_start: int
    completed: bool
    warnings: list[str] = field(default_factory=list)
    # per measured flow, counter values in delivery order (only with record_marks)
    mark_streams: dict[str, np.ndarray] = field(default_factory=dict)


class SimulationError(RuntimeError):
    pass


def _queue_has_diverged(avg_series: np.ndarray) -> bool:
    """Relative change of the windowed mean over the last quarter above 5%."""
    tail = avg_series[-(len(avg_series) // 4):] if len(avg_series) >= 8 else avg_series
    if len(tail) < 2:
        return False
    half = len(tail) // 2
    a, b = tail[:half].mean(), tail[half:].mean()
    scale = max(abs(a), 1.0)
    return abs(b - a) / scale > 0.05


def simulate_red_path(scenario: PathScenario, seed: int | None = None, max_ticks: int | None = None,
                      use_numba: bool | None = None, record_marks: bool = False) -> SimOutput:
    """Run the slotted-time packet loop until every measured flow has its budget.

    ``max_ticks`` caps the run; a capped run returns ``completed=False``
    with whatever was collected (the calibration search relies on this).
    """
    seed = scenario.seed if seed is None else seed
    use_numba = _jit.USE_NUMBA if use_numba is None else use_numba
    kernel = simkernel.run_numba if use_numba and simkernel.run_numba is not None else simkernel.run_python

    names = [r.name for r in scenario.routers]
    index = {n: i for i, n in enumerate(names)}
    R, F = len(names), len(scenario.flows)
    kind = np.zeros(R, dtype=np.int64)
    rate = np.zeros(R)
    min_th = np.zeros(R)
    max_th = np.ones(R)
    max_p = np.ones(R)
    capacity = np.ones(R, dtype=np.int64)
    weight = np.ones(R)
    service = np.zeros(R, dtype=np.int64)
    for i, r in enumerate(scenario.routers):
        m = r.model
        if isinstance(m, RedQueue):
            kind[i] = simkernel.KIND_RED
            min_th[i], max_th[i], max_p[i] = m.min_th, m.max_th, m.max_p
            capacity[i], weight[i], service[i] = m.capacity, m.ewma_weight, m.service_rate
        else:
            kind[i] = simkernel.KIND_BERNOULLI
            rate[i] = m.rate

    longest = max(len(f.route) for f in scenario.flows)
    routes = np.zeros((F, longest), dtype=np.int64)
    route_len = np.zeros(F, dtype=np.int64)
    load = np.zeros(F)
    window = np.zeros(F)
    measured = np.zeros(F, dtype=np.bool_)
    for j, f in enumerate(scenario.flows):
        route_len[j] = len(f.route)
        routes[j, :len(f.route)] = [index[h] for h in f.route]
        load[j] = f.offered_load
        window[j] = f.window or 0.0
        measured[j] = f.measured

    budget = scenario.packet_budget
    warmup = scenario.warmup_packets
    if max_ticks is None:
        max_ticks = scenario.max_ticks
    if max_ticks is None:
        slowest = min((f.offered_load for f in scenario.measured_flows()), default=1.0)
        max_ticks = int(20 * (budget + warmup) / max(slowest, 1e-3)) + 10_000

    pool = int(capacity[kind == simkernel.KIND_RED].sum() + service.sum()
               + sum(int(20 * l) + 50 for l in load) + 16)
    pk_flow = np.zeros(pool, dtype=np.int64)
    pk_hop = np.zeros(pool, dtype=np.int64)
    pk_marks = np.zeros(pool, dtype=np.int64)
    free_stack = np.zeros(pool, dtype=np.int64)
    qbuf = np.zeros((R, int(capacity.max())), dtype=np.int64)
    qhead = np.zeros(R, dtype=np.int64)
    qlen = np.zeros(R, dtype=np.int64)
    transit = np.zeros(pool, dtype=np.int64)
    avg = np.zeros(R)
    hist = np.zeros((F, longest + 1), dtype=np.int64)
    marklog = np.zeros((F, budget if record_marks else 0), dtype=np.int64)
    flow_stats = np.zeros((F, 3), dtype=np.int64)
    router_stats = np.zeros((R, 3), dtype=np.int64)
    avg_sum = np.zeros(R)
    every = scenario.series_interval
    series = np.zeros((max_ticks // every + 1, R, 3))

    status, ticks, measure_start, avg_samples, n_series, n_transit = kernel(
        simkernel.seed_state(seed),
        kind, rate, min_th, max_th, max_p, capacity, weight, service,
        routes, route_len, load, window, measured, budget, warmup,
        max_ticks, every,
        pk_flow, pk_hop, pk_marks, free_stack,
        qbuf, qhead, qlen, transit, avg,
        hist, marklog, flow_stats, router_stats, avg_sum, series,
    )
    if status == simkernel.STATUS_POOL_EXHAUSTED:
        raise SimulationError("packet pool exhausted; offered loads are too high for the queues")

    # census of packets still queued or in transit, per flow
    in_net = np.zeros(F, dtype=np.int64)
    for r in range(R):
        for k in range(qlen[r]):
            in_net[pk_flow[qbuf[r, (qhead[r] + k) % capacity[r]]]] += 1
    for k in range(n_transit):
        in_net[pk_flow[transit[k]]] += 1

    out_warnings = []
    router_out = {}
    series_out = {}
    for i, name in enumerate(names):
        rows = series[:n_series, i, :]
        ticks_col = (np.arange(1, n_series + 1) * every).astype(float)
        series_out[name] = np.column_stack([ticks_col, rows])
        arrivals, marks, drops = (int(v) for v in router_stats[i])
        if kind[i] == simkernel.KIND_RED:
            mean_avg = float(avg_sum[i] / avg_samples) if avg_samples else float("nan")
            model = scenario.routers[i].model
            theory = red_mark_probability(mean_avg, model) if avg_samples else None
            if n_series >= 8 and _queue_has_diverged(rows[:, 0]):
                out_warnings.append(f"average queue of {name} has not stabilised")
        else:
            mean_avg, theory = None, scenario.routers[i].model.rate
        router_out[name] = RouterStats(name, mean_avg, theory,
                                       marks / arrivals if arrivals else 0.0, arrivals, marks, drops)
    for w in out_warnings:
        warnings.warn(w, RuntimeWarning, stacklevel=2)

    dists = {}
    streams = {}
    flows_out = {}
    for j, f in enumerate(scenario.flows):
        injected, delivered, dropped = (int(v) for v in flow_stats[j])
        flows_out[f.name] = FlowStats(injected, delivered, dropped, int(in_net[j]))
        if f.measured:
            dists[f.name] = MarkDistribution.from_array(hist[j])
            if record_marks:
                streams[f.name] = marklog[j, :int(hist[j].sum())].copy()
    return SimOutput(scenario, dists, router_out, flows_out, series_out, int(ticks),
                     int(measure_start), status == simkernel.STATUS_DONE, out_warnings, streams)


@dataclass(frozen=True)
class Calibration:
    windows: dict[str, float]
    averages: dict[str, float]
    converged: bool
    iterations: int


def calibrate_windows(scenario: PathScenario, targets: dict[str, float], knobs: dict[str, str],
                      tolerance: float = 0.5, ticks: int = 20_000, iterations: int = 30,
                      seed: int | None = None) -> Calibration:
    """Bisect the window of one flow per router until its average queue hits a target.

    ``knobs`` maps router name -> flow name whose window drives that queue.
    Every iteration runs one simulation of ``ticks`` ticks and updates all
    brackets at once. The average queue grows with the window, which is all
    bisection needs.
    """
    lo = {r: 0.0 for r in targets}
    hi = {r: float(scenario.router(r).model.capacity) for r in targets}
    windows = {knobs[r]: 0.5 * (lo[r] + hi[r]) for r in targets}
    probe = _calibration_probe(scenario, ticks)
    averages = {}
    for it in range(1, iterations + 1):
        out = simulate_red_path(probe.with_windows(windows), seed=seed, max_ticks=ticks)
        averages = {r: out.routers[r].avg_queue for r in targets}
        if all(abs(averages[r] - targets[r]) <= tolerance for r in targets):
            return Calibration(dict(windows), averages, True, it)
        for r in targets:
            if averages[r] < targets[r]:
                lo[r] = windows[knobs[r]]
            else:
                hi[r] = windows[knobs[r]]
            windows[knobs[r]] = 0.5 * (lo[r] + hi[r])
    return Calibration(dict(windows), averages, False, iterations)


def _calibration_probe(scenario: PathScenario, ticks: int) -> PathScenario:
    # skip roughly the first 10% of ticks; the budget is never reached
    slowest = min(f.offered_load for f in scenario.measured_flows())
    return replace(scenario, packet_budget=10 ** 12, warmup=int(0.1 * ticks * slowest),
                   max_ticks=ticks, series_interval=max(1, ticks // 100))


def write_histogram(dist: MarkDistribution, path, depth: int | None = None) -> None:
    depth = dist.max_count if depth is None else max(depth, dist.max_count)
    dense = dist.dense(depth)
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mark_count", "packets"])
            for k, c in enumerate(dense):
                w.writerow([k, int(c)])
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc


def write_router_series(series: np.ndarray, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tick", "avg_queue", "mark_fraction", "drops"])
            for tick, avg_q, frac, drops in series:
                w.writerow([int(tick), repr(float(avg_q)), repr(float(frac)), int(drops)])
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc


def export_distribution(output: SimOutput, path) -> list[Path]:
    """Write ``<flow>.hist.csv`` per measured flow and ``<router>.series.csv`` per router."""
    out_dir = Path(path)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"{out_dir}: {exc.strerror or exc}") from exc
    written = []
    for name, dist in output.distributions.items():
        depth = len(output.scenario.flow(name).route)
        p = out_dir / f"{name}.hist.csv"
        write_histogram(dist, p, depth)
        written.append(p)
    for name, series in output.series.items():
        p = out_dir / f"{name}.series.csv"
        write_router_series(series, p)
        written.append(p)
    return written
