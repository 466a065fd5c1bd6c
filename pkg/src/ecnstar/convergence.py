"""Online estimation: re-solve every ``stride`` packets and find the thresholds
at which the sigmas settle and at which the level sweep first succeeds."""
from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from .model import MarkDistribution, MarkingRates, SigmaVector, probabilities_from_distribution, \
    sigmas_from_probabilities
from .solver import DEFAULT_EPSILON, NoFullSolutionBand, build_polynomial, extract_root_areas

DEFAULT_STRIDE = 50
DEFAULT_WINDOW = 20
DEFAULT_TOL = 0.05


@dataclass(frozen=True)
class Checkpoint:
    packets_seen: int
    depth: int  # largest counter value seen so far
    sigma: SigmaVector | None
    rates: MarkingRates | None
    solvable: bool


@dataclass(frozen=True)
class ConvergenceTrace:
    checkpoints: tuple[Checkpoint, ...]
    stride: int
    path_depth: int | None = None

    def __len__(self):
        return len(self.checkpoints)


@dataclass(frozen=True)
class ThresholdReport:
    sigma_stable_at: int | None
    solvable_at: int | None
    stability_window: int
    stability_tol: float


def _checkpoint(counts: np.ndarray, seen: int, epsilon_limit: float, path_depth: int | None) -> Checkpoint:
    dist = MarkDistribution.from_array(counts)
    depth = dist.max_count
    if depth == 0:
        return Checkpoint(seen, 0, None, None, False)
    sigma = sigmas_from_probabilities(probabilities_from_distribution(dist))
    if path_depth is not None and depth != path_depth:
        return Checkpoint(seen, depth, sigma, None, False)
    try:
        areas = extract_root_areas(build_polynomial(sigma), epsilon_limit)
    except NoFullSolutionBand:
        return Checkpoint(seen, depth, sigma, None, False)
    return Checkpoint(seen, depth, sigma, MarkingRates(areas.midpoints), True)


def stream_estimate(marks: Iterable[int], stride: int = DEFAULT_STRIDE,
                    epsilon_limit: float = DEFAULT_EPSILON, path_depth: int | None = None) -> ConvergenceTrace:
    """Consume per-packet counter values, solving at every multiple of ``stride``.

    With ``path_depth`` the observer knows how many congested routers the
    path has; checkpoints are then solvable only once that many marks have
    been seen on a single packet.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    counts = np.zeros(8, dtype=np.int64)
    seen = 0
    points = []
    for k in marks:
        k = int(k)
        if k < 0:
            raise ValueError("negative mark count in stream")
        if k >= counts.size:
            counts = np.concatenate([counts, np.zeros(k + 1 - counts.size + 8, dtype=np.int64)])
        counts[k] += 1
        seen += 1
        if seen % stride == 0:
            points.append(_checkpoint(counts, seen, epsilon_limit, path_depth))
    return ConvergenceTrace(tuple(points), stride, path_depth)


def _within(base: SigmaVector, other: SigmaVector | None, tol: float) -> bool:
    if other is None or other.n != base.n:
        return False
    for a, b in zip(base.sigma, other.sigma):
        if a == 0.0:
            if b != 0.0:
                return False
        elif abs(b - a) / abs(a) >= tol:
            return False
    return True


def detect_thresholds(trace: ConvergenceTrace, stability_window: int = DEFAULT_WINDOW,
                      stability_tol: float = DEFAULT_TOL) -> ThresholdReport:
    """First checkpoint whose sigmas hold within ``stability_tol`` (relative)
    over the next ``stability_window`` checkpoints, and the first solvable one."""
    if not trace.checkpoints:
        raise ValueError("empty trace")
    if stability_window < 0:
        raise ValueError("stability_window must be >= 0")
    pts = trace.checkpoints
    stable_at = None
    for i, cp in enumerate(pts):
        if cp.sigma is None or i + stability_window >= len(pts):
            continue
        if all(_within(cp.sigma, pts[j].sigma, stability_tol) for j in range(i + 1, i + stability_window + 1)):
            stable_at = cp.packets_seen
            break
    solvable_at = next((cp.packets_seen for cp in pts if cp.solvable), None)
    return ThresholdReport(stable_at, solvable_at, stability_window, stability_tol)


def trace_rows(trace: ConvergenceTrace) -> tuple[list[str], list[list[str]]]:
    """Header and rows for the trace CSV; width follows the deepest checkpoint."""
    width = max((cp.depth for cp in trace.checkpoints), default=0)
    header = ["packets"] + [f"sigma_{k}" for k in range(1, width + 1)] + ["solvable"] \
        + [f"rate_{k}" for k in range(1, width + 1)]
    rows = []
    for cp in trace.checkpoints:
        sig = [repr(s) for s in cp.sigma.sigma] if cp.sigma is not None else []
        rates = [repr(r) for r in cp.rates.rates] if cp.rates is not None else []
        rows.append([str(cp.packets_seen)] + sig + [""] * (width - len(sig))
                    + ["true" if cp.solvable else "false"] + rates + [""] * (width - len(rates)))
    return header, rows
