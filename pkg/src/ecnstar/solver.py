"""Solving polynomial and the epsilon-perturbed root areas.

The marking rates are the roots of the monic polynomial whose coefficients
are the signed sigmas. With sampled data the polynomial is only known up to
noise, so instead of solving P(x) = 0 we solve P(x) = eps for eps on a
symmetric grid, keep the levels where all n solutions exist in [0, 1], and
group the solutions into n disjoint intervals. The midpoint of each interval
is the rate estimate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import (
    MarkDistribution,
    MarkingRates,
    MarkProbabilities,
    NoCongestionObserved,
    SigmaVector,
    probabilities_from_distribution,
    sigmas_from_probabilities,
)

DEFAULT_EPSILON = 1e-3
DEFAULT_LEVELS = 201
DEFAULT_GRID = 1e-4
ROOT_TOL = 1e-10
MAX_LEVEL = 0.1

__all__ = [
    "NoCongestionObserved",
    "NoFullSolutionBand",
    "RateEstimate",
    "RootAreas",
    "SolvingPolynomial",
    "build_polynomial",
    "estimate_rates",
    "extract_root_areas",
    "real_roots_in_unit_interval",
]


class NoFullSolutionBand(RuntimeError):
    """No level in the sweep gives n solutions in [0, 1].

    Usually the sample is too small or the marking was not stationary.
    """


@dataclass(frozen=True)
class SolvingPolynomial:
    n: int
    coeffs: tuple[float, ...]  # a_0 .. a_n, a_n == 1

    def __post_init__(self):
        if len(self.coeffs) != self.n + 1:
            raise ValueError("coefficient count must be degree + 1")
        if self.coeffs[-1] != 1.0:
            raise ValueError("solving polynomial must be monic")

    @property
    def descending(self) -> np.ndarray:
        return np.array(self.coeffs[::-1])

    def __call__(self, x):
        v = np.zeros_like(np.asarray(x, dtype=float))
        for a in self.coeffs[::-1]:
            v = v * x + a
        return v


def build_polynomial(sigmas: SigmaVector) -> SolvingPolynomial:
    """P(x) = x^n - sigma_1 x^{n-1} + sigma_2 x^{n-2} - ... + (-1)^n sigma_n."""
    n = sigmas.n
    if n < 1:
        raise ValueError("need at least one sigma")
    coeffs = [0.0] * (n + 1)
    coeffs[n] = 1.0
    for k, s in enumerate(sigmas.sigma, start=1):
        coeffs[n - k] = -s if k % 2 else s
    return SolvingPolynomial(n, tuple(float(c) for c in coeffs))


def real_roots_in_unit_interval(poly: SolvingPolynomial, level: float = 0.0,
                                grid: float = DEFAULT_GRID) -> list[float]:
    """Solutions of P(x) = level in [0, 1], ascending, tangential roots twice."""
    if abs(level) > MAX_LEVEL:
        raise ValueError(f"|level| must be <= {MAX_LEVEL}")
    out, counts = kernels.sweep(poly.descending, [level], _grid_cells(grid), ROOT_TOL)
    k = min(int(counts[0]), out.shape[1])
    return out[0, :k].tolist()


def _grid_cells(grid: float) -> int:
    if not 0 < grid <= 0.5:
        raise ValueError("grid resolution must be in (0, 0.5]")
    return int(round(1.0 / grid))


@dataclass(frozen=True)
class RootAreas:
    areas: tuple[tuple[float, float], ...]
    epsilon_band: tuple[float, float]
    midpoints: tuple[float, ...]
    zero_level_roots: tuple[float, ...] | None = None
    other_bands: tuple[tuple[float, float], ...] = ()
    levels_used: int = 0

    @property
    def contiguous(self) -> bool:
        return not self.other_bands


def level_grid(epsilon_limit: float, count: int = DEFAULT_LEVELS) -> np.ndarray:
    if count < 1 or count % 2 == 0:
        raise ValueError("level count must be a positive odd number")
    levels = epsilon_limit * np.linspace(-1.0, 1.0, count)
    levels[count // 2] = 0.0
    return levels


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive index ranges of consecutive True entries."""
    runs = []
    start = None
    for i, v in enumerate(mask):
        if v and start is None:
            start = i
        elif not v and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(mask) - 1))
    return runs


def extract_root_areas(poly: SolvingPolynomial, epsilon_limit: float = DEFAULT_EPSILON,
                       levels: int = DEFAULT_LEVELS, grid: float = DEFAULT_GRID) -> RootAreas:
    if epsilon_limit <= 0:
        raise ValueError("epsilon_limit must be positive")
    n = poly.n
    eps = level_grid(epsilon_limit, levels)
    roots, counts = kernels.sweep(poly.descending, eps, _grid_cells(grid), ROOT_TOL)
    full = counts == n
    runs = _runs(full)
    if not runs:
        raise NoFullSolutionBand(
            f"no level in [-{epsilon_limit:g}, {epsilon_limit:g}] gives {n} solutions in [0, 1]"
        )
    centre = levels // 2

    def distance(run):
        lo, hi = run
        return 0 if lo <= centre <= hi else min(abs(lo - centre), abs(hi - centre))

    # closest run to eps = 0; on a tie the lower one, so the choice is deterministic
    chosen = min(runs, key=lambda r: (distance(r), r[0]))
    lo, hi = chosen
    sols = np.sort(roots[lo:hi + 1, :n].ravel())
    if n == 1:
        groups = [sols]
    else:
        gaps = np.diff(sols)
        cuts = np.sort(np.argsort(gaps, kind="stable")[-(n - 1):])
        groups = np.split(sols, cuts + 1)
    areas = tuple((float(g[0]), float(g[-1])) for g in groups)
    mids = tuple(0.5 * (a + b) for a, b in areas)
    zero = tuple(roots[centre, :n].tolist()) if full[centre] else None
    others = tuple((float(eps[a]), float(eps[b])) for a, b in runs if (a, b) != chosen)
    return RootAreas(
        areas=areas,
        epsilon_band=(float(eps[lo]), float(eps[hi])),
        midpoints=mids,
        zero_level_roots=zero,
        other_bands=others,
        levels_used=hi - lo + 1,
    )


@dataclass(frozen=True)
class RateEstimate:
    rates: MarkingRates
    areas: RootAreas
    probabilities: MarkProbabilities
    sigmas: SigmaVector
    polynomial: SolvingPolynomial
    diagnostics: dict = field(default_factory=dict, compare=False)


def estimate_from_probabilities(probs: MarkProbabilities, epsilon_limit: float = DEFAULT_EPSILON,
                                **sweep_args) -> RateEstimate:
    sigmas = sigmas_from_probabilities(probs)
    poly = build_polynomial(sigmas)
    areas = extract_root_areas(poly, epsilon_limit, **sweep_args)
    diagnostics = {
        "sigma_valid": sigmas.validity.ok,
        "sigma_violations": sigmas.validity.violations,
        "epsilon_band": areas.epsilon_band,
        "contiguous_band": areas.contiguous,
        "zero_level_roots": areas.zero_level_roots,
    }
    return RateEstimate(MarkingRates(areas.midpoints), areas, probs, sigmas, poly, diagnostics)


def estimate_rates(dist: MarkDistribution, epsilon_limit: float = DEFAULT_EPSILON,
                   **sweep_args) -> RateEstimate:
    """Histogram -> ratios -> sigmas -> polynomial -> root areas -> midpoints.

    Raises NoCongestionObserved when no packet carries a mark and
    NoFullSolutionBand when the sweep never finds n solutions.
    """
    return estimate_from_probabilities(probabilities_from_distribution(dist), epsilon_limit, **sweep_args)
