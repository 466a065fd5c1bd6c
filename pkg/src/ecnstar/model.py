"""Mark-count probability model.

Forward direction: per-router marking rates -> probability that a packet
carries a counter value of k. Inverse direction: observed probabilities ->
elementary symmetric polynomials of the (unknown) rates.

Indices follow the counter value: ``p[k-1]`` holds p(M_k^n) and
``sigma[k-1]`` holds sigma_k^n, for k = 1..n.
"""
from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from math import comb

import numpy as np

MAX_DEPTH = 20
BRUTEFORCE_MAX = 20


class NoCongestionObserved(ValueError):
    """The distribution has no marked packet, so there is nothing to solve."""


def _check_depth(n: int) -> None:
    if n < 1:
        raise ValueError("path depth must be >= 1")
    if n > MAX_DEPTH:
        raise ValueError(f"path depth {n} exceeds the supported maximum of {MAX_DEPTH}")


@dataclass(frozen=True)
class MarkingRates:
    rates: tuple[float, ...]

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        if not rates:
            raise ValueError("at least one marking rate is required")
        for r in rates:
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"marking rate {r!r} outside [0, 1]")
        object.__setattr__(self, "rates", rates)

    @property
    def n(self) -> int:
        return len(self.rates)

    def sorted(self) -> MarkingRates:
        return MarkingRates(tuple(sorted(self.rates)))

    def __len__(self):
        return len(self.rates)

    def __iter__(self):
        return iter(self.rates)


def _as_rates(rates) -> MarkingRates:
    return rates if isinstance(rates, MarkingRates) else MarkingRates(tuple(rates))


@dataclass(frozen=True)
class MarkDistribution:
    """Histogram of counter values: ``counts[k]`` packets arrived marked k times."""

    counts: Mapping[int, int]
    total: int = -1

    def __post_init__(self):
        clean = {}
        for k, c in dict(self.counts).items():
            k, c = int(k), int(c)
            if k < 0:
                raise ValueError(f"negative mark count {k}")
            if c < 0:
                raise ValueError(f"negative packet count for k={k}")
            if c:
                clean[k] = clean.get(k, 0) + c
        total = sum(clean.values())
        if self.total not in (-1, total):
            raise ValueError(f"total {self.total} does not match the sum of counts {total}")
        object.__setattr__(self, "counts", dict(sorted(clean.items())))
        object.__setattr__(self, "total", total)

    @classmethod
    def from_array(cls, counts) -> MarkDistribution:
        """Build from a dense array where index k holds the packets marked k times."""
        return cls({k: int(c) for k, c in enumerate(np.asarray(counts).tolist()) if c})

    @classmethod
    def from_marks(cls, marks: Iterable[int]) -> MarkDistribution:
        """Build from per-packet counter values."""
        arr = np.asarray(list(marks) if not isinstance(marks, np.ndarray) else marks, dtype=np.int64)
        if arr.size and arr.min() < 0:
            raise ValueError("negative mark count")
        return cls.from_array(np.bincount(arr)) if arr.size else cls({})

    @property
    def max_count(self) -> int:
        """Largest counter value seen; this is the inferred path depth."""
        return max(self.counts, default=0)

    def dense(self, n: int | None = None) -> np.ndarray:
        n = self.max_count if n is None else n
        out = np.zeros(n + 1, dtype=np.int64)
        for k, c in self.counts.items():
            if k <= n:
                out[k] = c
        return out


@dataclass(frozen=True)
class MarkProbabilities:
    n: int
    p: tuple[float, ...]
    p0: float

    def __post_init__(self):
        if len(self.p) != self.n:
            raise ValueError(f"expected {self.n} probabilities, got {len(self.p)}")

    def full(self) -> np.ndarray:
        """Vector indexed by counter value, k = 0..n."""
        return np.array((self.p0, *self.p))


@dataclass(frozen=True)
class SigmaValidity:
    """Bounds report for sigma_k in [0, C(n, k)]; noisy data may break them."""

    violations: tuple[tuple[int, float], ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class SigmaVector:
    n: int
    sigma: tuple[float, ...]
    validity: SigmaValidity = field(default_factory=SigmaValidity, compare=False)

    def __post_init__(self):
        if len(self.sigma) != self.n:
            raise ValueError(f"expected {self.n} sigmas, got {len(self.sigma)}")


def _sigma_validity(sigma: np.ndarray) -> SigmaValidity:
    n = len(sigma)
    bad = tuple(
        (k, float(s))
        for k, s in enumerate(sigma, start=1)
        if not (0.0 <= s <= comb(n, k))
    )
    return SigmaValidity(bad)


def forward_recursion(rates) -> MarkProbabilities:
    """Mark-count probabilities by adding one router at a time.

    p(M_k^{j+1}) = p(M_k^j) (1 - p_{j+1}) + p(M_{k-1}^j) p_{j+1}
    """
    rates = _as_rates(rates)
    dist = np.zeros(rates.n + 1)
    dist[0] = 1.0
    for j, r in enumerate(rates.rates, start=1):
        # descending k so dist[k-1] is still the previous router's value
        for k in range(j, 0, -1):
            dist[k] = dist[k] * (1.0 - r) + dist[k - 1] * r
        dist[0] *= 1.0 - r
    return MarkProbabilities(rates.n, tuple(dist[1:].tolist()), float(dist[0]))


def forward_bruteforce(rates) -> MarkProbabilities:
    """Mark-count probabilities by enumerating all 2^n mark/no-mark patterns."""
    rates = _as_rates(rates)
    n = rates.n
    if n > BRUTEFORCE_MAX:
        raise ValueError(f"brute force enumeration limited to n <= {BRUTEFORCE_MAX}, got {n}")
    r = np.array(rates.rates)
    bits = np.arange(n)
    out = np.zeros(n + 1)
    chunk = 1 << min(n, 14)
    for start in range(0, 1 << n, chunk):
        masks = (np.arange(start, start + chunk)[:, None] >> bits) & 1
        weights = np.where(masks == 1, r, 1.0 - r).prod(axis=1)
        out += np.bincount(masks.sum(axis=1), weights=weights, minlength=n + 1)
    return MarkProbabilities(n, tuple(out[1:].tolist()), float(out[0]))


def sigmas_from_rates(rates) -> SigmaVector:
    """Elementary symmetric polynomials of the rates (Vieta coefficients)."""
    rates = _as_rates(rates)
    e = np.zeros(rates.n + 1)
    e[0] = 1.0
    for j, x in enumerate(rates.rates, start=1):
        for k in range(j, 0, -1):
            e[k] += x * e[k - 1]
    return SigmaVector(rates.n, tuple(e[1:].tolist()), _sigma_validity(e[1:]))


def _signed_binomials(n: int) -> list[list[float]]:
    # coef[k][i] = (-1)^i C(i+k, i), exact integers converted once
    return [[float((-1) ** i * comb(i + k, i)) for i in range(n - k + 1)] for k in range(n + 1)]


def probabilities_from_sigmas(sigmas: SigmaVector) -> MarkProbabilities:
    """p(M_k^n) = sum_{i=0}^{n-k} (-1)^i C(i+k, i) sigma_{i+k}^n."""
    n = sigmas.n
    _check_depth(n)
    s = (0.0, *sigmas.sigma)
    coef = _signed_binomials(n)
    p = [sum(coef[k][i] * s[i + k] for i in range(n - k + 1)) for k in range(1, n + 1)]
    # p0 follows the same formula at k=0 with sigma_0 = 1
    p0 = 1.0 + sum(coef[0][i] * s[i] for i in range(1, n + 1))
    return MarkProbabilities(n, tuple(p), p0)


def sigmas_from_probabilities(probs: MarkProbabilities) -> SigmaVector:
    """Back-substitute the triangular system from k = n down to 1."""
    n = probs.n
    _check_depth(n)
    coef = _signed_binomials(n)
    s = [0.0] * (n + 1)
    for k in range(n, 0, -1):
        s[k] = probs.p[k - 1] - sum(coef[k][i] * s[i + k] for i in range(1, n - k + 1))
    sigma = np.array(s[1:])
    return SigmaVector(n, tuple(sigma.tolist()), _sigma_validity(sigma))


def probabilities_from_distribution(dist: MarkDistribution) -> MarkProbabilities:
    """Plain frequency ratios. Depth is the largest counter value observed.

    Raises NoCongestionObserved when no packet was marked (depth 0), after
    rejecting empty distributions outright.
    """
    if dist.total < 1:
        raise ValueError("empty mark distribution")
    n = dist.max_count
    if n == 0:
        raise NoCongestionObserved(f"none of {dist.total} packets was marked")
    _check_depth(n)
    dense = dist.dense(n)
    return MarkProbabilities(n, tuple((dense[1:] / dist.total).tolist()), dense[0] / dist.total)
