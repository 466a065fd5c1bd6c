import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecnstar import _jit, kernels
from ecnstar.model import sigmas_from_rates
from ecnstar.solver import level_grid
from paperdata import FLOW1_COEFFS

needs_numba = pytest.mark.skipif(not _jit.HAVE_NUMBA, reason="numba not installed")


def _coeffs(rates, noise, rng):
    s = sigmas_from_rates(rates).sigma
    c = np.array([1.0] + [(-1) ** (k + 1) * s[k] for k in range(len(s))])
    if noise:
        c[1:] += rng.normal(0.0, noise, len(s))
    return c


def same(a, b):
    return np.array_equal(a[1], b[1]) and np.array_equal(a[0], b[0], equal_nan=True)


def test_numpy_matches_python_on_flow1():
    lv = level_grid(1e-3, 21)
    assert same(kernels.sweep_numpy(FLOW1_COEFFS, lv), kernels.sweep_python(FLOW1_COEFFS, lv))


@needs_numba
def test_numba_matches_numpy_on_random_polynomials():
    rng = np.random.default_rng(11)
    lv = level_grid(1e-3)
    for _ in range(40):
        n = int(rng.integers(1, 7))
        c = _coeffs(rng.random(n), 1e-3, rng)
        assert same(kernels.sweep_numba(c, lv), kernels.sweep_numpy(c, lv))


@needs_numba
@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 100), min_size=1, max_size=5))
def test_numba_matches_numpy_exact_roots(steps):
    # grid-aligned and repeated roots exercise the exact-zero and tangency paths
    c = _coeffs([x / 100 for x in steps], 0.0, None)
    lv = np.array([-1e-6, 0.0, 1e-6])
    assert same(kernels.sweep_numba(c, lv), kernels.sweep_numpy(c, lv))


def test_grid_point_root_reported_once_and_tangent_twice():
    c = np.array([1.0, -0.5])  # x - 0.5, root on the grid
    out, counts = kernels.sweep_numpy(c, [0.0])
    assert counts[0] == 1 and out[0, 0] == 0.5
    c = np.array([1.0, -1.0, 0.25])  # (x - 0.5)^2, tangent on the grid
    out, counts = kernels.sweep_numpy(c, [0.0])
    assert counts[0] == 2 and out[0, :2].tolist() == [0.5, 0.5]
    if _jit.HAVE_NUMBA:
        assert same(kernels.sweep_numba(c, [0.0]), (out, counts))


def test_rows_sorted_and_padded():
    out, counts = kernels.sweep(np.array([1.0, -0.7, 0.1]), level_grid(1e-3, 5))
    assert out.shape == (5, kernels.max_roots(2))
    for row, k in zip(out, counts):
        assert np.all(np.diff(row[:k]) >= 0)
        assert np.all(np.isnan(row[k:]))


def test_dispatch_follows_flag():
    lv = level_grid(1e-3, 11)
    c = np.array(FLOW1_COEFFS)
    expected = kernels.sweep_numba(c, lv) if _jit.USE_NUMBA else kernels.sweep_numpy(c, lv)
    assert same(kernels.sweep(c, lv), expected)
