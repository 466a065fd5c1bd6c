"""Root bracketing kernels for the level sweep P(x) = level on [0, 1].

Two implementations with the same contract:

* ``sweep_numpy``: vectorised over grid cells and levels.
* ``sweep_numba``: scalar loops compiled with numba.

Both evaluate P on the grid x_i = i/m, bracket sign changes, bisect each
bracket until its width is <= tol, and probe interior local minima of
|P - level| for tangential roots (reported twice, i.e. with multiplicity).
Output is ``(roots, counts)``; row j of ``roots`` holds ``counts[j]``
ascending roots for ``levels[j]`` followed by NaN padding.
"""
from __future__ import annotations

import math

import numpy as np

from . import _jit

TANGENT_TOL = 1e-12
_GOLD = 0.5 * (math.sqrt(5.0) - 1.0)


def max_roots(degree: int) -> int:
    return 2 * degree + 2


def _make_sweep(decorate):
    @decorate
    def horner(c, x):
        v = c[0]
        for i in range(1, c.shape[0]):
            v = v * x + c[i]
        return v

    @decorate
    def bisect(c, level, lo, hi, tol):
        flo = horner(c, lo) - level
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            fm = horner(c, mid) - level
            if fm == 0.0:
                return mid
            if (fm < 0.0) == (flo < 0.0):
                lo = mid
                flo = fm
            else:
                hi = mid
        return 0.5 * (lo + hi)

    @decorate
    def golden_min(c, level, a, b, tol, gold):
        # minimise |P(x) - level| on [a, b]
        x1 = b - gold * (b - a)
        x2 = a + gold * (b - a)
        f1 = abs(horner(c, x1) - level)
        f2 = abs(horner(c, x2) - level)
        while b - a > tol:
            if f1 <= f2:
                b = x2
                x2 = x1
                f2 = f1
                x1 = b - gold * (b - a)
                f1 = abs(horner(c, x1) - level)
            else:
                a = x1
                x1 = x2
                f1 = f2
                x2 = a + gold * (b - a)
                f2 = abs(horner(c, x2) - level)
        x = 0.5 * (a + b)
        return x, abs(horner(c, x) - level)

    def sweep(c, levels, m, tol, tangent_tol, gold, out, counts):
        cap = out.shape[1]
        pg = np.empty(m + 1)
        for i in range(m + 1):
            pg[i] = horner(c, i / m)
        # Block summaries. A point can only produce a root if the level lies
        # within the values of it and its neighbours, or if it is a discrete
        # local extremum (tangent probe). Blocks with neither are skipped.
        block = 64
        nb = m // block + 1
        bmin = np.empty(nb)
        bmax = np.empty(nb)
        bext = np.zeros(nb, dtype=np.bool_)
        for b in range(nb):
            s = b * block
            e = min(m, s + block - 1)
            lo = pg[max(s - 1, 0)]
            hi = lo
            for i in range(max(s - 1, 0), min(m, e + 1) + 1):
                lo = min(lo, pg[i])
                hi = max(hi, pg[i])
            bmin[b] = lo
            bmax[b] = hi
            for i in range(max(s, 1), min(e, m - 1) + 1):
                if (pg[i] <= pg[i - 1] and pg[i] < pg[i + 1]) or (pg[i] >= pg[i - 1] and pg[i] > pg[i + 1]):
                    bext[b] = True
        for j in range(levels.shape[0]):
            level = levels[j]
            cnt = 0
            for b in range(nb):
                if not bext[b] and (level < bmin[b] or level > bmax[b]):
                    continue
                for i in range(b * block, min(m, b * block + block - 1) + 1):
                    a = pg[i] - level
                    if a == 0.0:
                        mult = 1
                        if 0 < i < m:
                            left = pg[i - 1] - level
                            right = pg[i + 1] - level
                            if left != 0.0 and right != 0.0 and (left < 0.0) == (right < 0.0):
                                mult = 2
                        for _ in range(mult):
                            if cnt < cap:
                                out[j, cnt] = i / m
                            cnt += 1
                        continue
                    if 0 < i < m:
                        left = pg[i - 1] - level
                        right = pg[i + 1] - level
                        if (left < 0.0) == (a < 0.0) and (right < 0.0) == (a < 0.0) \
                                and left != 0.0 and right != 0.0 \
                                and abs(a) <= abs(left) and abs(a) < abs(right):
                            x, fx = golden_min(c, level, (i - 1) / m, (i + 1) / m, tol, gold)
                            if fx < tangent_tol:
                                for _ in range(2):
                                    if cnt < cap:
                                        out[j, cnt] = x
                                    cnt += 1
                    if i < m:
                        nxt = pg[i + 1] - level
                        if nxt != 0.0 and (a < 0.0) != (nxt < 0.0):
                            x = bisect(c, level, i / m, (i + 1) / m, tol)
                            if cnt < cap:
                                out[j, cnt] = x
                            cnt += 1
            counts[j] = cnt
            k = min(cnt, cap)
            out[j, :k] = np.sort(out[j, :k])

    return decorate(sweep)


_sweep_py = _make_sweep(_jit.identity)
_sweep_jit = _make_sweep(_jit.jit) if _jit.HAVE_NUMBA else None


def _prepare(coeffs, levels, degree):
    c = np.ascontiguousarray(coeffs, dtype=np.float64)
    lv = np.ascontiguousarray(np.atleast_1d(levels), dtype=np.float64)
    cap = max_roots(degree)
    out = np.full((lv.shape[0], cap), np.nan)
    counts = np.zeros(lv.shape[0], dtype=np.int64)
    return c, lv, out, counts


def sweep_numba(coeffs, levels, m=10_000, tol=1e-10):
    """Compiled scalar sweep. ``coeffs`` are highest degree first."""
    if _sweep_jit is None:  # pragma: no cover
        raise RuntimeError("numba is not installed")
    c, lv, out, counts = _prepare(coeffs, levels, len(coeffs) - 1)
    _sweep_jit(c, lv, int(m), float(tol), TANGENT_TOL, _GOLD, out, counts)
    return out, counts


def sweep_python(coeffs, levels, m=10_000, tol=1e-10):
    """The scalar sweep run by the interpreter; slow, used to cross-check."""
    c, lv, out, counts = _prepare(coeffs, levels, len(coeffs) - 1)
    _sweep_py(c, lv, int(m), float(tol), TANGENT_TOL, _GOLD, out, counts)
    return out, counts


def _horner_vec(c, x):
    v = np.full_like(x, c[0])
    for a in c[1:]:
        v = v * x + a
    return v


def sweep_numpy(coeffs, levels, m=10_000, tol=1e-10):
    """Vectorised sweep over all levels and grid cells at once."""
    c, lv, out, counts = _prepare(coeffs, levels, len(coeffs) - 1)
    m = int(m)
    idx = np.arange(m + 1)
    pg = _horner_vec(c, idx / m)
    V = pg[None, :] - lv[:, None]
    found_lvl = []
    found_x = []

    zj, zi = np.nonzero(V == 0.0)
    found_lvl.append(zj)
    found_x.append(zi / m)
    inner = (zi > 0) & (zi < m)
    tj, ti = zj[inner], zi[inner]
    lz, rz = V[tj, ti - 1], V[tj, ti + 1]
    touch = (lz != 0.0) & (rz != 0.0) & ((lz < 0.0) == (rz < 0.0))
    found_lvl.append(tj[touch])
    found_x.append(ti[touch] / m)

    a, b = V[:, :-1], V[:, 1:]
    bj, bi = np.nonzero((a != 0.0) & (b != 0.0) & ((a < 0.0) != (b < 0.0)))
    if bj.size:
        level = lv[bj]
        lo = bi / m
        hi = (bi + 1) / m
        flo = _horner_vec(c, lo) - level
        done = np.zeros(bj.size, dtype=bool)
        res = np.empty(bj.size)
        while True:
            active = ~done & (hi - lo > tol)
            if not active.any():
                break
            mid = 0.5 * (lo + hi)
            fm = _horner_vec(c, mid) - level
            hit = active & (fm == 0.0)
            res[hit] = mid[hit]
            done |= hit
            step = active & ~hit
            same = (fm < 0.0) == (flo < 0.0)
            up = step & same
            lo = np.where(up, mid, lo)
            flo = np.where(up, fm, flo)
            hi = np.where(step & ~same, mid, hi)
        rest = ~done
        res[rest] = 0.5 * (lo[rest] + hi[rest])
        found_lvl.append(bj)
        found_x.append(res)

    left, mid_v, right = V[:, :-2], V[:, 1:-1], V[:, 2:]
    neg = mid_v < 0.0
    cand = (
        (mid_v != 0.0) & (left != 0.0) & (right != 0.0)
        & ((left < 0.0) == neg) & ((right < 0.0) == neg)
        & (np.abs(mid_v) <= np.abs(left)) & (np.abs(mid_v) < np.abs(right))
    )
    tj, ti = np.nonzero(cand)
    if tj.size:
        ti = ti + 1
        level = lv[tj]
        lo = (ti - 1) / m
        hi = (ti + 1) / m
        x1 = hi - _GOLD * (hi - lo)
        x2 = lo + _GOLD * (hi - lo)
        f1 = np.abs(_horner_vec(c, x1) - level)
        f2 = np.abs(_horner_vec(c, x2) - level)
        while True:
            active = hi - lo > tol
            if not active.any():
                break
            left_wins = active & (f1 <= f2)
            right_wins = active & ~(f1 <= f2)
            nhi = np.where(left_wins, x2, hi)
            nlo = np.where(right_wins, x1, lo)
            nx1 = np.where(left_wins, nhi - _GOLD * (nhi - nlo), np.where(right_wins, x2, x1))
            nx2 = np.where(right_wins, nlo + _GOLD * (nhi - nlo), np.where(left_wins, x1, x2))
            nf1 = np.where(right_wins, f2, f1)
            nf2 = np.where(left_wins, f1, f2)
            nf1 = np.where(left_wins, np.abs(_horner_vec(c, nx1) - level), nf1)
            nf2 = np.where(right_wins, np.abs(_horner_vec(c, nx2) - level), nf2)
            lo, hi, x1, x2, f1, f2 = nlo, nhi, nx1, nx2, nf1, nf2
        x = 0.5 * (lo + hi)
        fx = np.abs(_horner_vec(c, x) - level)
        keep = fx < TANGENT_TOL
        found_lvl += [tj[keep], tj[keep]]
        found_x += [x[keep], x[keep]]

    lvl = np.concatenate(found_lvl)
    xs = np.concatenate(found_x)
    order = np.lexsort((xs, lvl))
    lvl, xs = lvl[order], xs[order]
    counts[:] = np.bincount(lvl, minlength=lv.shape[0])
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    slot = np.arange(lvl.size) - starts[lvl]
    fits = slot < out.shape[1]
    out[lvl[fits], slot[fits]] = xs[fits]
    return out, counts


def sweep(coeffs, levels, m=10_000, tol=1e-10):
    """Dispatch to the compiled or the numpy sweep per ``ECNSTAR_PURE_NUMPY``."""
    if _jit.USE_NUMBA:
        return sweep_numba(coeffs, levels, m, tol)
    return sweep_numpy(coeffs, levels, m, tol)
