"""Pure-Python phase-error bound search (fallback for the compiled kernel).

For one loss split ``l1`` (so ``l0 = loss - l1``) the feasible ``x`` lie in
``[x_lo, x_hi]`` and must satisfy ``f(x) >= c``. ``f`` is concave there, so
the largest feasible ``x`` is found by a ternary search for the maximizer
followed by bisection towards ``x_hi``. The outer search over ``l1`` is a
uniform grid plus golden-section refinement around the best grid point.

``f`` is evaluated through the distances ``t = x - x_lo`` and
``r = x_hi - x`` so the radicands ``t (t + 2|d1|)`` and ``r (r + 2|d0|)``
cannot go negative through cancellation at the domain edges.
"""

from __future__ import annotations

import math

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _domain(l1, a2, b2, delta, loss):
    l0 = loss - l1
    L0 = a2 * l1 + b2 * l0
    L1 = a2 * l0 + b2 * l1
    ad1 = np.abs(-delta + L1 / (a2 - b2))
    ad0 = np.abs(b2 - a2 - delta + L0 / (a2 - b2))
    return L1 + ad1, 1.0 - L0 - ad0, ad1, ad0


def _f(x, x_lo, x_hi, ad1, ad0):
    t = np.maximum(x - x_lo, 0.0)
    r = np.maximum(x_hi - x, 0.0)
    return np.sqrt(t * (t + 2.0 * ad1)) + np.sqrt(r * (r + 2.0 * ad0))


def solve_splits(l1, a2, b2, c, delta, loss, slack=1e-12, x_tol=1e-12):
    """Largest feasible ``x`` for each split in the array ``l1`` (``-inf`` if none)."""
    l1 = np.atleast_1d(np.asarray(l1, dtype=float))
    x_lo, x_hi, ad1, ad0 = _domain(l1, a2, b2, delta, loss)
    gap = x_lo - x_hi
    valid = gap <= 1e-13
    x_hi = np.where(gap > 0, x_lo, x_hi)
    out = np.full(l1.shape, -np.inf)

    at_top = valid & (_f(x_hi, x_lo, x_hi, ad1, ad0) >= c)
    out[at_top] = x_hi[at_top]
    todo = valid & ~at_top
    if not np.any(todo):
        return out

    xl, xh, a1, a0 = x_lo[todo], x_hi[todo], ad1[todo], ad0[todo]
    lo, hi = xl.copy(), xh.copy()
    while np.any(hi - lo > x_tol):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        go_right = _f(m1, xl, xh, a1, a0) < _f(m2, xl, xh, a1, a0)
        active = hi - lo > x_tol
        lo = np.where(active & go_right, m1, lo)
        hi = np.where(active & ~go_right, m2, hi)
    xm = 0.5 * (lo + hi)
    fm = _f(xm, xl, xh, a1, a0)
    # a maximum on the lower edge is only resolved to x_tol by the search
    f_edge = _f(xl, xl, xh, a1, a0)
    xm = np.where(f_edge > fm, xl, xm)
    fm = np.maximum(f_edge, fm)
    ok = fm >= c - slack
    tangent = ok & (fm < c)

    lo, hi = xm.copy(), xh.copy()
    while np.any(hi - lo > x_tol):
        mid = 0.5 * (lo + hi)
        above = _f(mid, xl, xh, a1, a0) >= c
        active = hi - lo > x_tol
        lo = np.where(active & above, mid, lo)
        hi = np.where(active & ~above, mid, hi)
    res = np.where(ok, np.where(tangent, xm, lo), -np.inf)
    out[todo] = res
    return out


def split_x(l1, a2, b2, c, delta, loss, slack=1e-12, x_tol=1e-12):
    """Scalar version of :func:`solve_splits`."""
    l0 = loss - l1
    L0 = a2 * l1 + b2 * l0
    L1 = a2 * l0 + b2 * l1
    ad1 = abs(-delta + L1 / (a2 - b2))
    ad0 = abs(b2 - a2 - delta + L0 / (a2 - b2))
    x_lo = L1 + ad1
    x_hi = 1.0 - L0 - ad0
    if x_lo > x_hi:
        if x_lo - x_hi > 1e-13:
            return -math.inf
        x_hi = x_lo

    def f(x):
        t = max(x - x_lo, 0.0)
        r = max(x_hi - x, 0.0)
        return math.sqrt(t * (t + 2.0 * ad1)) + math.sqrt(r * (r + 2.0 * ad0))

    if f(x_hi) >= c:
        return x_hi
    lo, hi = x_lo, x_hi
    while hi - lo > x_tol:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if f(m1) < f(m2):
            lo = m1
        else:
            hi = m2
    xm = 0.5 * (lo + hi)
    fm = f(xm)
    # a maximum on the lower edge is only resolved to x_tol by the search
    if f(x_lo) > fm:
        xm, fm = x_lo, f(x_lo)
    if fm < c - slack:
        return -math.inf
    if fm < c:
        # tangent within roundoff: the maximizer is the only feasible point
        return xm
    lo, hi = xm, x_hi
    while hi - lo > x_tol:
        mid = 0.5 * (lo + hi)
        if f(mid) >= c:
            lo = mid
        else:
            hi = mid
    return lo


def max_x_over_splits(a2, b2, c, delta, loss, n_grid=2001, slack=1e-12, x_tol=1e-12, l1_rel_tol=1e-10):
    l1_min = max(0.0, loss - b2)
    l1_max = max(min(loss, a2), l1_min)
    width = l1_max - l1_min
    if width <= 0.0 or n_grid < 2:
        return split_x(l1_min, a2, b2, c, delta, loss, slack, x_tol), l1_min

    def g(l1):
        return split_x(l1, a2, b2, c, delta, loss, slack, x_tol)

    step = width / (n_grid - 1)
    grid = l1_min + step * np.arange(n_grid)
    grid[-1] = l1_max
    vals = solve_splits(grid, a2, b2, c, delta, loss, slack, x_tol)
    k = int(np.argmax(vals))
    best, best_l1 = float(vals[k]), float(grid[k])
    if best == -math.inf:
        return best, best_l1

    lo = max(l1_min, l1_min + (k - 1) * step)
    hi = min(l1_max, l1_min + (k + 1) * step)
    p = hi - GOLDEN * (hi - lo)
    q = lo + GOLDEN * (hi - lo)
    fp, fq = g(p), g(q)
    while hi - lo > l1_rel_tol * width:
        if fp < fq:
            lo, p, fp = p, q, fq
            q = lo + GOLDEN * (hi - lo)
            fq = g(q)
        else:
            hi, q, fq = q, p, fp
            p = hi - GOLDEN * (hi - lo)
            fp = g(p)
    if fp > best:
        best, best_l1 = fp, p
    if fq > best:
        best, best_l1 = fq, q
    return best, best_l1
