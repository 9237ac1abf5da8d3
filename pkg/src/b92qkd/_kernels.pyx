# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled phase-error bound search.

Same algorithm as :mod:`b92qkd._kernels_py`; see that module for the
description of the arguments.
"""

from libc.math cimport sqrt, fabs, fmax, fmin, INFINITY

cdef double GOLDEN = 0.6180339887498949


cdef inline double f_offset(double x, double x_lo, double x_hi, double ad1, double ad0) nogil:
    cdef double t = x - x_lo
    cdef double r = x_hi - x
    if t < 0.0:
        t = 0.0
    if r < 0.0:
        r = 0.0
    return sqrt(t * (t + 2.0 * ad1)) + sqrt(r * (r + 2.0 * ad0))


cdef double solve_split(double l1, double a2, double b2, double c, double delta, double loss,
                        double slack, double x_tol) nogil:
    """Largest feasible x for one loss split, or -inf."""
    cdef double l0 = loss - l1
    cdef double L0 = a2 * l1 + b2 * l0
    cdef double L1 = a2 * l0 + b2 * l1
    cdef double ad1 = fabs(-delta + L1 / (a2 - b2))
    cdef double ad0 = fabs(b2 - a2 - delta + L0 / (a2 - b2))
    cdef double x_lo = L1 + ad1
    cdef double x_hi = 1.0 - L0 - ad0
    cdef double lo, hi, m1, m2, xm, fm, f_edge
    if x_lo > x_hi:
        if x_lo - x_hi > 1e-13:
            return -INFINITY
        x_hi = x_lo
    if f_offset(x_hi, x_lo, x_hi, ad1, ad0) >= c:
        return x_hi
    lo = x_lo
    hi = x_hi
    while hi - lo > x_tol:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if f_offset(m1, x_lo, x_hi, ad1, ad0) < f_offset(m2, x_lo, x_hi, ad1, ad0):
            lo = m1
        else:
            hi = m2
    xm = 0.5 * (lo + hi)
    fm = f_offset(xm, x_lo, x_hi, ad1, ad0)
    # a maximum on the lower edge is only resolved to x_tol by the search
    f_edge = f_offset(x_lo, x_lo, x_hi, ad1, ad0)
    if f_edge > fm:
        xm = x_lo
        fm = f_edge
    if fm < c - slack:
        return -INFINITY
    if fm < c:
        # tangent within roundoff: the maximizer is the only feasible point
        return xm
    lo = xm
    hi = x_hi
    while hi - lo > x_tol:
        m1 = 0.5 * (lo + hi)
        if f_offset(m1, x_lo, x_hi, ad1, ad0) >= c:
            lo = m1
        else:
            hi = m1
    return lo


def split_x(double l1, double a2, double b2, double c, double delta, double loss,
            double slack=1e-12, double x_tol=1e-12):
    return solve_split(l1, a2, b2, c, delta, loss, slack, x_tol)


def max_x_over_splits(double a2, double b2, double c, double delta, double loss,
                      int n_grid=2001, double slack=1e-12, double x_tol=1e-12,
                      double l1_rel_tol=1e-10):
    """Maximize the largest feasible x over the loss split ``l1``.

    Returns ``(x_best, l1_best)``; ``x_best`` is ``-inf`` when no split is
    feasible.
    """
    cdef double l1_min = fmax(0.0, loss - b2)
    cdef double l1_max = fmin(loss, a2)
    cdef double width, step, l1, val, best = -INFINITY, best_l1 = l1_min
    cdef double lo, hi, p, q, fp, fq
    cdef int i, k = 0
    if l1_max < l1_min:
        l1_max = l1_min
    width = l1_max - l1_min
    if width <= 0.0 or n_grid < 2:
        best = solve_split(l1_min, a2, b2, c, delta, loss, slack, x_tol)
        return best, l1_min
    step = width / (n_grid - 1)
    with nogil:
        for i in range(n_grid):
            l1 = l1_min + i * step
            if i == n_grid - 1:
                l1 = l1_max
            val = solve_split(l1, a2, b2, c, delta, loss, slack, x_tol)
            if val > best:
                best = val
                best_l1 = l1
                k = i
        if best > -INFINITY:
            lo = fmax(l1_min, l1_min + (k - 1) * step)
            hi = fmin(l1_max, l1_min + (k + 1) * step)
            p = hi - GOLDEN * (hi - lo)
            q = lo + GOLDEN * (hi - lo)
            fp = solve_split(p, a2, b2, c, delta, loss, slack, x_tol)
            fq = solve_split(q, a2, b2, c, delta, loss, slack, x_tol)
            while hi - lo > l1_rel_tol * fmax(width, 1e-300):
                if fp < fq:
                    lo = p
                    p = q
                    fp = fq
                    q = lo + GOLDEN * (hi - lo)
                    fq = solve_split(q, a2, b2, c, delta, loss, slack, x_tol)
                else:
                    hi = q
                    q = p
                    fq = fp
                    p = hi - GOLDEN * (hi - lo)
                    fp = solve_split(p, a2, b2, c, delta, loss, slack, x_tol)
            if fp > best:
                best = fp
                best_l1 = p
            if fq > best:
                best = fq
                best_l1 = q
    return best, best_l1
