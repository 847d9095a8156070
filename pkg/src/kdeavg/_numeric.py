"""Compiled inner loops for Gaussian pairwise sums and KDE evaluation.

Every loop walks a *sorted* sample and stops once the scaled distance
exceeds ``CUTOFF``: beyond that point ``exp(-u**2 / 2)`` underflows to
exactly 0.0, so truncation never changes a result. Sums use Neumaier
compensation in a fixed order, which keeps them deterministic.
"""

import math

import numpy as np
from numba import njit

CUTOFF = 40.0
TAIL_REL = 1e-20
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@njit(cache=True, inline="always")
def _hermite_gauss(u, order):
    u2 = u * u
    g = INV_SQRT_2PI * math.exp(-0.5 * u2)
    if order == 0:
        return g
    if order == 4:
        return ((u2 - 6.0) * u2 + 3.0) * g
    # order 6
    return (((u2 - 15.0) * u2 + 45.0) * u2 - 15.0) * g


@njit(cache=True)
def pair_sum(xs, scale, order):
    """Sum of phi^(order)((x_j - x_i)/scale) over i < j of sorted ``xs``."""
    n = xs.shape[0]
    inv = 1.0 / scale
    total = 0.0
    comp = 0.0
    for i in range(n - 1):
        xi = xs[i]
        for j in range(i + 1, n):
            u = (xs[j] - xi) * inv
            if u > CUTOFF:
                break
            v = _hermite_gauss(u, order)
            t = total + v
            if abs(total) >= abs(v):
                comp += (total - t) + v
            else:
                comp += (v - t) + total
            total = t
    return total + comp


@njit(cache=True)
def cross_sum(xs, ys, scale):
    """Sum of phi((x_a - y_b)/scale) over all a, b; both inputs sorted."""
    m = ys.shape[0]
    inv = 1.0 / scale
    total = 0.0
    comp = 0.0
    lo = 0
    for a in range(xs.shape[0]):
        xa = xs[a]
        while lo < m and (xa - ys[lo]) * inv > CUTOFF:
            lo += 1
        for b in range(lo, m):
            u = (ys[b] - xa) * inv
            if u > CUTOFF:
                break
            v = _hermite_gauss(u, 0)
            t = total + v
            if abs(total) >= abs(v):
                comp += (total - t) + v
            else:
                comp += (v - t) + total
            total = t
    return total + comp


@njit(cache=True)
def kde_values(xs, h, query):
    """Unnormalised kernel sums sum_i phi((x_i - q)/h) for each query point."""
    n = xs.shape[0]
    out = np.empty(query.shape[0])
    reach = CUTOFF * h
    for k in range(query.shape[0]):
        q = query[k]
        lo = np.searchsorted(xs, q - reach)
        total = 0.0
        comp = 0.0
        for i in range(lo, n):
            u = (xs[i] - q) / h
            if u > CUTOFF:
                break
            v = _hermite_gauss(u, 0)
            t = total + v
            if abs(total) >= abs(v):
                comp += (total - t) + v
            else:
                comp += (v - t) + total
            total = t
        out[k] = total + comp
    return out


@njit(cache=True)
def grid_sum(xs, h, x0, dx, m, weight, out):
    """Add ``weight * sum_i phi((x0 + k dx - x_i)/h)`` to ``out[k]``, k < m.

    On a uniform grid successive Gaussian values obey
    ``g[k+1] = g[k] r[k]`` with ``r[k+1] = r[k] q``, so each point costs two
    multiplications instead of an exponential. Rounding grows like k eps,
    below 1e-11 relative for the grids used in quadrature. A bump is
    dropped once it falls below ``TAIL_REL`` of its peak.
    """
    s = dx / h
    q = math.exp(-s * s)
    floor = abs(weight) * INV_SQRT_2PI * TAIL_REL
    for i in range(xs.shape[0]):
        x = xs[i]
        k0 = int(round((x - x0) / dx))
        if k0 < 0:
            k0 = 0
        elif k0 > m - 1:
            k0 = m - 1
        u = (x0 + k0 * dx - x) / h
        if abs(u) > CUTOFF:
            continue
        # upward from k0
        g = INV_SQRT_2PI * math.exp(-0.5 * u * u) * weight
        r = math.exp(-u * s - 0.5 * s * s)
        for k in range(k0, m):
            out[k] += g
            g *= r
            r *= q
            if abs(g) <= floor:
                break
        # downward from k0 - 1
        if k0 == 0:
            continue
        ud = u - s
        g = INV_SQRT_2PI * math.exp(-0.5 * ud * ud) * weight
        r = math.exp(ud * s - 0.5 * s * s)
        for k in range(k0 - 1, -1, -1):
            out[k] += g
            g *= r
            r *= q
            if abs(g) <= floor:
                break
