"""Gaussian kernel, kernel density estimates and their exact inner products."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from kdeavg import _numeric

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianKernel:
    """Standard normal kernel with its two moment constants.

    ``norm_sq`` is the integral of K**2 and ``second_moment`` is c_K, the
    integral of u**2 K(u).
    """

    norm_sq: float = 1.0 / (2.0 * math.sqrt(math.pi))
    second_moment: float = 1.0

    def __call__(self, u):
        return kernel_eval(u)

    def deriv(self, order: int, u):
        return kernel_deriv(order, u)


GAUSSIAN = GaussianKernel()


def kernel_eval(u):
    """Standard normal density, elementwise."""
    u = np.asarray(u, dtype=float)
    out = np.exp(-0.5 * u * u) / SQRT_2PI
    return out if out.ndim else float(out)


def kernel_deriv(order: int, u):
    """Fourth or sixth derivative of the standard normal density.

    Uses the closed forms ``He_4(u) phi(u)`` and ``He_6(u) phi(u)`` with the
    probabilists' Hermite polynomials.
    """
    u = np.asarray(u, dtype=float)
    u2 = u * u
    phi = np.exp(-0.5 * u2) / SQRT_2PI
    if order == 4:
        out = ((u2 - 6.0) * u2 + 3.0) * phi
    elif order == 6:
        out = (((u2 - 15.0) * u2 + 45.0) * u2 - 15.0) * phi
    else:
        raise ValueError(f"unsupported derivative order {order!r}; expected 4 or 6")
    return out if out.ndim else float(out)


def as_sample(data) -> np.ndarray:
    """Return the observations as a sorted, contiguous float64 array."""
    x = np.asarray(data, dtype=np.float64).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    return np.ascontiguousarray(np.sort(x))


@dataclass(frozen=True, eq=False)
class KdeSpec:
    """A Gaussian kernel density estimate: a sample and a bandwidth.

    The sample is stored sorted; the estimate does not depend on order.
    """

    sample: np.ndarray
    bandwidth: float
    label: str = field(default="", compare=False)

    def __post_init__(self):
        x = as_sample(self.sample)
        if x.size < 1:
            raise ValueError("a KDE needs at least one observation")
        h = float(self.bandwidth)
        if not (h > 0.0 and math.isfinite(h)):
            raise ValueError(f"bandwidth must be positive and finite, got {self.bandwidth!r}")
        x.setflags(write=False)
        object.__setattr__(self, "sample", x)
        object.__setattr__(self, "bandwidth", h)

    @property
    def n(self) -> int:
        return self.sample.size

    def __call__(self, x):
        return kde_eval(self, x)


def kde_eval(spec: KdeSpec, x):
    """Evaluate ``(n h)^-1 sum_i K((X_i - x) / h)`` at one point or an array."""
    q = np.asarray(x, dtype=np.float64)
    flat = np.ascontiguousarray(q.ravel())
    vals = _numeric.kde_values(spec.sample, spec.bandwidth, flat)
    vals = vals / (spec.n * spec.bandwidth)
    if q.ndim == 0:
        return float(vals[0])
    return vals.reshape(q.shape)


def _same_sample(a: np.ndarray, b: np.ndarray) -> bool:
    return a is b or (a.shape == b.shape and np.array_equal(a, b))


def gram_inner(spec_i: KdeSpec, spec_j: KdeSpec) -> float:
    """Exact integral of the product of two KDEs built on the same sample.

    The convolution of two centred Gaussians with scales ``h_i`` and ``h_j``
    is a Gaussian with scale ``sqrt(h_i**2 + h_j**2)``, so the integral is a
    double sum over pairs of observations.
    """
    if not _same_sample(spec_i.sample, spec_j.sample):
        raise ValueError("gram_inner requires both estimates to share one sample")
    return cross_inner(spec_i, spec_j)


def cross_inner(spec_a: KdeSpec, spec_b: KdeSpec) -> float:
    """Exact integral of the product of two KDEs, samples may differ."""
    s = math.hypot(spec_a.bandwidth, spec_b.bandwidth)
    if _same_sample(spec_a.sample, spec_b.sample):
        x = spec_a.sample
        n = x.size
        total = n * _numeric.INV_SQRT_2PI + 2.0 * _numeric.pair_sum(x, s, 0)
        return total / (n * n * s)
    total = _numeric.cross_sum(spec_a.sample, spec_b.sample, s)
    return total / (spec_a.n * spec_b.n * s)


def gram_matrix(specs: Sequence[KdeSpec]) -> np.ndarray:
    """Matrix of pairwise ``cross_inner`` values; symmetric by construction."""
    k = len(specs)
    g = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            g[i, j] = g[j, i] = cross_inner(specs[i], specs[j])
    return g
