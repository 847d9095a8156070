"""Integrated squared error of an estimate against a known density."""

from __future__ import annotations

import numpy as np

from kdeavg import _numeric
from kdeavg.averaging import AveragedEstimator
from kdeavg.kernel import GAUSSIAN, KdeSpec, gram_matrix

ISE_POINTS = 2**13 + 1
WINDOW_PAD = 12.0  # window extension, in units of the largest bandwidth


def _experts_and_weights(estimator):
    if isinstance(estimator, KdeSpec):
        return (estimator,), np.ones(1)
    if isinstance(estimator, AveragedEstimator):
        return estimator.experts, estimator.weights.weights
    raise TypeError(f"expected a KdeSpec or AveragedEstimator, got {type(estimator).__name__}")


def _max_bandwidth(estimator) -> float:
    if isinstance(estimator, KdeSpec):
        return estimator.bandwidth
    if isinstance(estimator, AveragedEstimator):
        return estimator.max_bandwidth
    return 0.0


def ise_grid(estimator, truth, points: int = ISE_POINTS) -> np.ndarray:
    lo, hi = truth.window
    pad = WINDOW_PAD * _max_bandwidth(estimator)
    return np.linspace(lo - pad, hi + pad, points)


def evaluate_on_grid(estimator, x: np.ndarray) -> np.ndarray:
    """Values of an estimate on a uniform grid ``x``.

    Kernel estimates go through the recurrence in ``_numeric.grid_sum``;
    other callables are simply evaluated.
    """
    if not isinstance(estimator, (KdeSpec, AveragedEstimator)):
        return np.asarray(estimator(x), dtype=float)
    experts, weights = _experts_and_weights(estimator)
    m = x.size
    dx = (x[-1] - x[0]) / (m - 1)
    out = np.zeros(m)
    for w, e in zip(weights, experts):
        _numeric.grid_sum(e.sample, e.bandwidth, float(x[0]), dx, m, w / (e.n * e.bandwidth), out)
    return out


def ise(estimator, truth, points: int = ISE_POINTS) -> float:
    """Trapezoid quadrature of ``(fhat - f)^2`` over the truth's window.

    The window is widened by 12 times the largest bandwidth. ``estimator``
    may be any callable; plain callables get no widening.
    """
    x = ise_grid(estimator, truth, points)
    resid = evaluate_on_grid(estimator, x) - truth.pdf(x)
    return float(np.trapezoid(resid * resid, x))


def ise_exact(estimator, truth) -> float:
    """Closed-form ISE of a Gaussian KDE or combination of them.

    ``int fhat^2`` comes from the Gram matrix, ``int fhat f`` from averaging
    the Gaussian-smoothed truth over each expert's sample.
    """
    experts, w = _experts_and_weights(estimator)
    g = gram_matrix(experts)
    b = np.array([np.mean(truth.smoothed_pdf(e.sample, e.bandwidth)) for e in experts])
    return float(w @ g @ w - 2.0 * (w @ b) + truth.l2_norm_sq)


def empirical_sigma(experts, truth) -> np.ndarray:
    """Matrix of integrated cross errors ``int (fhat_i - f)(fhat_j - f)``."""
    experts = tuple(experts)
    base = experts[0].sample
    for e in experts[1:]:
        if not (e.sample is base or np.array_equal(e.sample, base)):
            raise ValueError("empirical_sigma requires experts built on one sample")
    g = gram_matrix(experts)
    b = np.array([np.mean(truth.smoothed_pdf(e.sample, e.bandwidth)) for e in experts])
    sigma = g - b[:, None] - b[None, :] + truth.l2_norm_sq
    return 0.5 * (sigma + sigma.T)


def asymptotic_ise(n: int, h: float, gamma: float, kernel=GAUSSIAN) -> float:
    """Leading terms ``||K||^2 / (n h) + gamma c_K^2 h^4 / 4``."""
    return kernel.norm_sq / (n * h) + gamma * kernel.second_moment**2 * h**4 / 4.0
