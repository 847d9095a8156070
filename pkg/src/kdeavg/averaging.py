"""Combine kernel estimates with weights from an error-matrix model.

For k experts with bandwidths ``h`` on a sample of size ``n`` the matrix of
integrated cross errors is modelled as ``sigma = A + gamma * B`` with

    A_ij = [n sqrt(2 pi (h_i^2 + h_j^2))]^-1,   B = v v^T,  v_i = c_K h_i^2 / 2,

and ``gamma`` replaced by a plug-in estimate. Weights minimise
``w^T sigma w`` subject to ``sum(w) = 1`` (linear) and optionally ``w >= 0``
(convex).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from kdeavg.bandwidth import DEFAULT_SELECTORS, MAX_EXPERTS, BandwidthSet
from kdeavg.curvature import DegenerateCurvatureError, estimate_gamma, normal_reference_gamma
from kdeavg.kernel import GAUSSIAN, KdeSpec, as_sample

MAX_CONDITION = 1e12
WEIGHT_TOL = 1e-12


class SingularSigmaError(np.linalg.LinAlgError):
    """The error matrix is singular or too ill-conditioned to solve."""

    def __init__(self, message, condition=math.inf):
        super().__init__(message)
        self.condition = condition


def _bandwidth_array(bandwidths) -> np.ndarray:
    if isinstance(bandwidths, BandwidthSet):
        return bandwidths.values
    h = np.asarray(bandwidths, dtype=float).ravel()
    if np.any(~(h > 0)):
        raise ValueError("bandwidths must be positive")
    return h


def build_A(n: int, bandwidths) -> np.ndarray:
    """Variance part of the error model, ``[n sqrt(2 pi (h_i^2 + h_j^2))]^-1``.

    Equals ``(n h_i h_j)^-1 int K(u/h_i) K(u/h_j) du`` for the Gaussian
    kernel; the diagonal is ``||K||^2 / (n h)``.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    h = _bandwidth_array(bandwidths)
    s2 = h[:, None] ** 2 + h[None, :] ** 2
    return 1.0 / (n * np.sqrt(2.0 * math.pi * s2))


def build_B(bandwidths) -> np.ndarray:
    """Squared-bias part per unit curvature, the outer product of ``c_K h^2 / 2``."""
    v = GAUSSIAN.second_moment * _bandwidth_array(bandwidths) ** 2 / 2.0
    return np.outer(v, v)


def condition_number(sigma: np.ndarray) -> float:
    """2-norm condition number of a symmetric matrix from its eigenvalues."""
    eig = np.abs(np.linalg.eigvalsh(sigma))
    lo = eig.min()
    return math.inf if lo == 0 else float(eig.max() / lo)


@dataclass(frozen=True)
class SigmaModel:
    A: np.ndarray
    B: np.ndarray
    gamma_hat: float
    sigma: np.ndarray
    condition_estimate: float


def build_sigma(n: int, bandwidths, gamma_hat: float) -> SigmaModel:
    A = build_A(n, bandwidths)
    B = build_B(bandwidths)
    sigma = A + gamma_hat * B
    return SigmaModel(A, B, float(gamma_hat), sigma, condition_number(sigma))


@dataclass(frozen=True)
class WeightVector:
    """Combination weights; ``constraint`` is "linear", "convex" or "free"."""

    weights: np.ndarray
    constraint: str = "linear"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if self.constraint not in ("linear", "convex", "free"):
            raise ValueError(f"unknown constraint {self.constraint!r}")
        if self.constraint != "free" and abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        if self.constraint == "convex" and np.any(w < -WEIGHT_TOL):
            raise ValueError("convex weights must be non-negative")
        object.__setattr__(self, "weights", w)

    @property
    def convex(self) -> bool:
        return self.constraint == "convex"

    def __len__(self):
        return self.weights.size

    def __iter__(self):
        return iter(self.weights)


def _check_square(sigma) -> np.ndarray:
    s = np.asarray(sigma, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {s.shape}")
    if not np.allclose(s, s.T, rtol=1e-12, atol=0.0):
        raise ValueError("matrix must be symmetric")
    return s


def solve_weights_linear(sigma, max_condition: float = MAX_CONDITION) -> WeightVector:
    """Minimise ``w^T sigma w`` subject to ``sum(w) = 1``.

    The solution ``sigma^-1 1 / (1^T sigma^-1 1)`` comes from a symmetric
    (Bunch-Kaufman) solve; no inverse is formed.
    """
    s = _check_square(sigma)
    cond = condition_number(s)
    if not cond <= max_condition:
        raise SingularSigmaError(f"error matrix is ill-conditioned (condition {cond:.3g})", cond)
    w = scipy.linalg.solve(s, np.ones(s.shape[0]), assume_a="sym")
    return WeightVector(w / w.sum(), "linear")


def simplex_qp(Q, c=None) -> np.ndarray:
    """Exact minimiser of ``w^T Q w - c^T w`` over the probability simplex.

    Every non-empty support set is tried: the equality-constrained problem
    on the support gives a candidate, which is kept if it is feasible and
    satisfies the KKT sign conditions off the support. Ties within 1e-14
    (relative) go to the larger support, then the lexicographically first.
    """
    Q = _check_square(Q)
    k = Q.shape[0]
    if k > MAX_EXPERTS:
        raise ValueError(f"support enumeration is limited to {MAX_EXPERTS} experts, got {k}")
    c = np.zeros(k) if c is None else np.asarray(c, dtype=float).ravel()
    # work on a unit-scale copy so the conditioning test of the KKT systems
    # does not depend on the units of Q; the minimiser is unchanged
    scale = max(np.abs(Q).max(), np.abs(c).max(), np.finfo(float).tiny)
    Q, c = Q / scale, c / scale

    feasible, kkt = [], []
    for size in range(1, k + 1):
        for support in itertools.combinations(range(k), size):
            idx = list(support)
            m = np.zeros((size + 1, size + 1))
            m[:size, :size] = 2.0 * Q[np.ix_(idx, idx)]
            m[:size, size] = -1.0
            m[size, :size] = 1.0
            rhs = np.append(c[idx], 1.0)
            if np.linalg.cond(m) > MAX_CONDITION:
                continue
            sol = np.linalg.solve(m, rhs)
            w_s, nu = sol[:size], sol[size]
            if np.any(w_s < -WEIGHT_TOL):
                continue
            w = np.zeros(k)
            w[idx] = np.clip(w_s, 0.0, None)
            w /= w.sum()
            obj = float(w @ Q @ w - c @ w)
            cand = (obj, support, w)
            feasible.append(cand)
            slack = 2.0 * (Q @ w) - c - nu
            off = [i for i in range(k) if i not in support]
            if np.all(slack[off] >= -1e-9):
                kkt.append(cand)

    pool = kkt or feasible
    if not pool:
        raise SingularSigmaError("no feasible support set for the simplex problem")
    best = pool[0]
    for cand in pool[1:]:
        tol = 1e-14 * max(abs(cand[0]), abs(best[0]))
        if cand[0] < best[0] - tol:
            best = cand
        elif abs(cand[0] - best[0]) <= tol and len(cand[1]) > len(best[1]):
            best = cand
    return best[2]


def solve_weights_convex(sigma) -> WeightVector:
    """Minimise ``w^T sigma w`` over the probability simplex."""
    return WeightVector(simplex_qp(sigma), "convex")


@dataclass(frozen=True, eq=False)
class AveragedEstimator:
    """A weighted combination of kernel density estimates."""

    experts: tuple[KdeSpec, ...]
    weights: WeightVector
    sigma_model: SigmaModel | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "experts", tuple(self.experts))
        if len(self.experts) != len(self.weights):
            raise ValueError("one weight per expert is required")

    @property
    def max_bandwidth(self) -> float:
        return max(e.bandwidth for e in self.experts)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for w, expert in zip(self.weights, self.experts):
            out = out + w * expert(x)
        return out if out.ndim else float(out)


def curvature_with_fallback(sample) -> tuple[float, float | None, bool]:
    """Return ``(gamma_hat, pilot, degenerate)``.

    A non-positive plug-in estimate is replaced by the normal-reference
    curvature at the sample's robust scale, with ``degenerate`` set.
    """
    try:
        est = estimate_gamma(sample)
    except DegenerateCurvatureError as err:
        return normal_reference_gamma(sample), err.pilot_bandwidth, True
    return est.gamma_hat, est.pilot_bandwidth, False


def average_estimator(
    sample,
    bandwidths: BandwidthSet | Sequence[str] | None = None,
    mode: str = "linear",
    *,
    gamma_sample=None,
) -> AveragedEstimator:
    """Fit the averaged kernel estimator on ``sample``.

    ``bandwidths`` is a BandwidthSet or a list of selector names (default
    nrd0, nrd, sj). ``gamma_sample`` lets the curvature be estimated from
    other data, as in the split variant.
    """
    if mode not in ("linear", "convex"):
        raise ValueError(f"mode must be 'linear' or 'convex', got {mode!r}")
    x = as_sample(sample)
    if x.size < 4:
        raise ValueError("averaging needs at least 4 observations")
    if bandwidths is None:
        bandwidths = DEFAULT_SELECTORS
    if not isinstance(bandwidths, BandwidthSet):
        bandwidths = BandwidthSet.select(x, list(bandwidths))
    k = len(bandwidths)
    if not 2 <= k <= MAX_EXPERTS:
        raise ValueError(f"averaging needs between 2 and {MAX_EXPERTS} bandwidths, got {k}")

    gamma_hat, pilot, degenerate = curvature_with_fallback(x if gamma_sample is None else gamma_sample)
    model = build_sigma(x.size, bandwidths, gamma_hat)
    if mode == "linear":
        weights = solve_weights_linear(model.sigma)
    else:
        if not model.condition_estimate <= MAX_CONDITION:
            raise SingularSigmaError(
                f"error matrix is ill-conditioned (condition {model.condition_estimate:.3g})",
                model.condition_estimate,
            )
        weights = solve_weights_convex(model.sigma)
    experts = tuple(KdeSpec(x, h, label=label) for label, h in bandwidths.entries)
    diagnostics = {
        "n": int(x.size),
        "mode": mode,
        "bandwidths": bandwidths.as_dict(),
        "gamma_hat": gamma_hat,
        "pilot_bandwidth": pilot,
        "gamma_degenerate": degenerate,
        "condition_estimate": model.condition_estimate,
        "weights": dict(zip(bandwidths.labels, weights.weights.tolist())),
    }
    return AveragedEstimator(experts, weights, model, diagnostics)
