"""Aggregation baselines that split the sample into training and validation.

``rt_aggregate`` minimises the empirical quadratic risk of Rigollet and
Tsybakov on the validation half; ``av_split`` applies the error-matrix
weights with the curvature taken from the validation half. Both average the
aggregates obtained over several random splits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from kdeavg.averaging import (
    MAX_CONDITION,
    AveragedEstimator,
    SingularSigmaError,
    WeightVector,
    build_sigma,
    condition_number,
    curvature_with_fallback,
    simplex_qp,
    solve_weights_linear,
)
from kdeavg.bandwidth import DEFAULT_SELECTORS, BandwidthSet
from kdeavg.kernel import KdeSpec, as_sample, gram_matrix


@dataclass(frozen=True)
class SplitScheme:
    num_splits: int = 10
    fraction_train: float = 0.5

    def __post_init__(self):
        if self.num_splits < 1:
            raise ValueError("num_splits must be at least 1")
        if not 0.0 < self.fraction_train < 1.0:
            raise ValueError("fraction_train must lie strictly between 0 and 1")

    def train_size(self, n: int) -> int:
        return math.ceil(self.fraction_train * n)


@dataclass(frozen=True)
class SplitFit:
    """Training experts and validation data of one split."""

    train: np.ndarray
    valid: np.ndarray
    bandwidths: BandwidthSet

    def experts(self) -> tuple[KdeSpec, ...]:
        return tuple(KdeSpec(self.train, h, label=label) for label, h in self.bandwidths.entries)

    @cached_property
    def risk_terms(self) -> tuple[np.ndarray, np.ndarray]:
        """Gram matrix of the training experts and twice their validation means."""
        experts = self.experts()
        g = gram_matrix(experts)
        b = np.array([2.0 * np.mean(e(self.valid)) for e in experts])
        return g, b


def prepare_splits(
    sample, selectors: Sequence[str] = DEFAULT_SELECTORS, scheme: SplitScheme = SplitScheme(), seed=0
) -> list[SplitFit]:
    """Draw the random splits and select bandwidths on each training part.

    The same ``seed`` always yields the same partitions, so several split
    methods can share one preparation.
    """
    x = np.asarray(sample, dtype=float).ravel()
    n = x.size
    if n < 8:
        raise ValueError("split aggregation needs at least 8 observations")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.Generator(np.random.Philox(seed))
    n_tr = scheme.train_size(n)
    fits = []
    for _ in range(scheme.num_splits):
        perm = rng.permutation(n)
        train = as_sample(x[perm[:n_tr]])
        valid = as_sample(x[perm[n_tr:]])
        fits.append(SplitFit(train, valid, BandwidthSet.select(train, selectors)))
    return fits


def _flatten(per_split, constraint, diagnostics) -> AveragedEstimator:
    s = len(per_split)
    experts = [e for exps, _ in per_split for e in exps]
    weights = np.concatenate([w for _, w in per_split]) / s
    if constraint != "free":
        weights = weights / weights.sum()
    return AveragedEstimator(tuple(experts), WeightVector(weights, constraint), None, diagnostics)


def rt_weights(fit: SplitFit, mode: str) -> np.ndarray:
    """Minimise ``w^T G w - w^T b`` for one split.

    ``G`` is the Gram matrix of the training experts and ``b_i`` is twice
    the mean of expert i over the validation points.
    """
    g, b = fit.risk_terms
    if mode == "linear":
        cond = condition_number(g)
        if not cond <= MAX_CONDITION:
            raise SingularSigmaError(f"Gram matrix is ill-conditioned (condition {cond:.3g})", cond)
        return np.linalg.solve(2.0 * g, b)
    return simplex_qp(g, b)


def rt_aggregate(
    sample,
    bandwidths: Sequence[str] = DEFAULT_SELECTORS,
    mode: str = "linear",
    scheme: SplitScheme = SplitScheme(),
    seed=0,
    *,
    splits: list[SplitFit] | None = None,
) -> AveragedEstimator:
    """Linear (unconstrained) or convex quadratic-risk aggregation over splits."""
    if mode not in ("linear", "convex"):
        raise ValueError(f"mode must be 'linear' or 'convex', got {mode!r}")
    if splits is None:
        splits = prepare_splits(sample, bandwidths, scheme, seed)
    per_split = [(fit.experts(), rt_weights(fit, mode)) for fit in splits]
    diagnostics = {"split_weights": [w.tolist() for _, w in per_split]}
    return _flatten(per_split, "free" if mode == "linear" else "convex", diagnostics)


def av_split(
    sample,
    bandwidths: Sequence[str] = DEFAULT_SELECTORS,
    scheme: SplitScheme = SplitScheme(),
    seed=0,
    *,
    splits: list[SplitFit] | None = None,
) -> AveragedEstimator:
    """Error-matrix averaging with experts on the training part of each split
    and the curvature estimated on the validation part."""
    if splits is None:
        splits = prepare_splits(sample, bandwidths, scheme, seed)
    per_split, gammas, flags = [], [], []
    for fit in splits:
        gamma_hat, _, degenerate = curvature_with_fallback(fit.valid)
        model = build_sigma(fit.train.size, fit.bandwidths, gamma_hat)
        w = solve_weights_linear(model.sigma).weights
        per_split.append((fit.experts(), w))
        gammas.append(gamma_hat)
        flags.append(degenerate)
    diagnostics = {
        "split_weights": [w.tolist() for _, w in per_split],
        "gamma_hat": gammas,
        "gamma_degenerate": any(flags),
    }
    return _flatten(per_split, "linear", diagnostics)
