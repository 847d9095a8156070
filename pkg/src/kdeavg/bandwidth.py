"""Data-driven bandwidth selectors: Silverman's rules and Sheather-Jones.

Selector names follow R's ``bw.*`` family: ``nrd0`` (0.9 rule), ``nrd``
(1.06 rule) and ``sj`` (solve-the-equation plug-in).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from kdeavg import _numeric
from kdeavg.kernel import GAUSSIAN, as_sample, kernel_deriv

MAX_EXPERTS = 8

# normal-reference constants of the solve-the-equation recipe
SJ_PILOT_SD = 0.920
SJ_PILOT_TD = 0.912
SJ_ALPHA = 1.357


class BandwidthError(ValueError):
    """Raised when a selector cannot produce a bandwidth."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


@dataclass(frozen=True)
class ScaleEstimate:
    sd: float
    iqr: float

    @property
    def robust_scale(self) -> float:
        return min(self.sd, self.iqr / 1.34)


def scale_estimate(sample) -> ScaleEstimate:
    """Sample standard deviation (n-1 divisor) and interquartile range.

    Quartiles interpolate linearly between order statistics, quantile p
    sitting at 1-based position ``1 + (n-1) p``.
    """
    x = np.asarray(sample, dtype=float)
    q1, q3 = np.quantile(x, [0.25, 0.75], method="linear")
    return ScaleEstimate(sd=float(np.std(x, ddof=1)), iqr=float(q3 - q1))


def _robust_scale(x: np.ndarray) -> float:
    est = scale_estimate(x)
    lo = est.robust_scale
    if lo > 0:
        return lo
    # same fallback chain as R's bw.nrd0
    for alt in (est.sd, abs(float(x[0])), 1.0):
        if alt > 0:
            return alt
    return 1.0


def bw_silverman(sample, constant: float = 0.9) -> float:
    """Rule-of-thumb bandwidth ``constant * min(sd, iqr/1.34) * n^(-1/5)``."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise BandwidthError("need at least 2 observations for a rule-of-thumb bandwidth")
    if not constant > 0:
        raise BandwidthError(f"rule-of-thumb constant must be positive, got {constant!r}")
    return constant * _robust_scale(x) * x.size ** -0.2


def bw_nrd0(sample) -> float:
    return bw_silverman(sample, 0.9)


def bw_nrd(sample) -> float:
    return bw_silverman(sample, 1.06)


def _psi(x: np.ndarray, scale: float, order: int) -> float:
    """Raw plug-in functional ``n^-2 scale^-(order+1) sum_ij phi^(order)((Xi-Xj)/scale)``.

    Diagonal terms are included.
    """
    n = x.size
    total = n * kernel_deriv(order, 0.0) + 2.0 * _numeric.pair_sum(x, scale, order)
    return total / (n * n * scale ** (order + 1))


class SJEquation:
    """The solve-the-equation fixed point ``h = rhs(h)`` for one sample.

    Pilot estimates at the normal-reference bandwidths ``a`` and ``b`` are
    computed once; each ``rhs`` call costs one pass over the pairs.
    """

    def __init__(self, sample):
        x = as_sample(sample)
        n = x.size
        if n < 4:
            raise BandwidthError("Sheather-Jones needs at least 4 observations")
        if x[0] == x[-1]:
            raise BandwidthError("Sheather-Jones is undefined for an all-equal sample")
        self.sample = x
        self.n = n
        self.scale = _robust_scale(x)
        self.pilot_sd = SJ_PILOT_SD * self.scale * n ** (-1.0 / 7.0)
        self.pilot_td = SJ_PILOT_TD * self.scale * n ** (-1.0 / 9.0)
        sd_a = self.sd(self.pilot_sd)
        td_b = -_psi(x, self.pilot_td, 6)
        if not (sd_a > 0 and td_b > 0):
            raise BandwidthError(
                f"pilot estimates have the wrong sign (SD={sd_a:.6g}, TD={td_b:.6g})"
            )
        self.alpha_const = SJ_ALPHA * (sd_a / td_b) ** (1.0 / 7.0)

    def sd(self, a: float) -> float:
        return _psi(self.sample, a, 4)

    def alpha2(self, h: float) -> float:
        return self.alpha_const * h ** (5.0 / 7.0)

    def rhs(self, h: float) -> float:
        sd = self.sd(self.alpha2(h))
        if not sd > 0:
            raise BandwidthError(f"SD estimate is not positive ({sd:.6g}) at h={h:.6g}")
        k = GAUSSIAN
        return (k.norm_sq / (self.n * k.second_moment**2 * sd)) ** 0.2

    def residual(self, h: float) -> float:
        return h - self.rhs(h)

    def bracket(self) -> tuple[float, float]:
        h0 = bw_silverman(self.sample, 0.9)
        return 0.1 * h0, 10.0 * h0


def _find_sign_change(fn, guess, lo, hi, step=1.05):
    """Grow a geometric bracket around ``guess`` inside ``[lo, hi]``.

    Returns ``(a, b)`` with a sign change of ``fn``, or None.
    """
    guess = min(max(guess, lo), hi)
    f_mid = fn(guess)
    if f_mid == 0.0:
        return guess, guess
    a = b = guess
    # the residual h - rhs(h) increases with h near the root
    upward = f_mid < 0
    while (b < hi) if upward else (a > lo):
        if upward:
            a = b
            b = min(b * step, hi)
            if fn(b) >= 0:
                return a, b
        else:
            b = a
            a = max(a / step, lo)
            if fn(a) <= 0:
                return a, b
        step *= step
    # residual kept one sign across the bracket; scan the other direction
    fa, fb = fn(lo), fn(hi)
    if fa == 0.0 or fb == 0.0 or np.sign(fa) != np.sign(fb):
        return lo, hi
    return None


def bw_sheather_jones(sample, rtol: float = 1e-10) -> float:
    """Sheather-Jones solve-the-equation bandwidth.

    The root of ``h - rhs(h)`` is searched inside ``[0.1, 10]`` times the
    0.9 rule-of-thumb bandwidth. One fixed-point step from that bandwidth
    seeds a narrow bracket, which Brent's method refines to ``rtol``.
    """
    eq = SJEquation(sample)
    lo, hi = eq.bracket()
    found = _find_sign_change(eq.residual, eq.rhs(lo * 10.0), lo, hi)
    if found is None:
        raise BandwidthError(
            f"no sign change of the SJ equation on [{lo:.6g}, {hi:.6g}]", bracket=(lo, hi)
        )
    a, b = found
    if a == b:
        return a
    return brentq(eq.residual, a, b, xtol=1e-14 * lo, rtol=rtol, maxiter=200)


SELECTORS: dict[str, Callable[[np.ndarray], float]] = {
    "nrd0": bw_nrd0,
    "nrd": bw_nrd,
    "sj": bw_sheather_jones,
}
DEFAULT_SELECTORS = ("nrd0", "nrd", "sj")


@dataclass(frozen=True)
class BandwidthSet:
    """Ordered, labelled bandwidths for a family of experts."""

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        entries = tuple((str(label), float(h)) for label, h in self.entries)
        labels = [label for label, _ in entries]
        if len(set(labels)) != len(labels):
            raise ValueError(f"bandwidth labels must be unique: {labels}")
        if len(entries) > MAX_EXPERTS:
            raise ValueError(f"at most {MAX_EXPERTS} bandwidths are supported, got {len(entries)}")
        for label, h in entries:
            if not (h > 0 and math.isfinite(h)):
                raise ValueError(f"bandwidth {label!r} must be positive, got {h!r}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_values(cls, values: Iterable[float], labels: Sequence[str] | None = None):
        values = list(values)
        if labels is None:
            labels = [f"h{i + 1}" for i in range(len(values))]
        return cls(tuple(zip(labels, values)))

    @classmethod
    def select(cls, sample, names: Sequence[str] = DEFAULT_SELECTORS):
        """Run the named selectors on ``sample``."""
        unknown = [nm for nm in names if nm not in SELECTORS]
        if unknown:
            raise ValueError(f"unknown selector(s) {unknown}; choose from {sorted(SELECTORS)}")
        x = as_sample(sample)
        return cls(tuple((nm, SELECTORS[nm](x)) for nm in names))

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.entries]

    @property
    def values(self) -> np.ndarray:
        return np.array([h for _, h in self.entries])

    def __len__(self):
        return len(self.entries)

    def as_dict(self) -> dict[str, float]:
        return dict(self.entries)
