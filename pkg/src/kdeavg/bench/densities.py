"""The five benchmark densities with their samplers.

Besides the pdf each density carries its second derivative, the squared L2
norm, and its convolution with a centred Gaussian of scale ``h``. The last
one gives ``int fhat f`` exactly as an average over the sample.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from kdeavg.kernel import SQRT_2PI

INV_2SQRTPI = 1.0 / (2.0 * math.sqrt(math.pi))


@dataclass(frozen=True)
class DensitySpec:
    name: str
    pdf: Callable
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    window: tuple[float, float]
    smoothed_pdf: Callable  # (x, h) -> (phi_h * f)(x)
    l2_norm_sq: float
    second_deriv: Callable | None = None
    support: tuple[float, float] = (-math.inf, math.inf)
    breakpoints: tuple[float, ...] = field(default=())

    def __call__(self, x):
        return self.pdf(np.asarray(x, dtype=float))


def _phi(x, s=1.0):
    return np.exp(-0.5 * (x / s) ** 2) / (SQRT_2PI * s)


def _normal_mixture(p_left: float, shift: float = 1.5):
    """Mixture of N(-shift, 1) with weight p_left and N(shift, 1)."""
    p, q = p_left, 1.0 - p_left

    def pdf(x):
        return p * _phi(x + shift) + q * _phi(x - shift)

    def d2(x):
        return p * ((x + shift) ** 2 - 1) * _phi(x + shift) + q * ((x - shift) ** 2 - 1) * _phi(x - shift)

    def smoothed(x, h):
        s = math.sqrt(1.0 + h * h)
        return p * _phi(x + shift, s) + q * _phi(x - shift, s)

    def sampler(rng, n):
        left = rng.random(n) < p
        z = rng.standard_normal(n)
        return np.where(left, z - shift, z + shift)

    norm_sq = (p * p + q * q) * INV_2SQRTPI + 2 * p * q * float(_phi(2 * shift, math.sqrt(2.0)))
    return pdf, d2, smoothed, sampler, norm_sq


def _norm():
    return DensitySpec(
        name="Norm",
        pdf=lambda x: _phi(x),
        second_deriv=lambda x: (x * x - 1.0) * _phi(x),
        sampler=lambda rng, n: rng.standard_normal(n),
        smoothed_pdf=lambda x, h: _phi(x, math.sqrt(1.0 + h * h)),
        l2_norm_sq=INV_2SQRTPI,
        window=(-8.0, 8.0),
    )


def _gamma_pdf(x):
    x = np.asarray(x, dtype=float)
    xp = np.maximum(x, 0.0)
    return np.where(x > 0, xp * np.exp(-xp), 0.0)


def _gamma_d2(x):
    x = np.asarray(x, dtype=float)
    xp = np.maximum(x, 0.0)
    return np.where(x > 0, (xp - 2.0) * np.exp(-xp), 0.0)


def _gamma_smoothed(x, h):
    # int_0^inf y e^-y phi_h(x - y) dy = e^(h^2/2 - x) h (z Phi(z) + phi(z)), z = (x - h^2)/h
    x = np.asarray(x, dtype=float)
    z = (x - h * h) / h
    log_pre = 0.5 * h * h - x
    term_cdf = z * np.exp(log_pre + special.log_ndtr(z))
    term_pdf = np.exp(log_pre - 0.5 * z * z) / SQRT_2PI
    return np.maximum(h * (term_cdf + term_pdf), 0.0)


def _gamma():
    return DensitySpec(
        name="Gamma",
        pdf=_gamma_pdf,
        second_deriv=_gamma_d2,
        # shape 2 as the sum of two unit exponentials
        sampler=lambda rng, n: rng.standard_exponential((n, 2)).sum(axis=1),
        smoothed_pdf=_gamma_smoothed,
        l2_norm_sq=0.25,
        window=(-2.0, 25.0),
        support=(0.0, math.inf),
    )


def _cauchy():
    return DensitySpec(
        name="Cauchy",
        pdf=lambda x: 1.0 / (math.pi * (1.0 + x * x)),
        second_deriv=lambda x: (6.0 * x * x - 2.0) / (math.pi * (1.0 + x * x) ** 3),
        sampler=lambda rng, n: np.tan(math.pi * (rng.random(n) - 0.5)),
        smoothed_pdf=lambda x, h: special.voigt_profile(x, h, 1.0),
        l2_norm_sq=1.0 / (2.0 * math.pi),
        window=(-250.0, 250.0),
    )


def _mixture(name, p_left):
    pdf, d2, smoothed, sampler, norm_sq = _normal_mixture(p_left)
    return DensitySpec(
        name=name,
        pdf=pdf,
        second_deriv=d2,
        sampler=sampler,
        smoothed_pdf=smoothed,
        l2_norm_sq=norm_sq,
        window=(-10.0, 10.0),
    )


DENSITIES: dict[str, DensitySpec] = {
    d.name: d
    for d in (_norm(), _gamma(), _cauchy(), _mixture("Mix05", 0.5), _mixture("Mix03", 0.7))
}


def get_density(name: str) -> DensitySpec:
    try:
        return DENSITIES[name]
    except KeyError:
        raise ValueError(f"unknown density {name!r}; choose from {list(DENSITIES)}") from None


def replication_rng(seed: int, density: str, n: int, replication: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, density, n, replication).

    Replication r draws the same stream whatever the execution order.
    """
    key = np.random.SeedSequence([seed, zlib.crc32(density.encode()), n, replication])
    return np.random.Generator(np.random.Philox(key))


def sample_density(density: DensitySpec | str, n: int, seed) -> np.ndarray:
    """Draw ``n`` iid observations; ``seed`` is an int or a Generator."""
    if isinstance(density, str):
        density = get_density(density)
    if n < 1:
        raise ValueError(f"sample size must be at least 1, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.Generator(np.random.Philox(seed))
    return np.asarray(density.sampler(rng, int(n)), dtype=float)

