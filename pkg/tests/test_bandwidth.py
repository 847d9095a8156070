import math

import numba
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kdeavg.bandwidth import (
    MAX_EXPERTS,
    SELECTORS,
    BandwidthError,
    BandwidthSet,
    SJEquation,
    bw_nrd,
    bw_nrd0,
    bw_sheather_jones,
    bw_silverman,
    scale_estimate,
)

ONE_TO_TEN = np.arange(1.0, 11.0)


def _hand_silverman(x, constant):
    # textbook evaluation, independent of the package code path
    x = sorted(x)
    n = len(x)
    mean = sum(x) / n
    sd = math.sqrt(sum((v - mean) ** 2 for v in x) / (n - 1))

    def q(p):
        pos = (n - 1) * p
        lo = math.floor(pos)
        return x[lo] + (pos - lo) * (x[min(lo + 1, n - 1)] - x[lo])

    return constant * min(sd, (q(0.75) - q(0.25)) / 1.34) * n ** -0.2


def test_scale_estimate_one_to_ten():
    est = scale_estimate(ONE_TO_TEN)
    assert est.sd == pytest.approx(3.0276503540974917, rel=1e-15)
    assert est.iqr == 4.5


@pytest.mark.parametrize("constant, expected", [(0.9, 1.719286404692283), (1.06, 2.0249373210820227)])
def test_silverman_one_to_ten(constant, expected):
    # frozen values of the hand formula; they agree with the rounded
    # reference values 1.71949 / 2.02518 only to about 1e-4
    assert bw_silverman(ONE_TO_TEN, constant) == pytest.approx(expected, rel=1e-14)
    assert bw_silverman(ONE_TO_TEN, constant) == pytest.approx(_hand_silverman(ONE_TO_TEN, constant), rel=1e-14)
    assert bw_silverman(ONE_TO_TEN, constant) == pytest.approx(
        {0.9: 1.71949, 1.06: 2.02518}[constant], rel=2e-4
    )


def test_named_rules():
    assert bw_nrd0(ONE_TO_TEN) == bw_silverman(ONE_TO_TEN, 0.9)
    assert bw_nrd(ONE_TO_TEN) == bw_silverman(ONE_TO_TEN, 1.06)


def test_silverman_errors():
    with pytest.raises(BandwidthError):
        bw_silverman([1.0], 0.9)
    with pytest.raises(BandwidthError):
        bw_silverman(ONE_TO_TEN, 0.0)


def test_silverman_zero_iqr_falls_back_to_sd():
    x = np.array([0.0] * 8 + [1.0, 5.0])
    assert scale_estimate(x).iqr == 0.0
    assert bw_nrd0(x) == pytest.approx(0.9 * np.std(x, ddof=1) * 10 ** -0.2, rel=1e-15)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(-100, 100), min_size=5, max_size=40).filter(lambda v: np.ptp(v) > 1e-3),
    st.floats(1e-3, 1e3),
)
def test_silverman_scale_equivariance(xs, c):
    x = np.array(xs)
    for rule in (bw_nrd0, bw_nrd):
        assert rule(c * x) == pytest.approx(c * rule(x), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(5, 300))
def test_nrd0_smaller_than_nrd_on_normal_data(seed, n):
    x = np.random.default_rng(seed).standard_normal(n)
    assert bw_nrd0(x) < bw_nrd(x)


def _dyadic_sample(seed, n=256):
    # multiples of 2^-8 with n a power of two: every sum, mean, difference
    # and quantile below is computed without rounding
    return np.random.default_rng(seed).integers(-512, 512, size=n) / 256.0


@pytest.mark.parametrize("name", sorted(SELECTORS))
def test_translation_invariance_exact(name):
    x = _dyadic_sample(4)
    assert SELECTORS[name](x + 37.0) == SELECTORS[name](x)


@pytest.mark.parametrize("name", sorted(SELECTORS))
def test_translation_invariance_general(name):
    x = np.random.default_rng(8).standard_normal(300)
    assert SELECTORS[name](x + 3.3) == pytest.approx(SELECTORS[name](x), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_sj_fixed_point(seed):
    x = np.random.default_rng(seed).standard_normal(400)
    h = bw_sheather_jones(x)
    eq = SJEquation(x)
    assert abs(h - eq.rhs(h)) / h <= 1e-8
    lo, hi = eq.bracket()
    assert lo <= h <= hi


@pytest.mark.parametrize("c", [1e-3, 0.37, 12.0, 5e3])
def test_sj_scale_equivariance(c):
    x = np.random.default_rng(21).standard_normal(300)
    assert bw_sheather_jones(c * x) == pytest.approx(c * bw_sheather_jones(x), rel=1e-6)


def test_sj_input_errors():
    with pytest.raises(BandwidthError):
        bw_sheather_jones([0.0, 1.0, 2.0])
    with pytest.raises(BandwidthError):
        bw_sheather_jones([3.0] * 10)


def test_sj_no_sign_change_surfaces_bracket(monkeypatch):
    monkeypatch.setattr(SJEquation, "residual", lambda self, h: 1.0)
    x = np.random.default_rng(1).standard_normal(50)
    with pytest.raises(BandwidthError) as info:
        bw_sheather_jones(x)
    lo, hi = info.value.bracket
    assert lo == pytest.approx(0.1 * bw_nrd0(x))
    assert hi == pytest.approx(10.0 * bw_nrd0(x))


# --- brute-force oracle for the solve-the-equation bandwidth -------------


@numba.njit(cache=True)
def _oracle_functional(x, scale, order):
    # plain double loop over all ordered pairs, diagonal included
    n = x.size
    total = 0.0
    for i in range(n):
        for j in range(n):
            u = (x[i] - x[j]) / scale
            u2 = u * u
            if order == 4:
                p = u2 * u2 - 6.0 * u2 + 3.0
            else:
                p = u2 * u2 * u2 - 15.0 * u2 * u2 + 45.0 * u2 - 15.0
            total += p * math.exp(-0.5 * u2)
    return total / math.sqrt(2.0 * math.pi) / (n * n * scale ** (order + 1))


def _oracle_sj(x):
    n = x.size
    sd = np.std(x, ddof=1)
    q1, q3 = np.quantile(x, [0.25, 0.75])
    lam = min(sd, (q3 - q1) / 1.34)
    a = 0.920 * lam * n ** (-1 / 7)
    b = 0.912 * lam * n ** (-1 / 9)
    const = 1.357 * (_oracle_functional(x, a, 4) / -_oracle_functional(x, b, 6)) ** (1 / 7)
    rk = 1.0 / (2.0 * math.sqrt(math.pi))

    def resid(h):
        return h - (rk / (n * _oracle_functional(x, const * h ** (5 / 7), 4))) ** 0.2

    h0 = 0.9 * lam * n ** -0.2
    grid = np.geomspace(0.1 * h0, 10 * h0, 10_000)
    vals = np.array([resid(h) for h in grid])
    idx = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    assert idx.size == 1
    lo, hi = grid[idx[0]], grid[idx[0] + 1]
    # golden-section refinement of |residual| inside the winning cell
    g = (math.sqrt(5) - 1) / 2
    while hi - lo > 1e-12:
        c, d = hi - g * (hi - lo), lo + g * (hi - lo)
        if abs(resid(c)) < abs(resid(d)):
            hi = d
        else:
            lo = c
    return 0.5 * (lo + hi)


@pytest.mark.slow
def test_sj_matches_golden_grid_oracle():
    x = np.random.default_rng(20240517).standard_normal(500)
    assert bw_sheather_jones(x) == pytest.approx(_oracle_sj(x), abs=1e-6)


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(SELECTORS))
def test_rate_stabilizes(name):
    rng = np.random.default_rng(99)
    med = {}
    for n in (1000, 4000):
        vals = [SELECTORS[name](rng.standard_normal(n)) * n**0.2 for _ in range(50)]
        med[n] = np.median(vals)
    assert abs(med[4000] / med[1000] - 1.0) < 0.10


def test_bandwidth_set_validation():
    bs = BandwidthSet.from_values([0.2, 0.3])
    assert bs.labels == ["h1", "h2"]
    np.testing.assert_array_equal(bs.values, [0.2, 0.3])
    with pytest.raises(ValueError):
        BandwidthSet((("a", 0.2), ("a", 0.3)))
    with pytest.raises(ValueError):
        BandwidthSet.from_values([0.2, -0.1])
    with pytest.raises(ValueError):
        BandwidthSet.from_values([0.1] * (MAX_EXPERTS + 1))
    with pytest.raises(ValueError):
        BandwidthSet.select(ONE_TO_TEN, ["ucv"])


def test_bandwidth_set_select_order():
    x = np.random.default_rng(0).standard_normal(200)
    bs = BandwidthSet.select(x)
    assert bs.labels == ["nrd0", "nrd", "sj"]
    assert bs.as_dict()["sj"] == bw_sheather_jones(x)
