import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from hartree_bubbles import (DomainError, ProblemParams, QuadratureSpec, bubble_integral,
                             bubble_normalization, frac_lap_normalization, hls_constant,
                             riesz_constant, sobolev_constant)
from hartree_bubbles.special_constants import constants_report, gamma

mp.mp.dps = 30


def test_gamma_recurrence_and_half():
    xs = np.linspace(0.05, 29.0, 200)
    for x in xs:
        assert gamma(x + 1) == pytest.approx(x * gamma(x), rel=1e-12)
    assert gamma(0.5) ** 2 == pytest.approx(math.pi, rel=1e-12)


def _mp_riesz(g, n):
    return mp.gamma((n - g) / 2) / (mp.pi ** (mp.mpf(n) / 2) * 2 ** mp.mpf(g) * mp.gamma(mp.mpf(g) / 2))


def _mp_I(g, n):
    return mp.pi ** (mp.mpf(n) / 2) * mp.gamma((n - 2 * mp.mpf(g)) / 2) / mp.gamma(n - mp.mpf(g))


@pytest.mark.parametrize("g,n,expected", [(2, 3, 1 / (4 * math.pi)), (1, 3, 1 / (2 * math.pi ** 2))])
def test_riesz_constant_examples(g, n, expected):
    assert riesz_constant(g, n) == pytest.approx(expected, rel=1e-14)


def test_riesz_constant_domain():
    assert math.isfinite(riesz_constant(3 - 1e-6, 3))
    for bad in (3.0, 0.0, -1.0, 3.5):
        with pytest.raises(DomainError):
            riesz_constant(bad, 3)


@pytest.mark.parametrize("g,n,expected", [(1, 3, math.pi ** 2), (1, 4, math.pi ** 2 / 2),
                                          (0.5, 3, 4 * math.pi / 3)])
def test_bubble_integral_examples(g, n, expected):
    assert bubble_integral(g, n) == pytest.approx(expected, rel=1e-14)


def test_bubble_integral_domain():
    with pytest.raises(DomainError):
        bubble_integral(1.5, 3)


@given(st.integers(2, 10), st.floats(0.01, 0.99))
def test_gamma_ratios_match_high_precision(n, frac):
    g = frac * n
    assert riesz_constant(g, n) == pytest.approx(float(_mp_riesz(g, n)), rel=1e-12)
    if g < n / 2:
        assert bubble_integral(g, n) == pytest.approx(float(_mp_I(g, n)), rel=1e-12)


def test_bubble_normalization_example():
    C = bubble_normalization(ProblemParams.from_order(3, 1, 2))
    assert C == pytest.approx((3 / math.pi ** 2) ** (1 / 6), rel=1e-14)
    assert C == pytest.approx(0.8200, abs=5e-5)


def test_bubble_normalization_rejects_noncritical():
    with pytest.raises(DomainError):
        bubble_normalization(ProblemParams.from_order(3, 1, 2, p=4.0, q=2.0))


@given(st.integers(2, 9), st.floats(0.02, 0.98), st.floats(0.02, 0.98))
def test_bubble_normalization_closes_the_integral_equation(n, sfrac, sigfrac):
    s, sigma = sfrac * n / 2, sigfrac * n
    params = ProblemParams.from_order(n, s, sigma)
    C = bubble_normalization(params)
    assert C > 0
    closure = (C ** (params.p + params.q - 1) * riesz_constant(2 * s, n)
               * bubble_integral(sigma / 2, n) * bubble_integral((n - 2 * s) / 2, n))
    assert closure == pytest.approx(1.0, rel=1e-11)


def test_sobolev_constant_matches_classical_form():
    # s = 1: the sharp constant of ||u||_{2n/(n-2)} <= S ||grad u||_2 is
    # (pi n (n-2))^(-1/2) (Gamma(n)/Gamma(n/2))^(1/n).
    for n in (3, 4, 5, 7):
        classical = (math.pi * n * (n - 2)) ** -0.5 * (math.gamma(n) / math.gamma(n / 2)) ** (1 / n)
        assert sobolev_constant(1.0, n) == pytest.approx(classical, rel=1e-13)
    assert sobolev_constant(1.0, 3) == pytest.approx(0.42726054, abs=1e-8)


def test_sobolev_constant_limits_and_order():
    assert sobolev_constant(1e-7, 3) == pytest.approx(1.0, abs=1e-5)
    assert 0 < sobolev_constant(1.0, 4) < sobolev_constant(1.0, 3)


def test_hls_constant_high_precision():
    sigma, s, n = 2.0, 1.0, 3
    gap, den = n - 2 * s, 2 * n - sigma
    St = (1 / (2 * mp.sqrt(mp.pi))) ** s * (mp.gamma(n) / mp.gamma(mp.mpf(n) / 2)) ** (mp.mpf(s) / n) \
        * mp.sqrt(mp.gamma(mp.mpf(gap) / 2) / mp.gamma(mp.mpf(n + 2 * s) / 2))
    ref = ((_mp_riesz(2 * s, n) * _mp_I(gap / 2, n)) ** (mp.mpf(gap * (n - sigma)) / (4 * s * den))
           * _mp_I(sigma / 2, n) ** (-mp.mpf(gap) / (2 * den))
           * St ** (-mp.mpf(n * (n + 2 * s - sigma)) / (2 * s * den)))
    assert hls_constant(sigma, s, n) == pytest.approx(float(ref), rel=1e-13)
    assert hls_constant(sigma, s, n) > 0


def test_frac_lap_normalization_one_dimensional_oracle():
    # int_R (1 - cos(2 pi z)) / z^2 dz = 2 pi^2
    assert frac_lap_normalization(1.0, 1) == pytest.approx(1 / (2 * math.pi ** 2), rel=1e-12)


@pytest.mark.parametrize("alpha,n", [(0.5, 2), (1.0, 3), (1.5, 3), (0.3, 5), (1.8, 4)])
def test_frac_lap_normalization_matches_fourier_constant(alpha, n):
    # Oracle: with symbol |2 pi xi|^alpha the constant is
    # 2^alpha Gamma((n+alpha)/2) / (pi^(n/2) |Gamma(-alpha/2)|); our operator has
    # symbol |xi|^alpha, which divides it by (2 pi)^alpha.
    standard = 2 ** alpha * math.gamma((n + alpha) / 2) / (
        math.pi ** (n / 2) * abs(math.gamma(-alpha / 2)))
    assert frac_lap_normalization(alpha, n) == pytest.approx(standard / (2 * math.pi) ** alpha,
                                                             rel=1e-9)


def test_frac_lap_normalization_self_convergence():
    base = frac_lap_normalization(1.0, 2)
    deeper = frac_lap_normalization(1.0, 2, QuadratureSpec(max_depth=80))
    assert base > 0
    assert deeper == pytest.approx(base, rel=1e-6)


def test_frac_lap_normalization_degenerate_warning():
    with pytest.warns(RuntimeWarning):
        assert frac_lap_normalization(0.02, 3) > 0
    with pytest.raises(DomainError):
        frac_lap_normalization(2.0, 3)


def test_constants_report_fields():
    rep = constants_report(ProblemParams.from_order(3, 1, 2))
    assert rep["riesz_2s"] == pytest.approx(1 / (4 * math.pi))
    assert rep["I_sigma_half"] == pytest.approx(math.pi ** 2)
    assert rep["I_gap_half"] == pytest.approx(4 * math.pi / 3)
    assert rep["sobolev"] == pytest.approx(0.42726054, abs=1e-8)
    assert rep["hls"] == pytest.approx(1.82542110, abs=1e-8)
    assert (rep["p_crit"], rep["q_crit"]) == (4.0, 3.0)
