"""Closed-form constants built from Gamma-function ratios.

Gamma values come from :func:`math.gamma` (libm ``tgamma``), which is
accurate to a few ulps on the positive axis.  The only constant without a
Gamma closed form here is the fractional Laplacian normalization, which is
computed from its defining integral.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import DomainError
from .parameters import ProblemParams, classify, critical_exponents
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate, sphere_area

POLE_MARGIN = 1e-8

gamma = math.gamma


def _check_open(name: str, value: float, lo: float, hi: float) -> None:
    if not (lo + POLE_MARGIN < value < hi - POLE_MARGIN):
        raise DomainError(f"{name}={value} must lie in ({lo}, {hi}) away from the endpoints")


def riesz_constant(gamma_exp: float, n: int) -> float:
    """``Gamma((n-g)/2) / (pi^(n/2) 2^g Gamma(g/2))``: the kernel constant of ``(-Delta)^(-g/2)``."""
    _check_open("gamma_exp", gamma_exp, 0.0, n)
    return gamma((n - gamma_exp) / 2) / (math.pi ** (n / 2) * 2.0 ** gamma_exp * gamma(gamma_exp / 2))


def bubble_integral(gamma_exp: float, n: int) -> float:
    """``I(g) = pi^(n/2) Gamma((n - 2g)/2) / Gamma(n - g)``.

    ``I(g) (1+|x|^2)^(-g)`` is the convolution of ``|x|^(-2g)`` with
    ``(1+|x|^2)^(-(n-g))``.
    """
    _check_open("gamma_exp", gamma_exp, 0.0, n / 2)
    return math.pi ** (n / 2) * gamma((n - 2 * gamma_exp) / 2) / gamma(n - gamma_exp)


def bubble_normalization(params: ProblemParams) -> float:
    """Height ``C`` of the standard bubble ``C (1 + |x|^2)^(-(n-2s)/2)`` at critical exponents."""
    crit = classify(params)
    if crit.exponent_regime != "critical":
        raise DomainError(
            f"bubble normalization needs critical exponents; got tau={crit.tau}, mu={crit.mu}")
    n, s, sigma = params.n, params.s, params.sigma
    base = 1.0 / (riesz_constant(2 * s, n) * bubble_integral(sigma / 2, n)
                  * bubble_integral((n - 2 * s) / 2, n))
    return base ** ((n - 2 * s) / (2 * (n + 2 * s - sigma)))


def sobolev_constant(s: float, n: int) -> float:
    """Sharp constant of the fractional Sobolev inequality ``||u||_{2n/(n-2s)} <= S ||(-Delta)^(s/2) u||_2``."""
    _check_open("s", s, 0.0, n / 2)
    return ((1.0 / (2.0 * math.sqrt(math.pi))) ** s
            * (gamma(n) / gamma(n / 2)) ** (s / n)
            * math.sqrt(gamma((n - 2 * s) / 2) / gamma((n + 2 * s) / 2)))


def hls_constant(sigma: float, s: float, n: int) -> float:
    """Sharp constant of the Hartree-type HLS inequality for ``(sigma, s, n)``."""
    _check_open("sigma", sigma, 0.0, n)
    _check_open("s", s, 0.0, n / 2)
    gap = n - 2 * s
    denom = 2 * n - sigma
    first = (riesz_constant(2 * s, n) * bubble_integral(gap / 2, n)) ** (
        gap * (n - sigma) / (4 * s * denom))
    second = bubble_integral(sigma / 2, n) ** (-gap / (2 * denom))
    third = sobolev_constant(s, n) ** (-n * (n + 2 * s - sigma) / (2 * s * denom))
    return first * second * third


# --------------------------------------------------------------------------
# Fractional Laplacian normalization
# --------------------------------------------------------------------------

_CUTOFF_PERIODS = 50


def _oscillatory_tail(beta: float, V: float) -> float:
    """``int_V^inf v^(-beta) cos v dv`` for ``V`` a multiple of ``2 pi``.

    Repeated integration by parts gives the asymptotic series
    ``sum_j (-1)^j (beta)_(2j+1) V^(-beta-2j-1)``; it is summed until the
    terms stop shrinking.
    """
    total = 0.0
    term = beta * V ** (-beta - 1.0)
    j = 0
    while True:
        total += term
        nxt = -term * (beta + 2 * j + 1) * (beta + 2 * j + 2) / (V * V)
        if abs(nxt) >= abs(term) or abs(nxt) < 1e-18 * abs(total):
            break
        term = nxt
        j += 1
    return total


def _radial_factor(alpha: float, spec: QuadratureSpec) -> float:
    # J = int_0^inf v^(-1-alpha) (1 - cos v) dv
    V = 2.0 * math.pi * _CUTOFF_PERIODS

    def f(v):
        # sin(v/2)^2 v^(-1-alpha) = sinc(v/2)^2 v^(1-alpha) / 4: no overflow for tiny v.
        sinc = np.sinc(v / (2.0 * math.pi))
        return 0.5 * sinc * sinc * v ** (1.0 - alpha)

    head = integrate(f, 0.0, V, spec.with_singularities([(0.0, 1.0 - alpha)]),
                     points=[2.0 * math.pi * k for k in range(1, _CUTOFF_PERIODS)])
    tail = V ** (-alpha) / alpha - _oscillatory_tail(1.0 + alpha, V)
    return head.value + tail


def _direction_factor(alpha: float, n: int, spec: QuadratureSpec) -> float:
    # int over S^(n-1) of |w_1|^alpha
    if n == 1:
        return 2.0

    def f(t):
        return np.cos(t) ** alpha * np.sin(t) ** (n - 2)

    hints = [(0.5 * math.pi, alpha)]
    if n > 2:
        hints.append((0.0, float(n - 2)))
    res = integrate(f, 0.0, 0.5 * math.pi, spec.with_singularities(hints))
    return 2.0 * sphere_area(n - 2) * res.value


def frac_lap_normalization(alpha: float, n: int, spec: QuadratureSpec | None = None) -> float:
    """``C_{alpha,n} = (int_{R^n} (1 - cos(2 pi z_1)) |z|^(-n-alpha) dz)^(-1)``.

    In polar coordinates the integral factors as
    ``(2 pi)^alpha * int_0^inf v^(-1-alpha)(1 - cos v) dv * int_{S^(n-1)} |w_1|^alpha``,
    and both factors are computed by quadrature.  With this normalization
    the operator has Fourier symbol ``|xi|^alpha`` under the
    ``exp(2 pi i x.xi)`` convention.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n}")
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha}")
    spec = DEFAULT_SPEC if spec is None else spec
    if alpha < 0.05 or alpha > 1.95:
        warnings.warn(f"alpha={alpha} is close to a degenerate endpoint; using a wider tolerance",
                      RuntimeWarning, stacklevel=2)
        spec = spec.loosened(1e-6)
    value = (2.0 * math.pi) ** alpha * _radial_factor(alpha, spec) * _direction_factor(alpha, n, spec)
    return 1.0 / value


def constants_report(params: ProblemParams) -> dict:
    """All closed-form constants attached to a subcritical-order parameter set."""
    n, s, sigma = params.n, params.s, params.sigma
    p_crit, q_crit = critical_exponents(params)
    crit_params = params.with_exponents(p_crit, q_crit)
    return {
        "riesz_2s": riesz_constant(2 * s, n),
        "I_sigma_half": bubble_integral(sigma / 2, n),
        "I_gap_half": bubble_integral((n - 2 * s) / 2, n),
        "bubble_C": bubble_normalization(crit_params),
        "sobolev": sobolev_constant(s, n),
        "hls": hls_constant(sigma, s, n),
        "p_crit": p_crit,
        "q_crit": q_crit,
    }
