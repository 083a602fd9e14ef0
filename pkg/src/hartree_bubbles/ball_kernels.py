"""Green functions and the fractional Poisson kernel on balls, plus the
moving-sphere kernel differences K1/K2.

Point arguments are arrays whose last axis has length ``n``; kernels
broadcast over leading axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from . import _kernels
from .errors import DomainError, SingularInputError
from .quadrature import DEFAULT_SPEC, QuadratureSpec, angular_weight, integrate, sphere_area
from .radial_ops import RadialProfile, fractional_laplacian_radial
from .special_constants import riesz_constant

REPRESENTATION_NODES = 40


@dataclass(frozen=True)
class BallSpec:
    radius: float
    n: int
    alpha: float = 2.0
    center: tuple = field(default=None)

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("ball radius must be positive")
        if int(self.n) != self.n or self.n < 2:
            raise DomainError("ball dimension must be an integer >= 2")
        if not 0.0 < self.alpha <= 2.0:
            raise DomainError("alpha must lie in (0, 2]")
        center = (0.0,) * self.n if self.center is None else tuple(float(c) for c in self.center)
        if len(center) != self.n:
            raise DomainError("center has the wrong dimension")
        object.__setattr__(self, "center", center)

    def local(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DomainError(f"points must have last axis of length {self.n}")
        return x - np.asarray(self.center)


def _norm(x):
    return np.sqrt(np.sum(x * x, axis=-1))


# --------------------------------------------------------------------------
# Green functions
# --------------------------------------------------------------------------

def green_laplacian_ball(x, y, ball: BallSpec):
    """Green function of ``-Delta`` on the ball (``n >= 3``), zero outside."""
    n, R = ball.n, ball.radius
    if n < 3:
        raise DomainError("the ball Green function formula here needs n >= 3")
    x, y = np.broadcast_arrays(ball.local(x), ball.local(y))
    dist = _norm(x - y)
    if np.any(dist == 0):
        raise SingularInputError("Green function evaluated at x == y")
    rx = _norm(x)
    safe = np.where(rx > 0, rx, 1.0)[..., None]
    # |x| * |R x/|x|^2 - y/R| = |R x/|x| - |x| y/R|, equal to R at x = 0.
    image = np.where(rx > 0, _norm(R * x / safe - rx[..., None] * y / R), R)
    value = riesz_constant(2.0, n) * (dist ** (2.0 - n) - image ** (2.0 - n))
    inside = (rx < R) & (_norm(y) < R)
    out = np.where(inside, value, 0.0)
    return float(out) if out.ndim == 0 else out


def green_constant(n: int, alpha: float) -> float:
    """Prefactor of the fractional Green function, matched to the operator normalization.

    ``Gamma(n/2) / (2^alpha pi^(n/2) Gamma(alpha/2)^2)`` is the constant for
    the operator with symbol ``|xi|^alpha``; the operator used here has an
    extra factor ``(2 pi)^(-alpha)``, so the Green function carries ``(2 pi)^alpha``.
    """
    return ((2.0 * math.pi) ** alpha * math.gamma(n / 2)
            / (2.0 ** alpha * math.pi ** (n / 2) * math.gamma(alpha / 2) ** 2))


def green_fractional_ball(x, y, ball: BallSpec):
    """Green function of ``(-Delta)^(alpha/2)`` on the ball (``alpha < 2``)."""
    n, R, alpha = ball.n, ball.radius, ball.alpha
    if not alpha < 2.0:
        raise DomainError("fractional Green function needs alpha < 2")
    x, y = np.broadcast_arrays(ball.local(x), ball.local(y))
    dist = _norm(x - y)
    if np.any(dist == 0):
        raise SingularInputError("Green function evaluated at x == y")
    rx2, ry2 = np.sum(x * x, axis=-1), np.sum(y * y, axis=-1)
    inside = (rx2 < R * R) & (ry2 < R * R)
    t_R = np.where(inside, (1.0 - rx2 / R ** 2) * (1.0 - ry2 / R ** 2), 0.0)
    w = t_R * R * R / dist ** 2
    out = green_constant(n, alpha) * dist ** (alpha - n) * _kernels.green_beta(np.atleast_1d(w), n, alpha).reshape(w.shape)
    out = np.where(inside, out, 0.0)
    return float(out) if out.ndim == 0 else out


def poisson_constant(n: int, alpha: float) -> float:
    return math.gamma(n / 2) / math.pi ** (n / 2 + 1) * math.sin(math.pi * alpha / 2)


def poisson_fractional_ball(x, y, ball: BallSpec):
    """Poisson kernel of ``(-Delta)^(alpha/2)`` for ``|x| < R < |y|``."""
    n, R, alpha = ball.n, ball.radius, ball.alpha
    if not alpha < 2.0:
        raise DomainError("fractional Poisson kernel needs alpha < 2")
    x, y = np.broadcast_arrays(ball.local(x), ball.local(y))
    rx2, ry2 = np.sum(x * x, axis=-1), np.sum(y * y, axis=-1)
    if np.any(rx2 >= R * R) or np.any(ry2 <= R * R):
        raise DomainError("Poisson kernel needs |x| < R < |y|")
    out = (poisson_constant(n, alpha) * ((R * R - rx2) / (ry2 - R * R)) ** (alpha / 2)
           * _norm(x - y) ** (-n))
    return float(out) if out.ndim == 0 else out


def _exterior_integral(profile, rho: float, ball: BallSpec, spec: QuadratureSpec,
                       decay: float) -> float:
    """``int_{|y|>R} P(x, y) u(|y|) dy`` for ``|x| = rho``, ``u`` radial."""
    n, R, alpha = ball.n, ball.radius, ball.alpha
    gap = (R - rho) / R

    def f(s):
        one_minus = 1.0 - s
        r = R / one_minus
        lift = (R * R * s * (2.0 - s)) ** (-alpha / 2) * one_minus ** alpha
        weight = angular_weight(rho, r, float(n), n, diff=r - rho)
        return lift * profile(r) * r ** (n - 1) * weight * R / one_minus ** 2

    hints = [(0.0, -alpha / 2), (1.0, alpha + decay - 1.0)]
    points = [gap * 2.0 ** j for j in range(-8, 6) if 0 < gap * 2.0 ** j < 1]
    res = integrate(f, 0.0, 1.0, spec.with_singularities(hints), points=points)
    return poisson_constant(n, alpha) * (R * R - rho * rho) ** (alpha / 2) * res.value


def poisson_mass(x, ball: BallSpec, spec: QuadratureSpec | None = None) -> float:
    """``int_{|y|>R} P(x, y) dy`` (equal to one)."""
    spec = DEFAULT_SPEC if spec is None else spec
    rho = float(_norm(ball.local(x)))
    if rho >= ball.radius:
        raise DomainError("x must be inside the ball")
    one = lambda r: np.ones_like(np.asarray(r, dtype=float))
    return _exterior_integral(one, rho, ball, spec, 0.0)


def _interior_green_integral(v, rho: float, ball: BallSpec, spec: QuadratureSpec) -> float:
    """``int_{B_R} G(x, y) v(|y|) dy`` for ``|x| = rho``, ``v`` radial."""
    n, R, alpha = ball.n, ball.radius, ball.alpha
    ang = sphere_area(n - 2)

    def kernel(r, d):
        r = np.asarray(r, dtype=float)
        rr = np.broadcast_to(np.asarray(rho, dtype=float), r.shape).ravel()
        avg = _kernels.green_average(rr, r.ravel(), np.asarray(d, dtype=float).ravel(), n, alpha, R)
        return ang * avg.reshape(r.shape)

    diag_beta = alpha - 1.0
    edge_beta = alpha / 2
    if rho == 0.0:
        f = lambda r: v(r) * r ** (n - 1) * kernel(r, r)
        res = integrate(f, 0.0, R, spec.with_singularities([(0.0, alpha - 1.0), (R, edge_beta)]))
        total = res.value
    else:
        right = lambda d: v(rho + d) * (rho + d) ** (n - 1) * kernel(rho + d, d)
        left = lambda d: v(rho - d) * (rho - d) ** (n - 1) * kernel(rho - d, -d)
        res_r = integrate(right, 0.0, R - rho,
                          spec.with_singularities([(0.0, diag_beta), (R - rho, edge_beta)]))
        res_l = integrate(left, 0.0, rho, spec.with_singularities([(0.0, diag_beta)]))
        total = res_r.value + res_l.value
    return green_constant(n, alpha) * total


def _chebyshev_in_square(v_profile_eval, R: float, count: int):
    # v is even in r, so interpolate in r^2 on Chebyshev points of [0, R^2].
    k = np.arange(count)
    z = 0.5 * R * R * (1.0 - np.cos(np.pi * (k + 0.5) / count))
    values = v_profile_eval(np.sqrt(z))
    interp = BarycentricInterpolator(z, values)
    return lambda r: interp(np.asarray(r, dtype=float) ** 2)


def verify_representation(u: RadialProfile, ball: BallSpec, x,
                          spec: QuadratureSpec | None = None, nodes: int = REPRESENTATION_NODES) -> dict:
    """Reconstruct ``u(x)`` from ``(-Delta)^(alpha/2) u`` in the ball and ``u`` outside it."""
    spec = DEFAULT_SPEC if spec is None else spec
    n, R, alpha = ball.n, ball.radius, ball.alpha
    if not alpha < 2.0:
        raise DomainError("representation check needs alpha < 2")
    if any(c != 0 for c in ball.center):
        raise DomainError("representation check needs a ball centred at the origin")
    rho = float(_norm(np.asarray(x, dtype=float)))
    if rho >= R:
        raise DomainError("x must lie inside the ball")
    frac = lambda r: fractional_laplacian_radial(u, alpha, n, r, spec).values
    v = _chebyshev_in_square(frac, R, nodes)
    green_term = _interior_green_integral(v, rho, ball, spec)
    decay = u.tail.kappa if not u.tail.is_zero() else 0.0
    poisson_term = _exterior_integral(u, rho, ball, spec, decay)
    exact = float(u(np.array([rho]))[0])
    value = green_term + poisson_term
    return {"green_term": green_term, "poisson_term": poisson_term, "value": value,
            "exact": exact, "rel_error": abs(value - exact) / abs(exact)}


# --------------------------------------------------------------------------
# Moving-sphere kernels
# --------------------------------------------------------------------------

def reflected_distance(x, y, x0, lam):
    """``|(|y-x0|/lam)(x-x0) - lam (y-x0)/|y-x0||``."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    x0 = np.asarray(x0, dtype=float)
    dx, dy = x - x0, y - x0
    ry = _norm(dy)
    if np.any(ry == 0):
        raise SingularInputError("kernel evaluated with y at the sphere centre")
    return _norm(ry[..., None] * dx / lam - lam * dy / ry[..., None])


def k2_kernel(x, y, x0, lam: float, sigma: float):
    """``|x - y|^-sigma - |(|y-x0|/lam)(x-x0) - lam (y-x0)/|y-x0||^-sigma``."""
    dist = _norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    if np.any(dist == 0):
        raise SingularInputError("kernel evaluated at x == y")
    out = dist ** (-sigma) - reflected_distance(x, y, x0, lam) ** (-sigma)
    return float(out) if np.ndim(out) == 0 else out


def k1_kernel(x, y, x0, lam: float, n: int, s: float):
    """``R_{2s,n}`` times the K2 difference with exponent ``n - 2s``."""
    if not 0.0 < 2 * s < n:
        raise DomainError("K1 needs 0 < 2s < n")
    return riesz_constant(2 * s, n) * k2_kernel(x, y, x0, lam, n - 2 * s)


def sample_ball(x0, lam: float, count: int, rng: np.random.Generator,
                inner: float = 0.05, outer: float = 0.95) -> np.ndarray:
    """Uniform-in-volume points with ``inner < |x - x0|/lam < outer``."""
    x0 = np.asarray(x0, dtype=float)
    n = x0.shape[0]
    d = rng.standard_normal((count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    u = rng.uniform(inner ** n, outer ** n, (count, 1))
    return x0 + lam * u ** (1.0 / n) * d


def verify_reflection_kernels(x0, lam: float, s: float, sigma: float, count: int = 200,
                              seed: int = 0) -> dict:
    """Sampled check of the reflection identity and of ``K1, K2 > 0`` inside ``B_lam(x0)``.

    The identity is ``|reflected|^2 - |x-y|^2 = (lam^2-|x-x0|^2)(lam^2-|y-x0|^2)/lam^2``.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.shape[0]
    rng = np.random.default_rng(seed)
    x, y = sample_ball(x0, lam, count, rng), sample_ball(x0, lam, count, rng)
    lhs = reflected_distance(x, y, x0, lam) ** 2 - np.sum((x - y) ** 2, axis=-1)
    rhs = ((lam ** 2 - np.sum((x - x0) ** 2, axis=-1))
           * (lam ** 2 - np.sum((y - x0) ** 2, axis=-1)) / lam ** 2)
    return {
        "identity_max_rel_error": float(np.max(np.abs(lhs / rhs - 1.0))),
        "min_K1": float(np.min(k1_kernel(x, y, x0, lam, n, s))),
        "min_K2": float(np.min(k2_kernel(x, y, x0, lam, sigma))),
    }
