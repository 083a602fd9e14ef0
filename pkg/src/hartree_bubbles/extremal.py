"""Extremal bubbles, the integral-equation residual, Kelvin transforms and
the moving-spheres critical scale.

Functions of points take arrays with last axis of length ``n`` and
broadcast over leading axes.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DivergenceError, DomainError, SingularInputError
from .parameters import ProblemParams, classify
from .quadrature import QuadratureSpec
from .radial_ops import RadialProfile, algebraic_profile
from .riesz import hartree_apply, riesz_potential
from .special_constants import bubble_normalization, riesz_constant

GAP_TOL = 1e-9
SCAN_FACTOR = 1.25
SCAN_START = 1e-3
FIBONACCI_DIRECTIONS = 64
RADIAL_FRACTIONS = 48
IE_RADII = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0)


@dataclass(frozen=True)
class Bubble:
    mu: float
    x0: tuple
    C: float
    k: float

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError("bubble scale mu must be positive")
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))

    @classmethod
    def standard(cls, params: ProblemParams, mu: float = 1.0, x0=None) -> "Bubble":
        """Bubble with the critical-exponent normalization for ``(n, s, sigma)``."""
        crit = params if classify(params).exponent_regime == "critical" else params.with_exponents(
            (2 * params.n - params.sigma) / (params.n - 2 * params.s),
            (params.n + 2 * params.s - params.sigma) / (params.n - 2 * params.s))
        x0 = (0.0,) * params.n if x0 is None else x0
        if len(x0) != params.n:
            raise DomainError("bubble center has the wrong dimension")
        return cls(mu, tuple(x0), bubble_normalization(crit), (params.n - 2 * params.s) / 2)

    @property
    def n(self) -> int:
        return len(self.x0)

    @property
    def nu(self) -> float:
        """Decay order ``n - 2s``, also the Kelvin weight."""
        return 2.0 * self.k

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return self.mu ** self.k * self.C * (1.0 + (self.mu * r) ** 2) ** (-self.k)

    def __call__(self, x):
        return bubble_value(self, x)

    def profile(self) -> RadialProfile:
        """Radial profile about ``x0``."""
        return algebraic_profile(self.mu ** self.k * self.C, self.k, scale=1.0 / self.mu)


def bubble_value(b: Bubble, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != b.n:
        raise DomainError(f"points must have last axis of length {b.n}")
    d = x - np.asarray(b.x0)
    return b.radial(np.sqrt(np.sum(d * d, axis=-1)))


def ie_residual(b: Bubble, params: ProblemParams, sample_radii=None,
                spec: QuadratureSpec | None = None) -> float:
    """Worst relative gap between ``u`` and ``R_{2s,n} |.|^(2s-n) * ((|.|^-sigma * u^p) u^q)``.

    The bubble is radial about its center, so both convolutions reduce to
    one-dimensional radial potentials in the translated coordinate.
    """
    if params.n != b.n or abs(params.n - 2 * params.s - b.nu) > 1e-12:
        raise DomainError("bubble and parameters disagree on n or s")
    radii = np.asarray(IE_RADII if sample_radii is None else sample_radii, dtype=float) / (
        b.mu if sample_radii is None else 1.0)
    u = b.profile()
    source = hartree_apply(u, params, spec)
    gap = params.n - 2 * params.s
    res = riesz_potential(source, gap, params.n, radii, spec)
    T = riesz_constant(2 * params.s, params.n) * res.values
    exact = b.radial(radii)
    return float(np.max(np.abs(exact - T) / exact))


def kelvin_transform(u: Callable, x0, lam: float, nu: float) -> Callable:
    """``x -> (lam/|x-x0|)^nu u(x0 + lam^2 (x-x0)/|x-x0|^2)``."""
    if not lam > 0:
        raise DomainError("Kelvin radius must be positive")
    x0 = np.asarray(x0, dtype=float)

    def transformed(x):
        d = np.asarray(x, dtype=float) - x0
        r2 = np.sum(d * d, axis=-1)
        if np.any(r2 == 0):
            raise SingularInputError("Kelvin transform evaluated at its center")
        image = x0 + lam * lam * d / r2[..., None]
        return (lam * lam / r2) ** (nu / 2) * u(image)

    return transformed


@dataclass
class MovingSphereState:
    center: np.ndarray
    lam: float
    points: np.ndarray
    omega: np.ndarray
    violation: np.ndarray

    @property
    def min_omega(self) -> float:
        return float(np.min(self.omega)) if self.omega.size else math.inf

    @property
    def violated(self) -> bool:
        return bool(np.any(self.violation))


def moving_sphere_gap(u: Callable, x0, lam: float, points, nu: float,
                      tol: float = 0.0) -> MovingSphereState:
    """``omega_lam = u_{x0,lam} - u`` at the sample points; violation marks ``omega < -tol``
    at points strictly inside the sphere (center excluded)."""
    x0 = np.asarray(x0, dtype=float)
    pts = np.asarray(points, dtype=float)
    omega = kelvin_transform(u, x0, lam, nu)(pts) - u(pts)
    r = np.sqrt(np.sum((pts - x0) ** 2, axis=-1))
    violation = (omega < -tol) & (r < lam) & (r > 0)
    return MovingSphereState(x0, float(lam), pts, np.asarray(omega), violation)


def fibonacci_directions(n: int, count: int = FIBONACCI_DIRECTIONS) -> np.ndarray:
    """Deterministic, nearly uniform unit vectors in ``R^n``."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        t = 2 * np.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(t), np.sin(t)], axis=-1)
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    phi = np.pi * (1.0 + math.sqrt(5.0)) * i
    rho = np.sqrt(1.0 - z * z)
    base = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)
    if n == 3:
        return base
    # Higher dimensions: a seeded Gaussian sample biased toward the 3-D spiral, normalized.
    rng = np.random.default_rng(12345)
    g = rng.standard_normal((count, n))
    g[:, :3] += 3.0 * base
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def planar_directions(axis, n: int, count: int = 33) -> np.ndarray:
    """Unit vectors in a half-plane containing ``axis``; enough for axisymmetric profiles."""
    a = np.zeros(n)
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if norm > 0:
        a = axis / norm
    else:
        a[0] = 1.0
    b = np.zeros(n)
    b[np.argmin(np.abs(a))] = 1.0
    b -= b.dot(a) * a
    b /= np.linalg.norm(b)
    t = np.linspace(0.0, np.pi, count)
    return np.cos(t)[:, None] * a + np.sin(t)[:, None] * b


def ball_samples(x0, lam, directions, fractions) -> np.ndarray:
    """Points ``x0 + lam f d`` for every fraction ``f`` and direction ``d``, shape ``(F, D, n)``."""
    r = lam * np.asarray(fractions, dtype=float)
    return np.asarray(x0, dtype=float) + r[:, None, None] * np.asarray(directions)[None, :, :]


def _gap_violated(u, x0, lam, nu, directions, fractions, tol, trace):
    pts = ball_samples(x0, lam, directions, fractions)
    r = lam * fractions
    state = moving_sphere_gap(u, x0, lam, pts, nu, tol)
    if trace is not None:
        worst = state.omega.min(axis=1)
        trace.extend((lam, float(ri), float(wi)) for ri, wi in zip(r, worst))
    return state.violated


def critical_scale(u: Callable, x0, nu: float, lam_max: float = 1e3, tol: float = GAP_TOL,
                   directions=None, fractions=None, start: float = SCAN_START,
                   rel_precision: float = 1e-10, trace: Optional[list] = None) -> float:
    """Largest ``lam`` with ``omega_mu >= -tol`` inside ``B_mu(x0)`` for all sampled ``mu <= lam``.

    Returns ``math.inf`` when no violation occurs up to ``lam_max``.  The
    scan is geometric from ``start``; the first violating bracket is then
    bisected.  Rows ``(lambda, r, min omega)`` are appended to ``trace``.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.shape[0]
    if not nu > 0:
        raise DomainError("Kelvin weight nu must be positive")
    directions = fibonacci_directions(n) if directions is None else np.asarray(directions, float)
    if fractions is None:
        fractions = (np.arange(1, RADIAL_FRACTIONS + 1) - 0.5) / RADIAL_FRACTIONS
    fractions = np.asarray(fractions, dtype=float)
    check = lambda lam: _gap_violated(u, x0, lam, nu, directions, fractions, tol, trace)
    if check(start):
        raise DomainError(f"gap already negative at the starting radius {start}")
    good, lam = start, start
    while True:
        lam = min(lam * SCAN_FACTOR, lam_max)
        if check(lam):
            bad = lam
            break
        good = lam
        if lam >= lam_max:
            return math.inf
    while bad - good > rel_precision * bad:
        mid = 0.5 * (good + bad)
        if check(mid):
            bad = mid
        else:
            good = mid
    return 0.5 * (good + bad)


def _neville_at_zero(h, f):
    h = np.asarray(h, dtype=float)
    T = np.array(f, dtype=float)
    diag = [T[-1]]
    for k in range(1, len(h)):
        T = (h[k:] * T[:-1] - h[:-k] * T[1:]) / (h[k:] - h[:-k])
        diag.append(T[-1])
    return np.array(diag)


def asymptotic_coefficient(u: Callable, nu: float, x0=None, directions=None,
                           R0: float = 4.0, levels: int = 8, tol: float = 1e-6) -> float:
    """``lim |x - x0|^nu u(x)`` via polynomial extrapolation in ``h = 1/R`` along rays.

    Raises :class:`DivergenceError` when the last two extrapolants disagree
    by more than ``tol`` relative, which signals a decay order other than ``nu``.
    """
    if directions is None:
        if x0 is None:
            raise DomainError("need x0 or directions to fix the dimension")
        directions = fibonacci_directions(len(x0), 8)
    directions = np.asarray(directions, dtype=float)
    x0 = np.zeros(directions.shape[1]) if x0 is None else np.asarray(x0, dtype=float)
    R = R0 * 2.0 ** np.arange(levels)
    estimates = []
    for d in directions:
        f = R ** nu * u(x0 + R[:, None] * d)
        diag = _neville_at_zero(1.0 / R[::-1], f[::-1])
        last, prev = diag[-1], diag[-2]
        if not abs(last - prev) <= tol * max(abs(last), 1e-300):
            raise DivergenceError(
                f"extrapolation along {d} did not settle ({prev} vs {last}); decay order is not {nu}")
        estimates.append(last)
    return float(np.mean(estimates))


def lower_bound_check(u: Callable, x0, nu: float, radii, directions=None) -> float:
    """Sampled infimum of ``|x - x0|^nu u(x)`` over ``|x - x0|`` in ``radii`` (all >= 1)."""
    radii = np.asarray(radii, dtype=float)
    if np.any(radii < 1.0):
        raise DomainError("lower bound is sampled at radii >= 1")
    x0 = np.asarray(x0, dtype=float)
    directions = fibonacci_directions(len(x0)) if directions is None else np.asarray(directions, float)
    pts = x0 + radii[:, None, None] * directions[None, :, :]
    return float(np.min(radii[:, None] ** nu * u(pts)))


def write_trace_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "r", "omega"])
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
