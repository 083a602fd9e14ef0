"""Radial profiles and the local/nonlocal operators acting on them.

A :class:`RadialProfile` is either *function-backed* (an exact vectorized
callable, derivatives by 5-point central differences) or *grid-backed*
(samples on nodes, derivatives from a tail-weighted cubic spline).  Both
carry a :class:`TailModel`, a finite sum ``sum_k A_k r**(-kappa_k)`` used to
close improper integrals analytically past a cutoff.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels
from .errors import DivergenceError, DomainError
from .parameters import ProblemParams
from .quadrature import (DEFAULT_SPEC, QuadratureSpec, integrate, power_tail_integral,
                         sphere_area)
from .special_constants import frac_lap_normalization

MAX_TAIL_TERMS = 10
DEFAULT_NODE_COUNT = 400
DEFAULT_REACH = 100.0
FD_REL_STEP = 2e-3
FD_ROUNDING_ULPS = 1.0
# Below SMALL_T * scale the spherical second difference is replaced by its
# leading Taylor term |S^(n-1)| t^2 Lap u / (2n); this keeps rounding noise in
# u(x + t w) - u(x) from being amplified by t^(-1-alpha).
SMALL_T = 1e-3
CHAIN_SPEC = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-15, max_depth=48)


# --------------------------------------------------------------------------
# Tail model
# --------------------------------------------------------------------------

def _merge_terms(terms, limit=MAX_TAIL_TERMS):
    merged: dict[float, float] = {}
    size: dict[float, float] = {}
    for A, kappa in terms:
        key = round(float(kappa), 12)
        merged[key] = merged.get(key, 0.0) + float(A)
        size[key] = size.get(key, 0.0) + abs(float(A))
    # Coefficients that cancel down to roundoff are dropped so kappa stays honest.
    out = sorted(((A, k) for k, A in merged.items() if abs(A) > 1e-13 * size[k]),
                 key=lambda t: t[1])
    return tuple(out[:limit])


@dataclass(frozen=True)
class TailModel:
    """``u(r) ~ sum_k A_k r**(-kappa_k)`` for large ``r`` (terms sorted by ``kappa``)."""

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", _merge_terms(self.terms))

    @classmethod
    def single(cls, A: float, kappa: float) -> "TailModel":
        return cls(((A, kappa),))

    @classmethod
    def zero(cls) -> "TailModel":
        return cls(())

    @property
    def A(self) -> float:
        return self.terms[0][0] if self.terms else 0.0

    @property
    def kappa(self) -> float:
        return self.terms[0][1] if self.terms else math.inf

    def is_zero(self) -> bool:
        return not self.terms

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for A, kappa in self.terms:
            out = out + A * r ** (-kappa)
        return out

    def scaled(self, c: float) -> "TailModel":
        return TailModel(tuple((c * A, k) for A, k in self.terms))

    def at_scale(self, lam: float) -> "TailModel":
        """Tail of ``r -> u(lam r)``."""
        return TailModel(tuple((A * lam ** (-k), k) for A, k in self.terms))

    def __add__(self, other: "TailModel") -> "TailModel":
        return TailModel(self.terms + other.terms)

    def times(self, other: "TailModel") -> "TailModel":
        return TailModel(tuple((a * b, k + l) for a, k in self.terms for b, l in other.terms))

    def power(self, p: float) -> "TailModel":
        if self.is_zero():
            return self
        A0, k0 = self.terms[0]
        if A0 < 0 and p != int(p):
            raise DomainError("non-integer power of a negative tail")
        head = A0 ** p
        if len(self.terms) == 1:
            return TailModel.single(head, p * k0)
        offsets = [k - k0 for _, k in self.terms[1:]]
        step = min(offsets)
        idx = [o / step for o in offsets]
        if any(abs(i - round(i)) > 1e-9 for i in idx):
            return TailModel.single(head, p * k0)
        # (1 + sum a_j y^j)^p by the J. C. P. Miller recurrence.
        count = MAX_TAIL_TERMS
        a = np.zeros(count)
        for (A, _), i in zip(self.terms[1:], idx):
            j = int(round(i))
            if j < count:
                a[j] = A / A0
        b = np.zeros(count)
        b[0] = 1.0
        for j in range(1, count):
            b[j] = sum((p * i - (j - i)) * a[i] * b[j - i] for i in range(1, j + 1)) / j
        return TailModel(tuple((head * b[j], p * k0 + j * step) for j in range(count)))

    def derivative(self) -> "TailModel":
        return TailModel(tuple((-k * A, k + 1) for A, k in self.terms))

    def laplacian(self, n: int) -> "TailModel":
        return TailModel(tuple((A * k * (k + 2 - n), k + 2) for A, k in self.terms))

    def to_json(self) -> dict:
        out = {"A": self.A, "kappa": self.kappa if self.terms else None}
        if len(self.terms) > 1:
            out["terms"] = [list(t) for t in self.terms]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "TailModel":
        if "terms" in data:
            return cls(tuple((float(A), float(k)) for A, k in data["terms"]))
        if data.get("kappa") is None:
            return cls.zero()
        return cls.single(float(data["A"]), float(data["kappa"]))


# --------------------------------------------------------------------------
# Profiles
# --------------------------------------------------------------------------

def default_nodes(scale: float = 1.0, reach: float = DEFAULT_REACH,
                  count: int = DEFAULT_NODE_COUNT) -> np.ndarray:
    """``count`` radii on ``[0, reach*scale]``: uniform on ``[0, scale]``, log-spaced beyond."""
    inner = count // 4
    uniform = np.linspace(0.0, scale, inner + 1)
    outer = np.geomspace(scale, reach * scale, count - inner)[1:]
    return np.concatenate([uniform, outer])


@dataclass(frozen=True)
class AlgebraicSum:
    """``sum_j c_j (1 + (r/L)^2)^(-k_j)``: a family closed under the radial Laplacian."""

    terms: tuple
    scale: float = 1.0

    def __call__(self, r):
        y = 1.0 + (np.asarray(r, dtype=float) / self.scale) ** 2
        return sum(c * y ** (-k) for c, k in self.terms)

    def derivative(self, r, order: int = 1):
        r = np.asarray(r, dtype=float)
        L2 = self.scale ** 2
        y = 1.0 + r * r / L2
        if order == 1:
            return sum(-2.0 * c * k * r / L2 * y ** (-k - 1.0) for c, k in self.terms)
        return sum(c * (-2.0 * k / L2 * y ** (-k - 1.0)
                        + 4.0 * k * (k + 1.0) * r * r / L2 ** 2 * y ** (-k - 2.0))
                   for c, k in self.terms)

    def laplacian_sum(self, n: int) -> "AlgebraicSum":
        # x^2 y^(-k-2) = y^(-k-1) - y^(-k-2) folds the result back into the family.
        L2 = self.scale ** 2
        out = {}
        for c, k in self.terms:
            a = 4.0 * k * (k + 1.0)
            out[k + 1.0] = out.get(k + 1.0, 0.0) + c * (a - 2.0 * k * n) / L2
            out[k + 2.0] = out.get(k + 2.0, 0.0) - c * a / L2
        return AlgebraicSum(tuple((c, k) for k, c in sorted(out.items()) if c != 0.0), self.scale)

    def scaled(self, factor: float) -> "AlgebraicSum":
        return AlgebraicSum(tuple((factor * c, k) for c, k in self.terms), self.scale)

    def tail(self) -> TailModel:
        L = self.scale
        total = TailModel.zero()
        for c, k in self.terms:
            total = total + TailModel.single(c * L ** (2 * k), 2 * k).times(
                TailModel(((1.0, 0.0), (L ** 2, 2.0))).power(-k))
        return total

    def profile(self, nodes=None) -> "RadialProfile":
        return RadialProfile(default_nodes(self.scale) if nodes is None else nodes, None,
                             self.tail(), func=self, scale=self.scale, closed_form=self)


class RadialProfile:
    """A radial function on ``R^n`` with an algebraic tail model.

    Parameters
    ----------
    nodes, values:
        Samples at strictly increasing radii starting at 0.
    tail:
        Behaviour beyond ``nodes[-1]``.
    func:
        Optional exact vectorized callable.  When present it is used for all
        evaluations and derivatives are taken by finite differences.
    scale:
        Length scale of the profile near the origin; sets quadrature
        breakpoints and the finite-difference step.
    origin_exponent:
        ``u(r) ~ r**(-origin_exponent)`` as ``r -> 0`` (0 for bounded profiles).
    closed_form:
        Optional :class:`AlgebraicSum`; when given, derivatives are exact.
    """

    def __init__(self, nodes, values, tail: TailModel, func: Optional[Callable] = None,
                 scale: float = 1.0, origin_exponent: float = 0.0,
                 fd_step: Optional[float] = None, closed_form: Optional[AlgebraicSum] = None):
        nodes = np.array(nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2 or nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0):
            raise DomainError("nodes must be 1-D, start at 0 and be strictly increasing")
        if values is None:
            if func is None:
                raise DomainError("a profile needs sample values or a callable")
        else:
            values = np.array(values, dtype=float)
            if values.shape != nodes.shape:
                raise DomainError("nodes and values must have equal length")
            values.setflags(write=False)
        if not scale > 0:
            raise DomainError("scale must be positive")
        nodes.setflags(write=False)
        self.nodes = nodes
        self._values = values
        self.tail = tail
        self.func = func
        self.scale = float(scale)
        self.origin_exponent = float(origin_exponent)
        self.fd_step = float(fd_step) if fd_step is not None else FD_REL_STEP * self.scale
        self._spline = None
        self.closed_form = closed_form

    @property
    def values(self) -> np.ndarray:
        """Samples at ``nodes`` (computed on first access for function-backed profiles)."""
        if self._values is None:
            inner = np.asarray(self.func(self.nodes[1:]), dtype=float)
            head = np.inf if self.origin_exponent > 0 else float(self.func(self.nodes[:1])[0])
            values = np.concatenate([[head], inner])
            values.setflags(write=False)
            self._values = values
        return self._values

    # construction -------------------------------------------------------

    @classmethod
    def from_function(cls, func: Callable, tail: TailModel, scale: float = 1.0,
                      nodes=None, origin_exponent: float = 0.0,
                      fd_step: Optional[float] = None) -> "RadialProfile":
        if nodes is None:
            nodes = default_nodes(scale)
        return cls(nodes, None, tail, func=func, scale=scale,
                   origin_exponent=origin_exponent, fd_step=fd_step)

    @classmethod
    def from_samples(cls, nodes, values, tail: TailModel, scale: float = 1.0) -> "RadialProfile":
        return cls(nodes, values, tail, scale=scale)

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def is_exact(self) -> bool:
        return self.func is not None

    # evaluation ---------------------------------------------------------

    def _weight_exponent(self) -> float:
        kappa = self.tail.kappa
        return 0.0 if not math.isfinite(kappa) else kappa

    def _build_spline(self):
        if len(self.nodes) < 5:
            raise DomainError("grid-backed profiles need at least 5 nodes for differentiation")
        y = (self.nodes / self.scale) ** 2
        weighted = self.values * (1.0 + y) ** (0.5 * self._weight_exponent())
        self._spline = CubicSpline(self.nodes, weighted, bc_type=((1, 0.0), "not-a-knot"))
        return self._spline

    def _grid_eval(self, r, order=0):
        spline = self._spline or self._build_spline()
        kappa = self._weight_exponent()
        L = self.scale
        y2 = (r / L) ** 2
        h = (1.0 + y2) ** (-0.5 * kappa)
        g = spline(r)
        if order == 0:
            return g * h
        h1 = -kappa * (r / L ** 2) * (1.0 + y2) ** (-0.5 * kappa - 1.0)
        g1 = spline(r, 1)
        if order == 1:
            return g1 * h + g * h1
        h2 = (-kappa / L ** 2 * (1.0 + y2) ** (-0.5 * kappa - 1.0)
              + kappa * (kappa + 2.0) * (r / L ** 2) ** 2 * (1.0 + y2) ** (-0.5 * kappa - 2.0))
        return spline(r, 2) * h + 2.0 * g1 * h1 + g * h2

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(r), dtype=float)
        inside = r <= self.r_max
        out = np.empty(r.shape)
        if np.any(inside):
            out[inside] = self._grid_eval(r[inside])
        if np.any(~inside):
            out[~inside] = self.tail(r[~inside])
        return out

    def _fd(self, r, order, h):
        f = self.func
        ap = lambda x: f(np.abs(x))  # even extension through the origin
        if order == 1:
            return (-ap(r + 2 * h) + 8 * ap(r + h) - 8 * ap(r - h) + ap(r - 2 * h)) / (12 * h)
        return (-ap(r + 2 * h) + 16 * ap(r + h) - 30 * ap(r) + 16 * ap(r - h)
                - ap(r - 2 * h)) / (12 * h * h)

    def derivative(self, r, order: int = 1):
        """First or second radial derivative."""
        if order not in (1, 2):
            raise DomainError("only first and second derivatives are supported")
        r = np.asarray(r, dtype=float)
        if self.closed_form is not None:
            return self.closed_form.derivative(r, order)
        if self.func is not None:
            return self._fd(r, order, self.fd_step)
        inside = r <= self.r_max
        out = np.empty(r.shape)
        if np.any(inside):
            out[inside] = self._grid_eval(r[inside], order)
        if np.any(~inside):
            t = self.tail.derivative()
            if order == 2:
                t = t.derivative()
            out[~inside] = t(r[~inside])
        return out

    def laplacian(self, r, n: int, step: Optional[float] = None):
        """``u'' + (n-1) u'/r`` with the limit ``n u''(0)`` at the origin."""
        r = np.asarray(r, dtype=float)
        if self.closed_form is not None:
            return self.closed_form.laplacian_sum(n)(r)
        if self.func is not None:
            h = self.fd_step if step is None else step
            d2 = self._fd(r, 2, h)
            d1 = self._fd(r, 1, h)
        else:
            d2 = self.derivative(r, 2)
            d1 = self.derivative(r, 1)
        safe = np.where(r > 0, r, 1.0)
        return np.where(r > 0, d2 + (n - 1) * d1 / safe, n * d2)

    def laplacian_noise(self, r, n: int):
        """Error estimate for the finite-difference Laplacian at step ``h``.

        Truncation is the Richardson estimate ``|Lap_h - Lap_2h| / 15`` of the
        fourth-order stencils; rounding assumes one ulp per sample, aligned
        across the stencil.
        """
        if self.func is None or self.closed_form is not None:
            return np.zeros(np.shape(r))
        r = np.asarray(r, dtype=float)
        h = self.fd_step
        trunc = np.abs(self.laplacian(r, n) - self.laplacian(r, n, 2 * h)) / 15.0
        size = np.abs(self.func(np.abs(r) + 2 * h)) + np.abs(self.func(np.abs(r)))
        safe = np.where(r > 0, r, np.inf)
        weight = np.where(r > 0, 64 / 12 / h ** 2 + (n - 1) * 18 / 12 / (h * safe), n * 64 / 12 / h ** 2)
        return trunc + FD_ROUNDING_ULPS * np.finfo(float).eps * size * weight

    # transformations ----------------------------------------------------

    def scaled(self, lam: float) -> "RadialProfile":
        """``r -> u(lam r)``."""
        if self.func is not None:
            f = self.func
            return RadialProfile.from_function(lambda r: f(lam * np.asarray(r)),
                                               self.tail.at_scale(lam), scale=self.scale / lam,
                                               origin_exponent=self.origin_exponent)
        return RadialProfile(self.nodes / lam, self.values, self.tail.at_scale(lam),
                             scale=self.scale / lam)

    def power(self, p: float) -> "RadialProfile":
        if self.func is not None:
            f = self.func
            return RadialProfile.from_function(lambda r: np.asarray(f(r)) ** p, self.tail.power(p),
                                               scale=self.scale, nodes=self.nodes,
                                               origin_exponent=p * self.origin_exponent)
        return RadialProfile(self.nodes, self.values ** p, self.tail.power(p), scale=self.scale)

    def linear_combination(self, a: float, other: "RadialProfile", b: float) -> "RadialProfile":
        """``a * self + b * other``."""
        tail = self.tail.scaled(a) + other.tail.scaled(b)
        scale = min(self.scale, other.scale)
        if self.func is not None and other.func is not None:
            f, g = self.func, other.func
            return RadialProfile.from_function(
                lambda r: a * np.asarray(f(r)) + b * np.asarray(g(r)), tail, scale=scale,
                origin_exponent=max(self.origin_exponent, other.origin_exponent))
        nodes = np.union1d(self.nodes, other.nodes)
        nodes = nodes[nodes <= min(self.r_max, other.r_max)]
        return RadialProfile(nodes, a * self(nodes) + b * other(nodes), tail, scale=scale)

    def resampled(self, nodes=None) -> "RadialProfile":
        """Grid-backed copy sampled on ``nodes``."""
        nodes = self.nodes if nodes is None else np.asarray(nodes, dtype=float)
        return RadialProfile(nodes, self(nodes), self.tail, scale=self.scale)

    def membership_integral(self, alpha: float) -> float:
        """Tail part of ``int r^(n-1) |u| / (1 + r^(n+alpha)) dr``, reduced to its decay test.

        Returns the effective decay exponent ``kappa + alpha``; it must be
        positive for the profile to lie in the weighted space of the
        fractional Laplacian.
        """
        return self.tail.kappa + alpha if not self.tail.is_zero() else math.inf

    # IO -----------------------------------------------------------------

    def to_csv(self, path) -> Path:
        """Write ``r,value`` rows and a JSON sidecar ``<stem>.json`` holding the tail."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "value"])
            for r, v in zip(self.nodes, self.values):
                writer.writerow([repr(float(r)), repr(float(v))])
        sidecar = path.with_suffix(".json")
        sidecar.write_text(json.dumps({**self.tail.to_json(), "scale": self.scale}, indent=2))
        return sidecar

    @classmethod
    def read_csv(cls, path) -> "RadialProfile":
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            rows = [(float(row["r"]), float(row["value"])) for row in reader]
        meta = json.loads(path.with_suffix(".json").read_text())
        nodes, values = map(np.array, zip(*rows))
        return cls(nodes, values, TailModel.from_json(meta), scale=float(meta.get("scale", 1.0)))


def power_profile(A: float, kappa: float) -> RadialProfile:
    """``A r**(-kappa)`` represented exactly at both ends."""
    return RadialProfile.from_function(lambda r: A * np.asarray(r, dtype=float) ** (-kappa),
                                       TailModel.single(A, kappa), origin_exponent=kappa)


def algebraic_profile(height: float, k: float, scale: float = 1.0) -> RadialProfile:
    """``height * (1 + (r/scale)^2)^(-k)`` with its full asymptotic tail series."""
    return AlgebraicSum(((float(height), float(k)),), float(scale)).profile()


def constant_profile(c: float) -> RadialProfile:
    return RadialProfile.from_function(lambda r: np.full(np.shape(r), float(c)),
                                       TailModel.single(c, 0.0))


# --------------------------------------------------------------------------
# Operators
# --------------------------------------------------------------------------

@dataclass
class OperatorResult:
    radii: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    converged: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.converged is None:
            self.converged = np.ones(len(self.values), dtype=bool)


def _check_dim(n: int) -> None:
    if int(n) != n or n < 2:
        raise DomainError(f"radial operators need an integer dimension n >= 2, got {n}")


def radial_laplacian(u: RadialProfile, n: int) -> RadialProfile:
    """``Delta u`` as a new profile (finite differences or spline derivatives)."""
    _check_dim(n)
    if u.closed_form is not None:
        return u.closed_form.laplacian_sum(n).profile(u.nodes)
    tail = u.tail.laplacian(n)
    if u.func is not None:
        return RadialProfile.from_function(lambda r: u.laplacian(r, n), tail, scale=u.scale,
                                           nodes=u.nodes, fd_step=10 * u.fd_step)
    if len(u.nodes) < 5:
        raise DomainError("radial_laplacian needs at least 5 nodes")
    return RadialProfile(u.nodes, u.laplacian(u.nodes, n), tail, scale=u.scale)


def _particular_tail(g_tail: TailModel, n: int) -> list:
    # -Delta w = A r^-kappa  has  w = -A r^(2-kappa) / ((2-kappa)(n-kappa)).
    terms = []
    for A, kappa in g_tail.terms:
        if abs(kappa - 2) > 1e-12 and abs(kappa - n) > 1e-12:
            terms.append((-A / ((2 - kappa) * (n - kappa)), kappa - 2))
    return terms


def inverse_laplacian_radial(g: RadialProfile, n: int, w0: float,
                             spec: QuadratureSpec | None = None) -> RadialProfile:
    """Radial solution of ``-Delta w = g`` with ``w(0) = w0``.

    Uses ``w(r) = w0 - 1/(n-2) int_0^r g(t) (t - t^(n-1) r^(2-n)) dt``
    (``n = 2``: ``w0 - int_0^r g(t) t log(r/t) dt``), the double integral
    collapsed by exchanging the order of integration.
    """
    _check_dim(n)
    spec = DEFAULT_SPEC if spec is None else spec
    if g.origin_exponent >= 2:
        raise DivergenceError(
            f"g ~ r^-{g.origin_exponent} at the origin; need origin exponent < 2")
    hints = [(0.0, 1.0 - g.origin_exponent)] if g.origin_exponent else []
    qspec = spec.with_singularities(hints) if hints else spec

    def one(r):
        if r == 0.0:
            return w0
        if n == 2:
            f = lambda t: g(t) * t * np.log(r / t)
            val = integrate(f, 0.0, r, qspec).value
            return w0 - val
        f = lambda t: g(t) * (t - t ** (n - 1) * r ** (2.0 - n))
        return w0 - integrate(f, 0.0, r, qspec).value / (n - 2)

    def w(r):
        r = np.asarray(r, dtype=float)
        flat = np.array([one(float(x)) for x in r.ravel()])
        return flat.reshape(r.shape)

    terms = _particular_tail(g.tail, n)
    r_end = g.r_max
    kappa_g = g.tail.kappa
    if n > 2 and kappa_g > n and g.func is not None:
        mass = integrate(lambda t: g(t) * t ** (n - 1), 0.0, np.inf, qspec).value
        terms.append((mass / (n - 2), float(n - 2)))
    particular = TailModel(tuple(terms))
    const = float(w(np.array([r_end]))[0] - particular(np.array([r_end]))[0])
    tail = particular + TailModel.single(const, 0.0)
    return RadialProfile(g.nodes, None, tail, func=w, scale=g.scale,
                         fd_step=5 * FD_REL_STEP * g.scale)


@lru_cache(maxsize=64)
def _frac_constant(alpha: float, n: int) -> float:
    return frac_lap_normalization(alpha, n)


def _sphere_second_difference(u: RadialProfile, rho: float, t: np.ndarray, n: int, u_rho: float):
    """``int_{S^(n-1)} (u(|x + t w|) - u(|x|)) dw`` for ``|x| = rho``, vectorized in ``t``."""
    if rho == 0.0:
        return sphere_area(n - 1) * (u(t) - u_rho)
    delta = (np.abs(t - rho) + u.scale) / np.sqrt(rho * t)
    counts = _kernels.panel_counts(delta)
    out = np.empty(t.shape)
    for c in np.unique(counts):
        sel = counts == c
        theta, w = _kernels.graded_theta_rule(delta[sel])
        ts = t[sel][:, None]
        d2 = (rho - ts) ** 2 + 4.0 * rho * ts * np.sin(0.5 * theta) ** 2
        vals = (u(np.sqrt(d2)) - u_rho) * np.sin(theta) ** (n - 2)
        out[sel] = np.sum(w * vals, axis=1)
    return sphere_area(n - 2) * out


def _bilaplacian_at(u: RadialProfile, rho: float, n: int) -> float:
    if u.closed_form is not None:
        return float(u.closed_form.laplacian_sum(n).laplacian_sum(n)(np.array([rho]))[0])
    return float(radial_laplacian(u, n).laplacian(np.array([rho]), n)[0])


def _frac_lap_at(u: RadialProfile, alpha: float, n: int, rho: float, spec: QuadratureSpec,
                 const: float):
    L = u.scale
    t0 = SMALL_T * L
    full = sphere_area(n - 1)
    u_rho = float(u(np.array([rho]))[0])
    T = max(u.r_max + rho, 3.0 * rho, 10.0 * L)

    def f(t):
        return t ** (-1.0 - alpha) * _sphere_second_difference(u, rho, t, n, u_rho)

    points = [t0 * 4.0 ** j for j in range(1, 40) if t0 * 4.0 ** j < T]
    points += [x for x in (rho - L, rho, rho + L) if t0 < x < T]
    head = integrate(f, t0, T, spec, points=points)
    lap = float(u.laplacian(np.array([rho]), n)[0])
    # Spherical mean of u(x + t w) - u(x) is t^2 Lap u/(2n) + t^4 Lap^2 u/(8n(n+2)) + O(t^6).
    small = full * (lap * t0 ** (2.0 - alpha) / (2.0 * n * (2.0 - alpha))
                    + _bilaplacian_at(u, rho, n) * t0 ** (4.0 - alpha)
                    / (8.0 * n * (n + 2.0) * (4.0 - alpha)))
    tail = -full * u_rho * T ** (-alpha) / alpha
    for A, kappa in u.tail.terms:
        tail += full * power_tail_integral(A, 1.0 + alpha, kappa, n, rho, T, 0.0)
    value = -const * (small + head.value + tail)
    return value, const * head.error, head.converged


def fractional_laplacian_radial(u: RadialProfile, alpha: float, n: int, eval_radii,
                                spec: QuadratureSpec | None = None) -> OperatorResult:
    """``(-Delta)^(alpha/2) u`` at ``eval_radii`` from the spherical second-difference form.

    ``(-Delta)^(alpha/2) u(x) = -C_{alpha,n} int_0^inf t^(-1-alpha)
    int_{S^(n-1)} (u(x + t w) - u(x)) dw dt``; the inner mean is already
    ``O(t^2)`` so no principal value is needed.  ``alpha = 2`` returns
    ``-Delta u``.
    """
    _check_dim(n)
    spec = DEFAULT_SPEC if spec is None else spec
    radii = np.atleast_1d(np.asarray(eval_radii, dtype=float))
    if np.any(radii < 0):
        raise DomainError("evaluation radii must be nonnegative")
    if not 0.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    if alpha == 2.0:
        vals = -u.laplacian(radii, n)
        return OperatorResult(radii, vals, u.laplacian_noise(radii, n))
    if u.origin_exponent > 0:
        raise DomainError("fractional Laplacian needs a profile bounded at the origin")
    if not u.membership_integral(alpha) > 0:
        raise DivergenceError(
            f"tail r^-{u.tail.kappa} is outside the weighted space: need kappa > -alpha = {-alpha}")
    const = _frac_constant(float(alpha), int(n))
    values = np.empty(len(radii))
    errors = np.empty(len(radii))
    ok = np.empty(len(radii), dtype=bool)
    for i, rho in enumerate(radii):
        values[i], errors[i], ok[i] = _frac_lap_at(u, alpha, n, float(rho), spec, const)
    if not np.all(ok):
        warnings.warn("fractional Laplacian quadrature did not converge at some radii",
                      RuntimeWarning, stacklevel=2)
    return OperatorResult(radii, values, errors, ok)


def fractional_laplacian_profile(u: RadialProfile, alpha: float, n: int,
                                 spec: QuadratureSpec | None = None,
                                 fd_step: Optional[float] = None) -> RadialProfile:
    """``(-Delta)^(alpha/2) u`` as a function-backed profile (evaluated on demand).

    The tail model is left empty: the result is meant for local use such as
    further differentiation or integration over a bounded ball.
    """
    spec = DEFAULT_SPEC if spec is None else spec

    def v(r):
        r = np.asarray(r, dtype=float)
        res = fractional_laplacian_radial(u, alpha, n, r.ravel(), spec)
        return res.values.reshape(r.shape)

    nodes = np.linspace(0.0, u.scale, 5)
    step = 1e-2 * u.scale if fd_step is None else fd_step
    return RadialProfile.from_function(v, TailModel.zero(), scale=u.scale, nodes=nodes,
                                       fd_step=step)


def _negated(v: RadialProfile) -> RadialProfile:
    if v.closed_form is not None:
        return v.closed_form.scaled(-1.0).profile(v.nodes)
    f = v.func
    return RadialProfile.from_function(lambda r: -np.asarray(f(r)), v.tail.scaled(-1.0),
                                       scale=v.scale, nodes=v.nodes, fd_step=v.fd_step)


@dataclass
class ChainStage:
    order: float
    radii: np.ndarray
    values: np.ndarray
    noise: np.ndarray
    minimum: float
    passed: bool


def superharmonic_chain(u: RadialProfile, params: ProblemParams, eval_radii,
                        spec: QuadratureSpec | None = None, tol: float = 1e-6) -> list[ChainStage]:
    """Values of the intermediate powers ``(-Delta)^(i + alpha/2) u`` at ``eval_radii``.

    For ``alpha < 2`` the stages are ``i = 0..m`` (the last one is the full
    order ``s``).  For ``alpha = 2`` they are ``(-Delta)^(i+1) u`` for
    ``i = 0..m-1``.  In the nonlocal case the integer powers are taken
    first by finite differences of the (smooth) input and the fractional
    power is applied last by quadrature, so no quadrature output is ever
    differentiated.  A stage passes when its minimum is ``>= -tol`` and its
    noise estimate stays below ``tol``.
    """
    n, m, alpha = params.n, params.m, params.alpha
    _check_dim(n)
    if m < 1 and alpha == 2.0:
        raise DomainError("superharmonic chain needs m >= 1 or alpha < 2")
    spec = CHAIN_SPEC if spec is None else spec
    radii = np.atleast_1d(np.asarray(eval_radii, dtype=float))
    if alpha < 2.0:
        count, order = m + 1, alpha / 2
    else:
        count, order = m, 1.0
    stages = []
    current = u
    carried = np.zeros(len(radii))
    for i in range(count):
        if alpha < 2.0:
            # (-Delta)^(i + alpha/2) u = (-Delta)^(alpha/2) of (-Delta)^i u.
            stage_spec = spec
            if i > 0:
                carried = carried + current.laplacian_noise(radii, n)
                current = _negated(radial_laplacian(current, n))
                if current.closed_form is None:
                    # Finite-difference input has a roundoff floor; ask only for what it can give.
                    stage_spec = QuadratureSpec(max(spec.rel_tol, 1e-8), max(spec.abs_tol, 1e-3 * tol),
                                                spec.max_depth, spec.singularities)
            res = fractional_laplacian_radial(current, alpha, n, radii, stage_spec)
            values, noise = res.values, res.errors + carried
        else:
            values = -current.laplacian(radii, n)
            noise = current.laplacian_noise(radii, n)
            current = _negated(radial_laplacian(current, n))
        minimum = float(np.min(values))
        worst_noise = float(np.max(noise)) if len(noise) else 0.0
        if worst_noise > tol:
            warnings.warn(f"stage of order {order + i}: differentiation noise {worst_noise:.2e} "
                          f"exceeds the budget {tol:.1e}", RuntimeWarning, stacklevel=2)
        stages.append(ChainStage(order + i, radii, np.asarray(values), np.asarray(noise),
                                 minimum, minimum >= -tol and worst_noise <= tol))
    return stages
