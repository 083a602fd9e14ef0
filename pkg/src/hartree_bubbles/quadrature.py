"""Adaptive 1-D quadrature with algebraic endpoint singularities.

Every convolution of radial functions in this package is reduced to nested
one-dimensional integrals.  :func:`integrate` is the workhorse: a batched
Gauss-Kronrod (7/15) adaptive scheme that

* removes declared algebraic endpoint singularities ``|x - c|**beta`` with the
  substitution ``x = c + h * u**k``, ``k = 1/(1 + beta)``;
* maps ``[a, inf)`` onto ``[0, 1)`` with ``x = a + t/(1 - t)``;
* evaluates the integrand on all active sub-intervals in one vectorized call.

:func:`angular_weight` is the radial reduction of ``|x - y|**(-exponent)``
over a sphere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import roots_jacobi

from . import _kernels
from .errors import DivergenceError, DomainError, QuadratureError

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Full 15-point node set on [-1, 1] and the matching weight vectors.
KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_IN_KRONROD = np.zeros(15)
_GAUSS_IN_KRONROD[[1, 3, 5, 9, 11, 13]] = np.concatenate([_WG[:3], _WG[:3][::-1]])
_GAUSS_IN_KRONROD[7] = _WG[3]

_EPS = np.finfo(float).eps
_MAX_INTERVALS = 20000

_stats = {"integrations": 0, "evaluations": 0, "nonconverged": 0}


def reset_stats() -> None:
    for key in _stats:
        _stats[key] = 0


def get_stats() -> dict:
    return dict(_stats)


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and limits for :func:`integrate`.

    ``singularities`` holds ``(location, exponent)`` pairs: the integrand
    behaves like ``|x - location|**exponent`` there (``exponent == 0`` means
    a logarithmic singularity).
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-14
    max_depth: int = 40
    singularities: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if not self.rel_tol > 0 or not self.abs_tol > 0:
            raise DomainError("rel_tol and abs_tol must be positive")
        if self.max_depth < 1:
            raise DomainError("max_depth must be >= 1")
        for _, beta in self.singularities:
            if beta <= -1:
                raise DivergenceError(f"singularity exponent {beta} <= -1 is not integrable")

    def with_singularities(self, hints) -> "QuadratureSpec":
        return QuadratureSpec(self.rel_tol, self.abs_tol, self.max_depth,
                              tuple(self.singularities) + tuple(hints))

    def tightened(self, factor: float = 0.5, extra_depth: int = 8) -> "QuadratureSpec":
        return QuadratureSpec(self.rel_tol * factor, self.abs_tol * factor,
                              self.max_depth + extra_depth, self.singularities)

    def loosened(self, rel_tol: float) -> "QuadratureSpec":
        return QuadratureSpec(max(rel_tol, self.rel_tol), self.abs_tol, self.max_depth,
                              self.singularities)


DEFAULT_SPEC = QuadratureSpec()


class QuadResult(NamedTuple):
    value: float
    error: float
    converged: bool = True
    evaluations: int = 0


def _substitution_power(beta: float) -> float:
    # beta < 0: exact removal of the leading power; 0 <= beta < 1 covers logs
    # and Hoelder-type kinks.
    if beta <= -1:
        raise DivergenceError(f"singularity exponent {beta} <= -1 is not integrable")
    if beta < 0:
        return 1.0 / (1.0 + beta)
    if beta < 1:
        return 2.0
    return 1.0


@dataclass
class _Segment:
    origin: float
    direction: float
    length: float
    power: float


def _build_segments(a: float, b: float, hints, points) -> list[_Segment]:
    tol = 8 * _EPS * max(abs(a), abs(b), 1.0)
    cuts = {a, b}
    for p in points:
        if a + tol < p < b - tol:
            cuts.add(float(p))
    for loc, _ in hints:
        if a + tol < loc < b - tol:
            cuts.add(float(loc))
    cuts = sorted(cuts)

    def exponent_at(x):
        found = [beta for loc, beta in hints if abs(loc - x) <= tol]
        return min(found) if found else None

    segments = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo <= 0:
            continue
        left, right = exponent_at(lo), exponent_at(hi)
        if left is not None and right is not None:
            mid = 0.5 * (lo + hi)
            segments.append(_Segment(lo, 1.0, mid - lo, _substitution_power(left)))
            segments.append(_Segment(hi, -1.0, hi - mid, _substitution_power(right)))
        elif right is not None:
            segments.append(_Segment(hi, -1.0, hi - lo, _substitution_power(right)))
        else:
            power = 1.0 if left is None else _substitution_power(left)
            segments.append(_Segment(lo, 1.0, hi - lo, power))
    return segments


def _kronrod_batch(f, seg_origin, seg_dir, seg_len, seg_pow, lo, hi):
    half = 0.5 * (hi - lo)
    centre = 0.5 * (hi + lo)
    u = centre[:, None] + half[:, None] * KRONROD_NODES[None, :]
    k = seg_pow[:, None]
    uk = u ** k
    x = seg_origin[:, None] + seg_dir[:, None] * seg_len[:, None] * uk
    jac = seg_len[:, None] * k * np.where(k == 1.0, 1.0, uk / np.where(u > 0, u, 1.0))
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        bad = x[~np.isfinite(fx)][0]
        raise QuadratureError(f"integrand returned a non-finite value at x={bad!r}")
    vals = fx * jac
    kron = half * (vals @ KRONROD_WEIGHTS)
    gauss = half * (vals @ _GAUSS_IN_KRONROD)
    mean = kron / np.where(half > 0, 2 * half, 1.0)
    resabs = np.abs(half) * (np.abs(vals) @ KRONROD_WEIGHTS)
    resasc = np.abs(half) * (np.abs(vals - mean[:, None]) @ KRONROD_WEIGHTS)
    err = np.abs(kron - gauss)
    scaled = np.where(
        (resasc > 0) & (err > 0),
        resasc * np.minimum(1.0, (200.0 * err / np.where(resasc > 0, resasc, 1.0)) ** 1.5),
        err,
    )
    floor = 50 * _EPS * resabs
    return kron, np.maximum(scaled, floor), x.size


def integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
              spec: QuadratureSpec | None = None,
              points: Sequence[float] = ()) -> QuadResult:
    """Integrate a vectorized callable ``f`` over ``[a, b]``.

    ``b`` may be ``numpy.inf``.  ``points`` are extra breakpoints (kinks,
    scale changes).  A singularity hint located at ``inf`` is interpreted in
    the mapped variable ``t = (x - a)/(1 + x - a)`` at ``t = 1``.

    Returns a :class:`QuadResult`; ``converged`` is False when ``max_depth``
    was exhausted, in which case ``value`` is the best available estimate.
    """
    spec = DEFAULT_SPEC if spec is None else spec
    if not a <= b:
        raise DomainError(f"integration bounds must satisfy a <= b, got {a}, {b}")
    if a == b:
        return QuadResult(0.0, 0.0, True, 0)

    hints = list(spec.singularities)
    if math.isinf(b):
        if math.isinf(a):
            raise DomainError("only semi-infinite ranges [a, inf) are supported")
        inner = f

        def f(t, inner=inner, a=a):
            s = 1.0 - t
            return inner(a + t / s) / (s * s)

        def to_t(x):
            return 1.0 if math.isinf(x) else (x - a) / (1.0 + x - a)

        hints = [(to_t(loc), beta) for loc, beta in hints]
        points = [to_t(p) for p in points if p > a]
        a, b = 0.0, 1.0

    segments = _build_segments(a, b, hints, points)
    s_origin = np.array([s.origin for s in segments])
    s_dir = np.array([s.direction for s in segments])
    s_len = np.array([s.length for s in segments])
    s_pow = np.array([s.power for s in segments])

    ids = np.arange(len(segments))
    lo = np.zeros(len(segments))
    hi = np.ones(len(segments))
    depth = np.zeros(len(segments), dtype=int)
    val, err, evaluations = _kronrod_batch(f, s_origin, s_dir, s_len, s_pow, lo, hi)
    converged = True
    while True:
        total = val.sum()
        err_total = err.sum()
        tol = max(spec.abs_tol, spec.rel_tol * abs(total))
        if err_total <= tol:
            break
        split = (err > tol / len(val)) & (depth < spec.max_depth)
        if not np.any(split) or len(val) + split.sum() > _MAX_INTERVALS:
            converged = False
            break
        mid = 0.5 * (lo[split] + hi[split])
        c_ids = np.concatenate([ids[split], ids[split]])
        c_lo = np.concatenate([lo[split], mid])
        c_hi = np.concatenate([mid, hi[split]])
        c_depth = np.concatenate([depth[split], depth[split]]) + 1
        c_val, c_err, n_eval = _kronrod_batch(
            f, s_origin[c_ids], s_dir[c_ids], s_len[c_ids], s_pow[c_ids], c_lo, c_hi)
        evaluations += n_eval
        keep = ~split
        ids = np.concatenate([ids[keep], c_ids])
        lo = np.concatenate([lo[keep], c_lo])
        hi = np.concatenate([hi[keep], c_hi])
        depth = np.concatenate([depth[keep], c_depth])
        val = np.concatenate([val[keep], c_val])
        err = np.concatenate([err[keep], c_err])

    _stats["integrations"] += 1
    _stats["evaluations"] += evaluations
    if not converged:
        _stats["nonconverged"] += 1
    return QuadResult(float(total), float(err_total), converged, evaluations)


# --------------------------------------------------------------------------
# Fixed rules
# --------------------------------------------------------------------------

@lru_cache(maxsize=256)
def gauss_jacobi_unit(num: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for ``int_0^1 v**beta g(v) dv``."""
    x, w = roots_jacobi(num, 0.0, beta)
    nodes = 0.5 * (1.0 + x)
    weights = w * 0.5 ** (beta + 1.0)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def sphere_area(dim: int) -> float:
    """Surface measure ``|S^dim|`` of the unit ``dim``-sphere in R^(dim+1)."""
    if dim < 0:
        raise DomainError("sphere dimension must be >= 0")
    return 2.0 * math.pi ** ((dim + 1) / 2) / math.gamma((dim + 1) / 2)


def mean_power_coefficients(exponent: float, n: int, count: int = 30) -> np.ndarray:
    """Series coefficients of the spherical mean of ``|x - t w|**(-exponent)``.

    For ``t > |x| = rho`` the mean over ``w`` in ``S^(n-1)`` equals
    ``t**(-exponent) * sum_k c_k (rho/t)**(2k)`` (a Gauss hypergeometric
    series with parameters ``e/2, e/2 - n/2 + 1; n/2``).
    """
    a = exponent / 2.0
    b = exponent / 2.0 - n / 2.0 + 1.0
    c = n / 2.0
    coeffs = np.empty(count)
    coeffs[0] = 1.0
    for k in range(1, count):
        coeffs[k] = coeffs[k - 1] * (a + k - 1) * (b + k - 1) / ((c + k - 1) * k)
    return coeffs


def power_tail_integral(A: float, kappa: float, exponent: float, n: int, rho: float,
                        cutoff: float, weight_power: float) -> float:
    """``int_cutoff^inf A r**(-kappa) r**weight_power * mean_w |x - r w|**(-exponent) dr``.

    ``|x| = rho``; the series converges geometrically in ``(rho/cutoff)**2``
    and is meant for ``rho <= cutoff / 3``.
    """
    if A == 0.0:
        return 0.0
    if rho >= cutoff:
        raise DomainError("tail series requires rho < cutoff")
    decay = kappa + exponent - weight_power - 1.0
    if decay <= 0:
        raise DivergenceError(
            f"tail diverges: need kappa + exponent > {weight_power + 1.0} "
            f"(kappa={kappa}, exponent={exponent})")
    coeffs = mean_power_coefficients(exponent, n)
    z = (rho / cutoff) ** 2
    total = 0.0
    zk = 1.0
    for k, ck in enumerate(coeffs):
        term = ck * zk / (decay + 2 * k)
        total += term
        zk *= z
        if k > 2 and abs(term) <= 1e-17 * abs(total):
            break
    return A * cutoff ** (-decay) * total


def angular_weight(rho, r, exponent: float, n: int, spec: QuadratureSpec | None = None,
                   diff=None):
    """``|S^(n-2)| int_0^pi (rho^2 + r^2 - 2 rho r cos t)**(-exponent/2) sin^(n-2) t dt``.

    This is the integral of ``|x - y|**(-exponent)`` over the sphere
    ``|y| = r`` (unit surface measure) for ``|x| = rho``.  ``diff`` may carry
    ``r - rho`` computed without cancellation.  Broadcasts over ``rho``/``r``.
    ``spec`` is accepted for interface symmetry; the angular rule is a fixed
    graded Gauss scheme accurate to ~1e-14.
    """
    if n < 2:
        raise DomainError("angular reduction needs n >= 2")
    rho_a, r_a = np.broadcast_arrays(np.asarray(rho, dtype=float), np.asarray(r, dtype=float))
    if np.any(rho_a < 0) or np.any(r_a < 0):
        raise DomainError("radii must be nonnegative")
    if diff is None:
        diff_a = r_a - rho_a
    else:
        diff_a = np.broadcast_to(np.asarray(diff, dtype=float), rho_a.shape)
    on_diag = (diff_a == 0) & (rho_a > 0)
    if exponent >= n - 1 and np.any(on_diag):
        raise DivergenceError(
            f"angular weight diverges at rho == r for exponent {exponent} >= n - 1 = {n - 1}")
    out = _kernels.power_average(rho_a.ravel(), r_a.ravel(), diff_a.ravel(), float(exponent), n)
    out = sphere_area(n - 2) * out.reshape(rho_a.shape)
    return float(out) if out.ndim == 0 else out
