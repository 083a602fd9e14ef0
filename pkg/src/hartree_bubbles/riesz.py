"""Riesz potentials of radial profiles and the Hartree nonlinearity.

For a radial ``u`` and ``|x| = rho``

    (|.|^(-e) * u)(rho) = int_0^inf u(r) r^(n-1) W(rho, r) dr

where ``W`` is :func:`~hartree_bubbles.quadrature.angular_weight`.  The
``r`` integral is split at ``r = rho`` and written in the offset variable
``d = r - rho`` on both sides, so the diagonal behaviour ``|d|^(n-1-e)`` is
resolved without cancellation.  Past ``R_c = max(10 rho, r_max)`` the tail
model is integrated analytically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, DomainError
from .parameters import ProblemParams, classify
from .quadrature import (DEFAULT_SPEC, QuadratureSpec, angular_weight, integrate,
                         power_tail_integral, sphere_area)
from .radial_ops import RadialProfile, TailModel, algebraic_profile, power_profile
from .special_constants import (bubble_integral, bubble_normalization, hls_constant,
                                riesz_constant)

TAIL_FACTOR = 10.0
POTENTIAL_NODES_INNER = 48
POTENTIAL_NODES_OUTER = 112


@dataclass
class PotentialResult:
    radii: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    tail_fraction: np.ndarray
    converged: bool = True


def _geometric_points(length: float, scale: float) -> list[float]:
    pts, x = [], scale / 64
    while x < length:
        pts.append(x)
        x *= 4.0
    return pts


def _potential_at(u: RadialProfile, e: float, n: int, rho: float, spec: QuadratureSpec):
    L = u.scale
    cutoff = max(TAIL_FACTOR * rho, u.r_max)
    full = sphere_area(n - 1)
    origin_beta = n - 1 - u.origin_exponent
    diag_beta = n - 1 - e
    converged = True
    if rho == 0.0:
        f = lambda r: u(r) * r ** (n - 1 - e) * full
        res = integrate(f, 0.0, cutoff, spec.with_singularities([(0.0, origin_beta - e)]),
                        points=_geometric_points(cutoff, L))
        head, err, converged = res.value, res.error, res.converged
    else:
        def right(d):
            r = rho + d
            return u(r) * r ** (n - 1) * angular_weight(rho, r, e, n, diff=d)

        def left(d):
            r = rho - d
            return u(r) * r ** (n - 1) * angular_weight(rho, r, e, n, diff=-d)

        hints = [(0.0, diag_beta)]
        res_r = integrate(right, 0.0, cutoff - rho, spec.with_singularities(hints),
                          points=_geometric_points(cutoff - rho, min(L, rho)))
        left_hints = hints + ([(rho, origin_beta)] if u.origin_exponent else [])
        res_l = integrate(left, 0.0, rho, spec.with_singularities(left_hints),
                          points=_geometric_points(rho, min(L, rho)))
        head = res_r.value + res_l.value
        err = res_r.error + res_l.error
        converged = res_r.converged and res_l.converged
    tail = 0.0
    for A, kappa in u.tail.terms:
        tail += full * power_tail_integral(A, kappa, e, n, rho, cutoff, n - 1.0)
    return head + tail, err, tail, converged


def riesz_potential(u: RadialProfile, exponent: float, n: int, eval_radii,
                    spec: QuadratureSpec | None = None) -> PotentialResult:
    """``(|.|^(-exponent) * u)`` at the radii ``eval_radii``."""
    if int(n) != n or n < 2:
        raise DomainError(f"radial potentials need an integer dimension n >= 2, got {n}")
    if not 0.0 < exponent < n:
        raise DomainError(f"kernel exponent must lie in (0, n), got {exponent}")
    if not u.tail.is_zero() and not u.tail.kappa + exponent > n:
        raise DivergenceError(
            f"potential diverges at infinity: need kappa + exponent > n "
            f"({u.tail.kappa} + {exponent} <= {n})")
    if u.origin_exponent + exponent >= 2 * n:
        raise DivergenceError("potential diverges at the origin")
    if u.origin_exponent >= n:
        raise DivergenceError(f"profile ~ r^-{u.origin_exponent} is not locally integrable")
    spec = DEFAULT_SPEC if spec is None else spec
    radii = np.atleast_1d(np.asarray(eval_radii, dtype=float))
    if np.any(radii < 0):
        raise DomainError("evaluation radii must be nonnegative")
    values = np.empty(len(radii))
    errors = np.empty(len(radii))
    fraction = np.empty(len(radii))
    ok = True
    for i, rho in enumerate(radii):
        val, err, tail, conv = _potential_at(u, float(exponent), int(n), float(rho), spec)
        values[i], errors[i] = val, err
        fraction[i] = tail / val if val != 0 else 0.0
        ok = ok and conv
    return PotentialResult(radii, values, errors, fraction, ok)


def verify_convolution_identity(n: int, gamma_exp: float, sample_radii=(0, 0.5, 1, 3, 10),
                                spec: QuadratureSpec | None = None) -> float:
    """Worst relative error of ``|.|^(-2g) * (1+|.|^2)^(-(n-g)) = I(g) (1+|x|^2)^(-g)``."""
    if not 0.0 < gamma_exp < n / 2:
        raise DomainError(f"gamma must lie in (0, n/2), got {gamma_exp}")
    radii = np.asarray(sample_radii, dtype=float)
    u = algebraic_profile(1.0, n - gamma_exp)
    res = riesz_potential(u, 2 * gamma_exp, n, radii, spec)
    exact = bubble_integral(gamma_exp, n) * (1.0 + radii ** 2) ** (-gamma_exp)
    return float(np.max(np.abs(res.values / exact - 1.0)))


def composition_values(n: int, a1: float, a2: float, eval_radii,
                       spec: QuadratureSpec | None = None):
    """Left and right sides of the Riesz composition ``R_a1 |.|^(a1-n) * R_a2 |.|^(a2-n) = R_(a1+a2) |.|^(a1+a2-n)``."""
    for name, a in (("alpha1", a1), ("alpha2", a2), ("alpha1 + alpha2", a1 + a2)):
        if not 0.0 < a < n:
            raise DomainError(f"{name}={a} must lie in (0, n)")
    radii = np.atleast_1d(np.asarray(eval_radii, dtype=float))
    if np.any(radii <= 0):
        raise DomainError("composition is evaluated away from the origin")
    u = power_profile(riesz_constant(a2, n), n - a2)
    res = riesz_potential(u, n - a1, n, radii, spec)
    lhs = riesz_constant(a1, n) * res.values
    rhs = riesz_constant(a1 + a2, n) * radii ** (-(n - a1 - a2))
    return lhs, rhs


def verify_composition(n: int, a1: float, a2: float, eval_radii=(0.5, 1.0, 2.0),
                       spec: QuadratureSpec | None = None) -> float:
    lhs, rhs = composition_values(n, a1, a2, eval_radii, spec)
    return float(np.max(np.abs(lhs / rhs - 1.0)))


def potential_profile(v: RadialProfile, exponent: float, n: int,
                      spec: QuadratureSpec | None = None, nodes=None) -> RadialProfile:
    """``|.|^(-exponent) * v`` sampled on a node set and splined, with a matched tail.

    The tail exponent is ``exponent`` when ``v`` is integrable
    (``kappa > n``) and ``kappa + exponent - n`` otherwise; its amplitude is
    matched at the last node. For integrable ``v`` the first correction terms
    of the far-field expansion are fitted as well.
    """
    L = v.scale
    if nodes is None:
        nodes = np.concatenate([
            np.linspace(0.0, L, POTENTIAL_NODES_INNER + 1),
            np.geomspace(L, v.r_max, POTENTIAL_NODES_OUTER)[1:],
        ])
    res = riesz_potential(v, exponent, n, nodes, spec)
    kappa_v = v.tail.kappa
    kappa = exponent if kappa_v > n else kappa_v + exponent - n
    if v.tail.is_zero():
        tail = TailModel.zero() if not np.any(res.values) else TailModel.single(
            res.values[-1] * nodes[-1] ** exponent, exponent)
    elif kappa_v > n:
        # Far-field expansion of a radial potential: next terms r^-(e+2) and r^-(kappa_v+e-n).
        exps = sorted({kappa, kappa + 2.0, kappa_v + exponent - n})
        idx = [int(np.argmin(np.abs(nodes - nodes[-1] / 2 ** k))) for k in range(len(exps))]
        M = np.array([[nodes[i] ** -k for k in exps] for i in idx])
        amps = np.linalg.lstsq(M, res.values[idx], rcond=1e-12)[0]
        tail = TailModel(tuple(zip(amps, exps)))
    else:
        tail = TailModel.single(res.values[-1] * nodes[-1] ** kappa, kappa)
    return RadialProfile.from_samples(nodes, res.values, tail, scale=L)


def _check_inner_integrability(u: RadialProfile, p: float, sigma: float, n: int) -> None:
    # Standing assumption: int u^p |x|^(-sigma) dx < infinity.
    if not p * u.tail.kappa + sigma > n:
        raise DivergenceError(
            f"int u^p |x|^-sigma diverges: need p*kappa + sigma > n "
            f"({p}*{u.tail.kappa} + {sigma} <= {n})")


def hartree_apply(u: RadialProfile, params: ProblemParams,
                  spec: QuadratureSpec | None = None) -> RadialProfile:
    """``f_1(u) = (|.|^(-sigma) * u^p) u^q`` as a function-backed profile."""
    n, sigma, p, q = params.n, params.sigma, params.p, params.q
    if u.is_exact and np.any(np.asarray(u(u.nodes[:8])) < 0):
        raise DomainError("hartree nonlinearity needs a nonnegative profile")
    _check_inner_integrability(u, p, sigma, n)
    potential = potential_profile(u.power(p), sigma, n, spec)
    uq = u.power(q)
    tail = potential.tail.times(uq.tail)
    return RadialProfile.from_function(lambda r: potential(r) * uq(r), tail, scale=u.scale,
                                       nodes=u.nodes)


def _radial_mass(v: RadialProfile, n: int, spec: QuadratureSpec) -> float:
    """``int_{R^n} v dx`` for a profile with tail model."""
    full = sphere_area(n - 1)
    cutoff = v.r_max
    head = integrate(lambda r: v(r) * r ** (n - 1), 0.0, cutoff, spec,
                     points=_geometric_points(cutoff, v.scale)).value
    tail = sum(power_tail_integral(A, kappa, 0.0, n, 0.0, cutoff, n - 1.0)
               for A, kappa in v.tail.terms)
    return full * (head + tail)


def hartree_energy(u: RadialProfile, sigma: float, s: float, n: int,
                   spec: QuadratureSpec | None = None) -> float:
    """``int (|.|^(-sigma) * |u|^p) |u|^p`` with ``p = (2n - sigma)/(n - 2s)``."""
    spec = DEFAULT_SPEC if spec is None else spec
    if not 0.0 < s < n / 2:
        raise DomainError("the Hartree norm needs 0 < s < n/2")
    p = (2 * n - sigma) / (n - 2 * s)
    up = u.power(p)
    _check_inner_integrability(u, p, sigma, n)
    potential = potential_profile(up, sigma, n, spec)
    integrand = RadialProfile.from_function(lambda r: potential(r) * up(r),
                                            potential.tail.times(up.tail), scale=u.scale,
                                            nodes=u.nodes)
    return _radial_mass(integrand, n, spec)


def hartree_norm(u: RadialProfile, sigma: float, s: float, n: int,
                 spec: QuadratureSpec | None = None) -> float:
    """The weighted norm ``(int (V_sigma * |u|^p) |u|^p)^(1/(2p))`` at the critical ``p``."""
    if u.is_exact and np.all(np.asarray(u(u.nodes)) == 0):
        return 0.0
    p = (2 * n - sigma) / (n - 2 * s)
    return hartree_energy(_magnitude(u), sigma, s, n, spec) ** (1.0 / (2 * p))


def _magnitude(u: RadialProfile) -> RadialProfile:
    tail = u.tail.scaled(-1.0) if u.tail.A < 0 else u.tail
    if u.is_exact:
        return RadialProfile.from_function(lambda r: np.abs(u(r)), tail, scale=u.scale,
                                           nodes=u.nodes)
    return RadialProfile(u.nodes, np.abs(u.values), tail, scale=u.scale)


def bubble_profile(params: ProblemParams, amplitude: float = 1.0, mu: float = 1.0) -> RadialProfile:
    """``amplitude * mu^k C (1 + mu^2 r^2)^(-k)`` with ``k = (n - 2s)/2``."""
    crit = classify(params)
    if crit.exponent_regime == "critical":
        C = bubble_normalization(params)
    else:
        p_crit = (2 * params.n - params.sigma) / (params.n - 2 * params.s)
        q_crit = (params.n + 2 * params.s - params.sigma) / (params.n - 2 * params.s)
        C = bubble_normalization(params.with_exponents(p_crit, q_crit))
    k = (params.n - 2 * params.s) / 2
    return algebraic_profile(amplitude * mu ** k * C, k, scale=1.0 / mu)


def gradient_energy(u: RadialProfile, n: int, spec: QuadratureSpec | None = None) -> float:
    """``||grad u||_2^2`` for a radial profile."""
    spec = DEFAULT_SPEC if spec is None else spec
    tail = u.tail.derivative().power(2)
    dsq = RadialProfile.from_function(lambda r: u.derivative(r) ** 2, tail, scale=u.scale,
                                      nodes=u.nodes)
    return _radial_mass(dsq, n, spec)


def verify_energy_identity(n: int = 3, s: float = 1.0, sigma: float = 2.0,
                           spec: QuadratureSpec | None = None, amplitude: float = 1.0) -> dict:
    """Compare the Dirichlet energy of the bubble with its Hartree energy, and the two routes to ``S``.

    At critical exponents ``||grad Q||^2 = ||Q||^(2p)`` and
    ``S = ||grad Q||^((n+2s-sigma)/(2n-sigma)) = ||Q||^((n+2s-sigma)/(n-2s))``.
    """
    if s != 1:
        raise DomainError("the energy identity is checked for s = 1 only")
    params = ProblemParams.from_order(n, s, sigma)
    Q = bubble_profile(params, amplitude)
    grad_sq = gradient_energy(Q, n, spec)
    energy = hartree_energy(Q, sigma, s, n, spec)
    sharp = hls_constant(sigma, s, n)
    s_from_grad = grad_sq ** (0.5 * (n + 2 * s - sigma) / (2 * n - sigma))
    p = (2 * n - sigma) / (n - 2 * s)
    norm = energy ** (1.0 / (2 * p))
    s_from_norm = norm ** ((n + 2 * s - sigma) / (n - 2 * s))
    return {
        "grad_energy": grad_sq,
        "hartree_energy": energy,
        "identity_rel_error": abs(grad_sq - energy) / abs(energy),
        "S_sharp": sharp,
        "S_from_gradient": s_from_grad,
        "S_from_norm": s_from_norm,
        "S_rel_error": abs(s_from_grad - sharp) / sharp,
        "S_norm_rel_error": abs(s_from_norm - sharp) / sharp,
    }
