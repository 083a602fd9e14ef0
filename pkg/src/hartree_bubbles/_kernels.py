"""Hot angular kernels: numba loops with vectorized numpy fallbacks.

Both kernels integrate a function of the chord length

    D(t)^2 = (r - rho)^2 + 4 rho r sin^2(t/2)

against ``sin^(n-2) t`` on ``[0, pi]``.  The peak at ``t = 0`` has width
``delta = |r - rho| / sqrt(rho r)``, so the rule is composite Gauss-Legendre
on panels ``[0, delta], [delta, 4 delta], [4 delta, 16 delta], ... , pi``.
Exactly on the diagonal (``r == rho``) the integrand behaves like
``t**(n - 2 - e)`` and a Gauss-Jacobi rule with that weight is used instead.

Callers pass ``diff = r - rho`` explicitly so that near-diagonal offsets
survive without cancellation.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from . import _accel
from ._accel import njit

GL_ORDER = 16
GJ_ORDER = 40
BETA_ORDER = 24
PANEL_RATIO = 4.0

GL_X, GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


@lru_cache(maxsize=256)
def _jacobi_theta_rule(beta: float):
    """Nodes/weights for ``int_0^pi t**beta g(t) dt``."""
    x, w = roots_jacobi(GJ_ORDER, 0.0, beta)
    theta = 0.5 * math.pi * (1.0 + x)
    weights = w * (0.5 * math.pi) ** (beta + 1.0)
    return theta, weights


@lru_cache(maxsize=256)
def _jacobi_unit_rule(beta: float):
    """Nodes/weights for ``int_0^1 v**beta g(v) dv``."""
    x, w = roots_jacobi(BETA_ORDER, 0.0, beta)
    return 0.5 * (1.0 + x), w * 0.5 ** (beta + 1.0)


# --------------------------------------------------------------------------
# numba versions
# --------------------------------------------------------------------------

@njit
def _panel_count(delta):
    if delta >= math.pi:
        return 2
    count = 1
    edge = delta
    while edge < math.pi:
        edge *= PANEL_RATIO
        count += 1
    return count


@njit
def _beta_head_nb(z, a, half_n, vx, vw):
    # z**a * int_0^1 v**(a-1) (1 + z v)**(-half_n) dv; half_n = n/2, so the
    # power is an integer power times at most one square root.
    whole = int(half_n)
    odd = half_n != whole
    acc = 0.0
    for j in range(vx.shape[0]):
        base = 1.0 + z * vx[j]
        p = base ** whole
        if odd:
            p *= math.sqrt(base)
        acc += vw[j] / p
    return z ** a * acc


@njit
def _green_beta_nb(w, a, b, half_n, ax, aw, bx, bw, head_a1, head_b1):
    # int_0^w s**(a-1) (1 + s)**(-half_n) ds
    if w <= 1.0:
        return _beta_head_nb(w, a, half_n, ax, aw)
    return head_a1 + head_b1 - _beta_head_nb(1.0 / w, b, half_n, bx, bw)


@njit
def _graded_sum_nb(kind, d, delta, prq, e, nm2, gl_x, gl_w, num,
                   a, b, half_n, ax, aw, bx, bw, head_a1, head_b1):
    # int_0^pi D^-e [F(num / D^2)] sin^(n-2) t dt on graded panels.  For
    # narrow peaks the factor |d|^-e delta^(n-2) is pulled out and applied in
    # log space so that D^-e cannot overflow when |d| is tiny.
    narrow = delta < math.pi
    npan = _panel_count(delta)
    acc = 0.0
    lo = 0.0
    inv = 1.0 / delta if narrow else 1.0
    for k in range(npan):
        if not narrow:
            hi = 0.5 * math.pi * (k + 1)
        elif k == 0:
            hi = delta
        else:
            hi = lo * PANEL_RATIO
        if hi > math.pi:
            hi = math.pi
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        for j in range(gl_x.shape[0]):
            t = mid + half * gl_x[j]
            s = math.sin(0.5 * t)
            if narrow:
                ratio = 1.0 + (2.0 * s * inv) ** 2
                val = ratio ** (-0.5 * e) * (math.sin(t) * inv) ** nm2
                d2 = d * d * ratio
            else:
                d2 = d * d + 4.0 * prq * s * s
                val = d2 ** (-0.5 * e) * math.sin(t) ** nm2
            if kind == 1:
                val *= _green_beta_nb(num / d2, a, b, half_n, ax, aw, bx, bw, head_a1, head_b1)
            acc += half * gl_w[j] * val
        lo = hi
        if lo >= math.pi:
            break
    if narrow:
        return acc * math.exp(-e * math.log(abs(d)) + nm2 * math.log(delta))
    return acc


@njit
def _power_average_nb(rho, r, diff, e, nm2, gl_x, gl_w, gj_t, gj_w, beta):
    m = rho.shape[0]
    out = np.empty(m)
    for i in range(m):
        p = rho[i]
        q = r[i]
        if p == 0.0 or q == 0.0:
            big = p if p > q else q
            # int_0^pi sin^(n-2) t dt times big**(-e)
            acc = 0.0
            for j in range(gl_x.shape[0]):
                t = 0.5 * math.pi * (1.0 + gl_x[j])
                acc += gl_w[j] * math.sin(t) ** nm2
            out[i] = 0.5 * math.pi * acc * big ** (-e)
            continue
        d = diff[i]
        prq = p * q
        if d == 0.0:
            acc = 0.0
            for j in range(gj_t.shape[0]):
                t = gj_t[j]
                s2 = math.sin(0.5 * t)
                val = (4.0 * prq * s2 * s2) ** (-0.5 * e) * math.sin(t) ** nm2
                acc += gj_w[j] * val * t ** (-beta)
            out[i] = acc
            continue
        delta = abs(d) / math.sqrt(prq)
        out[i] = _graded_sum_nb(0, d, delta, prq, e, nm2, gl_x, gl_w, 0.0,
                                0.0, 0.0, 0.0, gl_x, gl_w, gl_x, gl_w, 0.0, 0.0)
    return out


@njit
def _green_average_nb(rho, r, diff, n, alpha, R, gl_x, gl_w, gj_t, gj_w, beta,
                      ax, aw, bx, bw, head_a1, head_b1):
    m = rho.shape[0]
    out = np.empty(m)
    nm2 = n - 2
    a = 0.5 * alpha
    b = 0.5 * (n - alpha)
    half_n = 0.5 * n
    e = n - alpha
    R2 = R * R
    for i in range(m):
        p = rho[i]
        q = r[i]
        d = diff[i]
        prq = p * q
        num = (R2 - p * p) * (R2 - q * q) / R2
        if num <= 0.0:
            out[i] = 0.0
            continue
        if d == 0.0 and p > 0.0:
            if beta <= -1.0:
                # Angular average of |x-y|^(alpha-n) diverges on the diagonal for alpha <= 1.
                out[i] = math.inf
                continue
            acc = 0.0
            for j in range(gj_t.shape[0]):
                t = gj_t[j]
                s2 = math.sin(0.5 * t)
                d2 = 4.0 * prq * s2 * s2
                g = d2 ** (-0.5 * e) * _green_beta_nb(num / d2, a, b, half_n, ax, aw, bx, bw,
                                                     head_a1, head_b1)
                acc += gj_w[j] * g * math.sin(t) ** nm2 * t ** (-beta)
            out[i] = acc
            continue
        if prq == 0.0:
            delta = 10.0
        else:
            delta = abs(d) / math.sqrt(prq)
        out[i] = _graded_sum_nb(1, d, delta, prq, e, nm2, gl_x, gl_w, num,
                                a, b, half_n, ax, aw, bx, bw, head_a1, head_b1)
    return out


# --------------------------------------------------------------------------
# numpy versions
# --------------------------------------------------------------------------

def panel_counts(delta: np.ndarray) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    with np.errstate(divide="ignore"):
        raw = np.ceil(np.log(math.pi / np.maximum(delta, 1e-300)) / math.log(PANEL_RATIO)) + 1
    counts = np.where(delta >= math.pi, 2, np.maximum(raw, 1)).astype(int)
    # Guard the float edge of the ceil: make sure the last edge reaches pi.
    edge = delta * PANEL_RATIO ** (counts - 1)
    counts = np.where((delta < math.pi) & (edge < math.pi), counts + 1, counts)
    return counts


def graded_theta_rule(delta: np.ndarray, order: int = GL_ORDER):
    """Graded composite Gauss rule on ``[0, pi]`` for each peak width in ``delta``.

    Returns ``(theta, weights)`` of shape ``(len(delta), P * order)``, padded
    with zero weights where a row needs fewer than ``P`` panels.
    """
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    if order == GL_ORDER:
        gx, gw = GL_X, GL_W
    else:
        gx, gw = np.polynomial.legendre.leggauss(order)
    counts = panel_counts(delta)
    pmax = int(counts.max()) if counts.size else 1
    k = np.arange(pmax)
    wide = delta >= math.pi
    lo = np.where(k[None, :] == 0, 0.0, delta[:, None] * PANEL_RATIO ** (k[None, :] - 1))
    hi = delta[:, None] * PANEL_RATIO ** k[None, :]
    lo = np.where(wide[:, None], 0.5 * math.pi * k[None, :], lo)
    hi = np.where(wide[:, None], 0.5 * math.pi * (k[None, :] + 1), hi)
    lo = np.minimum(lo, math.pi)
    hi = np.minimum(hi, math.pi)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    theta = mid[:, :, None] + half[:, :, None] * gx[None, None, :]
    weights = half[:, :, None] * gw[None, None, :]
    m = len(delta)
    return theta.reshape(m, -1), weights.reshape(m, -1)


def _graded_sum_np(d, delta, prq, e, nm2, weight=None):
    """Vectorized twin of the numba graded sum; ``weight(d2)`` multiplies the kernel."""
    out = np.empty(d.shape[0])
    counts = panel_counts(delta)
    narrow = delta < math.pi
    for c in np.unique(counts):
        for nar in (True, False):
            sel = (counts == c) & (narrow == nar)
            if not np.any(sel):
                continue
            t, w = graded_theta_rule(delta[sel])
            ds = d[sel][:, None]
            if nar:
                inv = 1.0 / delta[sel][:, None]
                ratio = 1.0 + (2.0 * np.sin(0.5 * t) * inv) ** 2
                vals = ratio ** (-0.5 * e) * (np.sin(t) * inv) ** nm2
                d2 = ds * ds * ratio
            else:
                d2 = ds * ds + 4.0 * prq[sel][:, None] * np.sin(0.5 * t) ** 2
                vals = d2 ** (-0.5 * e) * np.sin(t) ** nm2
            if weight is not None:
                vals = vals * weight(d2, sel)
            acc = np.sum(w * vals, axis=1)
            if nar:
                acc = acc * np.exp(-e * np.log(np.abs(d[sel])) + nm2 * np.log(delta[sel]))
            out[sel] = acc
    return out


def _power_average_np(rho, r, diff, e, nm2, beta):
    out = np.empty(rho.shape[0])
    axis0 = (rho == 0.0) | (r == 0.0)
    if np.any(axis0):
        big = np.maximum(rho[axis0], r[axis0])
        sin_int = math.sqrt(math.pi) * math.gamma((nm2 + 1) / 2) / math.gamma(nm2 / 2 + 1)
        out[axis0] = sin_int * big ** (-e)
    diag = (diff == 0.0) & ~axis0
    if np.any(diag) and beta <= -1.0:
        out[diag] = np.inf
    elif np.any(diag):
        t, w = _jacobi_theta_rule(beta)
        prq = (rho[diag] * r[diag])[:, None]
        s2 = np.sin(0.5 * t)[None, :] ** 2
        vals = (4.0 * prq * s2) ** (-0.5 * e) * np.sin(t)[None, :] ** nm2 * t[None, :] ** (-beta)
        out[diag] = vals @ w
    rest = ~(diag | axis0)
    if np.any(rest):
        p, q, d = rho[rest], r[rest], diff[rest]
        prq = p * q
        delta = np.abs(d) / np.sqrt(prq)
        out[rest] = _graded_sum_np(d, delta, prq, e, nm2)
    return out


def beta_head(z, a, half_n):
    """``z**a * int_0^1 v**(a-1) (1 + z v)**(-half_n) dv`` for ``0 <= z <= 1``."""
    vx, vw = _jacobi_unit_rule(a - 1.0)
    z = np.asarray(z, dtype=float)
    return z ** a * ((1.0 + z[..., None] * vx) ** (-half_n) @ vw)


def green_beta(w, n, alpha):
    """``int_0^w s**(alpha/2 - 1) (1 + s)**(-n/2) ds`` (vectorized)."""
    a, b, half_n = 0.5 * alpha, 0.5 * (n - alpha), 0.5 * n
    w = np.asarray(w, dtype=float)
    small = w <= 1.0
    out = np.empty(w.shape)
    out[small] = beta_head(w[small], a, half_n)
    big = ~small
    if np.any(big):
        head_a1 = float(beta_head(1.0, a, half_n))
        head_b1 = float(beta_head(1.0, b, half_n))
        out[big] = head_a1 + head_b1 - beta_head(1.0 / w[big], b, half_n)
    return out


def _green_average_np(rho, r, diff, n, alpha, R, beta):
    out = np.zeros(rho.shape[0])
    R2 = R * R
    num = (R2 - rho ** 2) * (R2 - r ** 2) / R2
    e = n - alpha
    nm2 = n - 2
    live = num > 0
    diag = live & (diff == 0.0) & (rho > 0)
    if np.any(diag) and beta <= -1.0:
        out[diag] = np.inf
    elif np.any(diag):
        t, w = _jacobi_theta_rule(beta)
        prq = (rho[diag] * r[diag])[:, None]
        d2 = 4.0 * prq * np.sin(0.5 * t)[None, :] ** 2
        g = d2 ** (-0.5 * e) * green_beta(num[diag][:, None] / d2, n, alpha)
        out[diag] = (g * np.sin(t)[None, :] ** nm2 * t[None, :] ** (-beta)) @ w
    rest = live & ~diag
    if np.any(rest):
        p, q, d = rho[rest], r[rest], diff[rest]
        prq = p * q
        with np.errstate(divide="ignore", invalid="ignore"):
            delta = np.where(prq > 0, np.abs(d) / np.sqrt(np.where(prq > 0, prq, 1.0)), 10.0)
        num_rest = num[rest]
        weight = lambda d2, sel: green_beta(num_rest[sel][:, None] / d2, n, alpha)
        with np.errstate(divide="ignore", over="ignore"):
            out[rest] = _graded_sum_np(d, delta, prq, e, nm2, weight)
    return out


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def power_average(rho, r, diff, e, n):
    """``int_0^pi D**(-e) sin^(n-2) t dt`` for flat float arrays."""
    beta = float(n - 2 - e)
    if _accel.backend() == "numba":
        if beta > -1:
            gj_t, gj_w = _jacobi_theta_rule(beta)
        else:
            gj_t, gj_w = np.zeros(1), np.zeros(1)
        return _power_average_nb(rho, r, diff, float(e), n - 2, GL_X, GL_W, gj_t, gj_w, beta)
    return _power_average_np(rho, r, diff, float(e), n - 2, beta)


def green_average(rho, r, diff, n, alpha, R):
    """``int_0^pi G(x, y) sin^(n-2) t dt`` with the Green constant omitted.

    ``G = D**(alpha - n) * int_0^{w} s**(alpha/2-1) (1+s)**(-n/2) ds`` with
    ``w = (R^2 - rho^2)(R^2 - r^2) / (R^2 D^2)``.
    """
    beta = float(alpha - 2.0)
    if _accel.backend() == "numba":
        a, b, half_n = 0.5 * alpha, 0.5 * (n - alpha), 0.5 * n
        ax, aw = _jacobi_unit_rule(a - 1.0)
        bx, bw = _jacobi_unit_rule(b - 1.0)
        head_a1 = float(beta_head(1.0, a, half_n))
        head_b1 = float(beta_head(1.0, b, half_n))
        if beta > -1:
            gj_t, gj_w = _jacobi_theta_rule(beta)
        else:
            gj_t, gj_w = np.zeros(1), np.zeros(1)
        return _green_average_nb(rho, r, diff, int(n), float(alpha), float(R), GL_X, GL_W,
                                 gj_t, gj_w, beta, ax, aw, bx, bw, head_a1, head_b1)
    return _green_average_np(rho, r, diff, int(n), float(alpha), float(R), beta)
