"""Problem parameters for the higher-order Hartree equation and their classification.

The equation has order ``s = m + alpha/2`` in dimension ``n`` with a Riesz
weight ``|x|**(-sigma)``, an inner power ``p`` (inside the convolution) and
an outer power ``q``.  The criticality bookkeeping is

    tau = (n + 2s - sigma) - q (n - 2s)
    mu  = (2n - sigma)     - p (n - 2s)

and the exponents are critical exactly when both vanish.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import DomainError

CRITICAL_TOL = 1e-12


@dataclass(frozen=True)
class ProblemParams:
    n: int
    m: int
    alpha: float
    sigma: float
    p: Optional[float] = None
    q: Optional[float] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.n}")
        if int(self.m) != self.m or self.m < 0:
            raise DomainError(f"m must be a nonnegative integer, got {self.m}")
        if not 0.0 < self.alpha <= 2.0:
            raise DomainError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not 0.0 < self.sigma < self.n:
            raise DomainError(f"sigma must lie in (0, n) = (0, {self.n}), got {self.sigma}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))
        # Missing exponents default to the critical pair when it exists.
        if self.p is None or self.q is None:
            if self.s >= self.n / 2:
                raise DomainError("p and q have no critical default when s >= n/2")
            p_crit, q_crit = _critical_pair(self.n, self.s, self.sigma)
            if self.p is None:
                object.__setattr__(self, "p", p_crit)
            if self.q is None:
                object.__setattr__(self, "q", q_crit)
        if not self.p > 0 or not self.q > 0:
            raise DomainError(f"p and q must be positive, got p={self.p}, q={self.q}")

    @property
    def s(self) -> float:
        return self.m + self.alpha / 2.0

    @classmethod
    def from_order(cls, n: int, s: float, sigma: float, p: Optional[float] = None,
                   q: Optional[float] = None) -> "ProblemParams":
        """Split a total order ``s > 0`` as ``m + alpha/2`` with ``alpha`` in ``(0, 2]``."""
        if not s > 0:
            raise DomainError(f"order s must be positive, got {s}")
        m = max(math.ceil(s) - 1, 0)
        return cls(n=n, m=m, alpha=2.0 * (s - m), sigma=sigma, p=p, q=q)

    def with_exponents(self, p: float, q: float) -> "ProblemParams":
        return ProblemParams(self.n, self.m, self.alpha, self.sigma, p, q)

    def as_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "alpha": self.alpha, "s": self.s,
                "sigma": self.sigma, "p": self.p, "q": self.q}


@dataclass(frozen=True)
class Criticality:
    order_regime: str          # "sub", "critical_order" or "super"
    exponent_regime: str       # "subcritical", "critical", "supercritical", "mixed", "not-applicable"
    tau: Optional[float]
    mu: Optional[float]

    def as_dict(self) -> dict:
        return {"order_regime": self.order_regime, "exponent_regime": self.exponent_regime,
                "tau": self.tau, "mu": self.mu}


def _critical_pair(n: int, s: float, sigma: float) -> tuple[float, float]:
    gap = n - 2.0 * s
    return (2.0 * n - sigma) / gap, (n + 2.0 * s - sigma) / gap


def order_regime(params: ProblemParams) -> str:
    half = params.n / 2.0
    if abs(params.s - half) <= CRITICAL_TOL:
        return "critical_order"
    return "sub" if params.s < half else "super"


def critical_exponents(params: ProblemParams) -> tuple[float, float]:
    """``((2n - sigma)/(n - 2s), (n + 2s - sigma)/(n - 2s))``; needs ``s < n/2``."""
    if order_regime(params) != "sub":
        raise DomainError(
            f"critical exponents are undefined for s = {params.s} >= n/2 = {params.n / 2}")
    return _critical_pair(params.n, params.s, params.sigma)


def classify(params: ProblemParams) -> Criticality:
    regime = order_regime(params)
    if regime != "sub":
        return Criticality(regime, "not-applicable", None, None)
    n, s, sigma = params.n, params.s, params.sigma
    tau = (n + 2 * s - sigma) - params.q * (n - 2 * s)
    mu = (2 * n - sigma) - params.p * (n - 2 * s)
    if abs(tau) < CRITICAL_TOL:
        tau = 0.0
    if abs(mu) < CRITICAL_TOL:
        mu = 0.0
    if tau == 0.0 and mu == 0.0:
        exponents = "critical"
    elif tau >= 0.0 and mu >= 0.0:
        exponents = "subcritical"
    elif tau <= 0.0 and mu <= 0.0:
        exponents = "supercritical"
    else:
        exponents = "mixed"
    return Criticality(regime, exponents, tau, mu)


def is_critical(params: ProblemParams) -> bool:
    return classify(params).exponent_regime == "critical"
