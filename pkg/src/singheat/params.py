"""Exponents and constants of the radial nonlinear heat problem.

Everything in the package is driven by the pair (N, alpha): the space
dimension and the nonlinearity power of u_t = Laplace(u) + |u|^alpha u.
This module computes, from closed forms, every derived constant used by
the stationary, self-similar and PDE modules:

    beta      = (2/alpha) (N - 2 - 2/alpha)      amplitude^alpha of the
                homogeneous singular steady state B r^{-2/alpha}
    B         = beta^(1/alpha)                   its amplitude
    alpha0    = 4 / (N - 4 + 2 sqrt(N-1))        threshold below which the
                potential beta(alpha+1) r^{-2} is sub-Hardy
    gamma     = 4/alpha - N + 2                  damping of the log-radius
                oscillator
    Lambda    = (1/alpha - (N-2)/4)^2 - ((N-2)/2 - 1/alpha)
    mu1, mu2  = 1/alpha - (N-2)/4 -/+ sqrt(Lambda)
                half-rates of the two linear modes at the singular point
    rho       = 2 mu1                            rate of approach of
                r^{2/alpha} u to B as r -> 0 (slow mode)
    eta       = (N-2)/2 - sqrt((N-2)^2/4 - beta(alpha+1))
                singularity exponent of the perturbation envelope 1+r^{-eta}
    kappa_hat = rho * min(1, alpha)
    vartheta  = (N-2)/2 - eta
    F_star    = -alpha beta^{(alpha+2)/alpha} / (2 (alpha+2))
                minimum of the oscillator energy (attained at v = B)

The identity (N-2)^2/4 - beta(alpha+1) = 4 Lambda ties eta and rho to the
same discriminant; rho = 2 mu1 exactly, and (2 mu1, 2 mu2) are the roots
of w^2 - gamma w + alpha beta = 0.

Fields that would be complex for the given (N, alpha) are stored as NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DomainError

#: relative half-width of the guard band around regime boundaries
BOUNDARY_BAND = 1e-12


class Regime(Enum):
    """Admissibility regime of the pair (N, alpha)."""

    STRICT_SUB_HARDY = "StrictSubHardy"    # 2/(N-2) < alpha < alpha0
    WIDE_STATIONARY = "WideStationary"     # alpha0 <= alpha < 4/(N-2)
    INADMISSIBLE = "Inadmissible"          # outside (2/(N-2), 4/(N-2))
    BOUNDARY = "Boundary"                  # within the guard band of an edge

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Params:
    """All constants derived from (N, alpha). Immutable; NaN = not real."""

    N: int
    alpha: float
    alpha0: float
    beta: float
    B: float
    gamma: float
    Lambda: float
    mu1: float
    mu2: float
    rho: float
    eta: float
    kappa_hat: float
    vartheta: float
    F_star: float
    regime: Regime

    def as_dict(self):
        d = {
            "N": self.N, "alpha": self.alpha, "alpha0": self.alpha0,
            "beta": self.beta, "B": self.B, "gamma": self.gamma,
            "Lambda": self.Lambda, "mu1": self.mu1, "mu2": self.mu2,
            "rho": self.rho, "eta": self.eta, "kappa_hat": self.kappa_hat,
            "vartheta": self.vartheta, "F_star": self.F_star,
            "regime": str(self.regime),
        }
        return d


def _classify(alpha, lo, hi, alpha0):
    band_lo, band_hi, band_a0 = BOUNDARY_BAND * lo, BOUNDARY_BAND * hi, BOUNDARY_BAND * alpha0
    if alpha <= lo or alpha >= hi:
        return Regime.INADMISSIBLE
    if abs(alpha - lo) < band_lo or abs(alpha - hi) < band_hi:
        return Regime.BOUNDARY
    if alpha < alpha0 - band_a0:
        return Regime.STRICT_SUB_HARDY
    if alpha >= alpha0:
        # the wide regime is closed on the left, so an exact hit counts
        return Regime.WIDE_STATIONARY
    return Regime.BOUNDARY


def derive(N: int, alpha: float) -> Params:
    """Compute every derived constant for dimension N >= 3 and alpha > 0."""
    if not isinstance(N, (int,)) or isinstance(N, bool):
        raise DomainError(f"N must be an integer, got {N!r}")
    if N < 3:
        raise DomainError(f"N must be >= 3, got {N}")
    if not (alpha > 0) or not math.isfinite(alpha):
        raise DomainError(f"alpha must be a positive finite real, got {alpha!r}")

    lo = 2.0 / (N - 2)
    hi = 4.0 / (N - 2)
    alpha0 = 4.0 / (N - 4 + 2.0 * math.sqrt(N - 1.0))
    beta = (2.0 / alpha) * (N - 2.0 - 2.0 / alpha)
    gamma = 4.0 / alpha - N + 2.0
    Lambda = (1.0 / alpha - (N - 2.0) / 4.0) ** 2 - ((N - 2.0) / 2.0 - 1.0 / alpha)

    B = beta ** (1.0 / alpha) if beta > 0 else math.nan
    F_star = (
        -alpha * beta ** ((alpha + 2.0) / alpha) / (2.0 * (alpha + 2.0))
        if beta > 0 else math.nan
    )

    if Lambda >= 0.0:
        sq = math.sqrt(Lambda)
        mu1 = 1.0 / alpha - (N - 2.0) / 4.0 - sq
        mu2 = 1.0 / alpha - (N - 2.0) / 4.0 + sq
        rho = 2.0 * mu1
    else:
        mu1 = mu2 = rho = math.nan

    disc = (N - 2.0) ** 2 / 4.0 - beta * (alpha + 1.0)
    if disc >= 0.0:
        eta = (N - 2.0) / 2.0 - math.sqrt(disc)
        vartheta = (N - 2.0) / 2.0 - eta
    else:
        eta = vartheta = math.nan

    kappa_hat = rho * min(1.0, alpha) if not math.isnan(rho) else math.nan

    regime = _classify(alpha, lo, hi, alpha0)
    return Params(
        N=N, alpha=alpha, alpha0=alpha0, beta=beta, B=B, gamma=gamma,
        Lambda=Lambda, mu1=mu1, mu2=mu2, rho=rho, eta=eta,
        kappa_hat=kappa_hat, vartheta=vartheta, F_star=F_star, regime=regime,
    )


def characteristic_roots(p: Params) -> tuple[float, float]:
    """Roots of w^2 - gamma w + alpha beta = 0, in increasing order.

    These are the decay rates (2 mu1, 2 mu2) of the two linear modes of the
    log-radius oscillator around its nonzero equilibrium.  Real only in the
    strict sub-Hardy regime.
    """
    if p.regime is not Regime.STRICT_SUB_HARDY:
        raise DomainError(
            f"characteristic roots need regime StrictSubHardy, got {p.regime}"
        )
    b, c = p.gamma, p.alpha * p.beta
    disc = b * b - 4.0 * c
    if disc < 0.0:
        raise DomainError("complex characteristic roots")
    # stable quadratic formula: big root first, small one via the product
    big = 0.5 * (b + math.sqrt(disc))
    small = c / big
    return (small, big) if small <= big else (big, small)
