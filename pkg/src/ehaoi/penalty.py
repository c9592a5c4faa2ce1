"""Average penalty from the peak-AoI and sojourn laws.

The long-run average of ``g(AoI)`` equals ``rate * (E[G(A)] - E[G(T)])`` with
``G`` the antiderivative of ``g``.  ``E[G(V)]`` is evaluated as
``int g(t) S(t) dt`` so the atom at zero drops out and every named penalty
integrates term by term in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import pdtr

from .errors import MgfDiverges, NegativePenalty, QuadratureFailed, UnsupportedPenalty
from .model import (
    Custom,
    ExpPolyDist,
    Exponential,
    Linear,
    Penalty,
    Step,
    UpdateProcessStats,
    expoly_moment,
)

QUAD_TOL = 1e-10
TAIL_FRACTION = 1e-12
MAX_EVALUATIONS = 1_000_000
POLE_WINDOW = 1e-9


@dataclass(frozen=True)
class PenaltyResult:
    value: float
    method: str  # "exact" or "quadrature"
    est_error: float = 0.0


def _exp_term_integrals(d: ExpPolyDist, alpha: float) -> np.ndarray:
    # int (e^{alpha t} - 1)/alpha * (a t)^n/n! e^{-a t} dt
    #   = ((a/(a-alpha))^(n+1) - 1) / (a alpha)
    a, n = d.rates, d.powers.astype(float)
    return np.expm1(-(n + 1.0) * np.log1p(-alpha / a)) / (a * alpha)


def expected_G(d: ExpPolyDist, spec: Penalty) -> PenaltyResult:
    """``E[G(V)]`` for ``V ~ d``."""
    if isinstance(spec, Linear):
        return PenaltyResult(expoly_moment(d, 2) / 2.0, "exact")
    if isinstance(spec, Exponential):
        alpha = spec.alpha
        if len(d.rates) and np.any(alpha >= d.rates * (1.0 - POLE_WINDOW)):
            raise MgfDiverges(
                f"alpha={alpha} reaches the smallest decay rate {d.min_rate}; "
                "E[G] is infinite")
        return PenaltyResult(float(np.sum(d.coefs * _exp_term_integrals(d, alpha))), "exact")
    if isinstance(spec, Step):
        # int_beta^inf (a t)^n/n! e^{-a t} dt = P{Pois(a beta) <= n} / a
        a, n = d.rates, d.powers
        val = float(np.sum(d.coefs * pdtr(n, a * spec.beta) / a))
        return PenaltyResult(val, "exact")
    if isinstance(spec, Custom):
        return _quadrature(d, spec.value, spec.growth_rate, spec.growth_const)
    raise UnsupportedPenalty(f"no evaluation path for {spec!r}")


def _envelope_tail(d: ExpPolyDist, rate: float, const: float, T: float) -> float:
    # bound on int_T^inf g|S| with g <= const e^{rate t}
    a, n = d.rates, d.powers
    b = a - rate
    per = np.abs(d.coefs) * (a / b) ** n / b * pdtr(n, b * T)
    return const * float(np.sum(per))


def _quadrature(d: ExpPolyDist, g, growth_rate: float, growth_const: float) -> PenaltyResult:
    if len(d.rates) and growth_rate >= d.min_rate * (1.0 - POLE_WINDOW):
        raise MgfDiverges(
            f"declared growth rate {growth_rate} is not below the decay rate {d.min_rate}")
    if not len(d.rates):
        return PenaltyResult(0.0, "quadrature")

    def integrand(t):
        return float(g(t)) * float(d.sf(t))

    scale = 1.0 / d.min_rate
    edges = [0.0, scale]
    total, err, evals = 0.0, 0.0, 0
    while True:
        lo, hi = edges[-2], edges[-1]
        val, e, info = integrate.quad(integrand, lo, hi, epsabs=QUAD_TOL * 1e-2,
                                      epsrel=QUAD_TOL, limit=200, full_output=1)[:3]
        total += val
        err += e
        evals += info["neval"]
        if evals > MAX_EVALUATIONS:
            raise QuadratureFailed("evaluation budget exhausted before tail cutoff")
        if _envelope_tail(d, growth_rate, growth_const, hi) < TAIL_FRACTION * max(abs(total), 1e-300):
            break
        edges.append(hi * 2.0)
    err += _envelope_tail(d, growth_rate, growth_const, edges[-1])
    if err >= 1e-6 * max(abs(total), 1.0):
        raise QuadratureFailed(f"error estimate {err:g} misses the 1e-6 relative target")
    return PenaltyResult(total, "quadrature", err)


def average_penalty(stats: UpdateProcessStats, spec: Penalty) -> PenaltyResult:
    """Long-run average of ``g(AoI)`` from the valid-update rate and the two laws."""
    gp = expected_G(stats.peak, spec)
    gs = expected_G(stats.sojourn, spec)
    value = stats.valid_rate * (gp.value - gs.value)
    if value < -1e-9:
        raise NegativePenalty(f"average penalty {value} < 0; inconsistent distributions")
    method = "quadrature" if "quadrature" in (gp.method, gs.method) else "exact"
    est = stats.valid_rate * (gp.est_error + gs.est_error)
    return PenaltyResult(max(value, 0.0), method, est)


def avg_aoi_from_moments(stats: UpdateProcessStats) -> float:
    """Average AoI as ``rate/2 * (E[A^2] - E[T^2])``."""
    return stats.valid_rate / 2.0 * (expoly_moment(stats.peak, 2)
                                     - expoly_moment(stats.sojourn, 2))


def avg_peak_from_stats(stats: UpdateProcessStats) -> float:
    return expoly_moment(stats.peak, 1)


def peak_identity_gap(stats: UpdateProcessStats) -> float:
    """Relative gap between ``E[A]`` and ``1/rate + E[T]``; zero in steady state."""
    ea = avg_peak_from_stats(stats)
    rhs = 1.0 / stats.valid_rate + expoly_moment(stats.sojourn, 1)
    return abs(ea - rhs) / max(abs(rhs), math.ulp(1.0))
