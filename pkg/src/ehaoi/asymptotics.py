"""Average penalties in the unbounded-buffer limit.

Each entry is its battery-unlimited value plus a constant times ``theta^B``.
"""
from __future__ import annotations

import math

from .errors import PenaltyDiverges, UnsupportedPenalty
from .model import Discipline, Exponential, Linear, Penalty, Step, SystemParams, validate_params


def _split(p: SystemParams, d: Discipline, spec: Penalty):
    """Return ``(limit, coefficient)`` with penalty = limit + coefficient * theta^B."""
    validate_params(p)
    lam, r, th = p.lam, p.r, p.theta
    d = Discipline(d)
    if isinstance(spec, Linear):
        coef = th ** 2 / lam
        if d is Discipline.FCFS:
            coef /= 1.0 - th
        return 1.0 / lam, coef
    if isinstance(spec, Exponential):
        a = spec.alpha
        if a >= lam:
            raise PenaltyDiverges(f"alpha must be < lambda (alpha={a}, lambda={lam})")
        if d is Discipline.FCFS:
            if r - a - lam <= 0.0:
                raise PenaltyDiverges(
                    f"with an unbounded FCFS buffer alpha must be < r - lambda = {r - lam}")
            return 1.0 / (lam - a), r / a * ((1.0 - th) / (r - a - lam) - 1.0 / (r - a))
        return 1.0 / (lam - a), lam / (r - a) ** 2
    if isinstance(spec, Step):
        b = spec.beta
        if d is Discipline.FCFS:
            return math.exp(-lam * b), -math.expm1(-lam * b) * math.exp(-(r - lam) * b)
        return math.exp(-lam * b), lam * b * math.exp(-r * b)
    raise UnsupportedPenalty("only linear, exponential and step penalties have closed forms")


def asymptotic_penalty(p: SystemParams, d: Discipline, spec: Penalty) -> float:
    limit, coef = _split(p, d, spec)
    return limit + coef * p.theta ** p.B


def asymptotic_limit(p: SystemParams, d: Discipline, spec: Penalty) -> float:
    """Value approached as the battery grows without bound."""
    return _split(p, d, spec)[0]


def battery_decay_rate(p: SystemParams, d: Discipline, spec: Penalty) -> float:
    """Ratio of consecutive excess penalties ``(C(B+1) - C_inf) / (C(B) - C_inf)``."""
    limit = asymptotic_limit(p, d, spec)
    c_b = asymptotic_penalty(p, d, spec)
    c_b1 = asymptotic_penalty(p.with_(B=p.B + 1), d, spec)
    return (c_b1 - limit) / (c_b - limit)
