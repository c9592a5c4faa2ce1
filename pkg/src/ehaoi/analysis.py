"""Discipline-dispatching front end over the closed forms and the penalty engine."""
from __future__ import annotations

import math
from typing import Dict

from . import fcfs, lcfs
from .errors import PenaltyDiverges, UnsupportedPenalty
from .model import (Discipline, Exponential, Linear, Penalty, Step, SystemParams,
                    UpdateProcessStats)
from .penalty import average_penalty, avg_peak_from_stats

# theorem route vs engine route must agree to this relative tolerance
AGREEMENT_TOL = 1e-9


def update_stats(p: SystemParams, d: Discipline) -> UpdateProcessStats:
    return fcfs.fcfs_stats(p) if Discipline(d) is Discipline.FCFS else lcfs.lcfs_stats(p)


def valid_rate(p: SystemParams, d: Discipline) -> float:
    if Discipline(d) is Discipline.FCFS:
        return fcfs.fcfs_valid_rate(p)
    return lcfs.lcfs_valid_rate(p)


def violation_prob(p: SystemParams, d: Discipline, beta: float) -> float:
    if Discipline(d) is Discipline.FCFS:
        return fcfs.fcfs_violation_prob(p, beta)
    return lcfs.lcfs_violation_prob(p, beta)


def theorem_penalty(p: SystemParams, d: Discipline, spec: Penalty) -> float:
    """Average penalty from the dedicated closed form for ``spec``."""
    is_fcfs = Discipline(d) is Discipline.FCFS
    if isinstance(spec, Linear):
        return fcfs.fcfs_avg_aoi(p) if is_fcfs else lcfs.lcfs_avg_aoi(p)
    if isinstance(spec, Exponential):
        if is_fcfs:
            return fcfs.fcfs_avg_exp_penalty(p, spec.alpha)
        return lcfs.lcfs_avg_exp_penalty(p, spec.alpha)
    if isinstance(spec, Step):
        return violation_prob(p, d, spec.beta)
    raise UnsupportedPenalty(f"no dedicated closed form for {spec.id}")


def engine_penalty(p: SystemParams, d: Discipline, spec: Penalty) -> float:
    if isinstance(spec, Exponential) and spec.alpha >= p.lam:
        raise PenaltyDiverges(f"alpha must be < lambda (alpha={spec.alpha}, lambda={p.lam})")
    return average_penalty(update_stats(p, d), spec).value


def relative_gap(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def analyze_point(p: SystemParams, d: Discipline, spec: Penalty,
                  beta: float | None = None) -> Dict[str, object]:
    """Every closed-form metric for one parameter point.

    Raises ``PenaltyDiverges`` when the requested penalty has no finite average.
    """
    d = Discipline(d)
    stats = update_stats(p, d)
    thm = theorem_penalty(p, d, spec)
    eng = engine_penalty(p, d, spec)
    if beta is None and isinstance(spec, Step):
        beta = spec.beta
    rec: Dict[str, object] = {
        "theta": p.theta, "lambda": p.lam, "r": p.r, "K": p.K, "B": p.B,
        "discipline": d.value, "penalty": spec.id,
        "alpha": spec.alpha if isinstance(spec, Exponential) else math.nan,
        "beta": beta if beta is not None else math.nan,
        "valid_rate": stats.valid_rate,
        "avg_aoi": theorem_penalty(p, d, Linear()),
        "peak_mean": avg_peak_from_stats(stats),
        "avg_penalty": thm,
        "engine_penalty": eng,
        "violation_prob": violation_prob(p, d, beta) if beta is not None else math.nan,
        "agreement": bool(relative_gap(thm, eng) <= AGREEMENT_TOL),
    }
    return rec
