"""Exact FCFS results for negligible service time.

Every expression carrying a ``theta^-B`` denominator is multiplied through by
``theta^B`` so that large batteries do not overflow.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import pdtr

from .errors import DegenerateArgument, Infeasible, PenaltyDiverges
from .model import MAX_CAPACITY, ExpPolyDist, SystemParams, UpdateProcessStats, validate_params

# relative window around alpha = r - lambda where the limiting branch is used
DEGENERATE_ALPHA_WINDOW = 1e-7


def _check(p: SystemParams) -> SystemParams:
    return validate_params(p)


def fcfs_valid_rate(p: SystemParams) -> float:
    _check(p)
    th, n = p.theta, p.K + p.B
    return p.lam * (1.0 - th ** n) / (1.0 - th ** (n + 1))


def fcfs_peak_cdf(p: SystemParams) -> ExpPolyDist:
    """Peak-AoI law: an ``Exp(lambda)`` group and two Erlang-mixture groups at rate ``r``."""
    _check(p)
    th, K, B = p.theta, p.K, p.B
    den = 1.0 - th ** (K + B)
    terms = [(1.0 / den, 0, p.lam)]
    # (lambda a)^n / n! e^{-ra} = theta^n (ra)^n / n! e^{-ra}
    terms += [(th ** (B - 1 + n) / den, n, p.r) for n in range(1, K + 1)]
    terms += [(-th ** (K + B) / den, n, p.r) for n in range(0, K + 1)]
    return ExpPolyDist.from_terms(0.0, terms)


def fcfs_sojourn_cdf(p: SystemParams) -> ExpPolyDist:
    _check(p)
    th, K, B = p.theta, p.K, p.B
    den = 1.0 - th ** (K + B)
    atom = 1.0 - th ** B * (1.0 - th ** K) / den
    terms = [(th ** (B + n) / den, n, p.r) for n in range(0, K + 1)]
    terms += [(-th ** (K + B) / den, n, p.r) for n in range(0, K + 1)]
    return ExpPolyDist.from_terms(atom, terms)


def fcfs_stats(p: SystemParams) -> UpdateProcessStats:
    return UpdateProcessStats(fcfs_valid_rate(p), fcfs_peak_cdf(p), fcfs_sojourn_cdf(p))


def fcfs_avg_aoi(p: SystemParams) -> float:
    _check(p)
    th, K, B = p.theta, p.K, p.B
    bracket = -K * th ** K + (1.0 + th ** (K - 1) - 3.0 * th ** K + th ** (K + 1)) / (1.0 - th)
    return 1.0 / p.lam + th ** (B + 1) / (p.r * (1.0 - th ** (K + B + 1))) * bracket


def _check_alpha(p: SystemParams, alpha: float) -> None:
    if alpha == 0 or not math.isfinite(alpha):
        raise ValueError("alpha must be finite and nonzero")
    if alpha >= p.lam:
        raise PenaltyDiverges(
            f"alpha must be < lambda (alpha={alpha}, lambda={p.lam}); the penalty is unbounded")


def fcfs_avg_exp_penalty(p: SystemParams, alpha: float, branch: str = "auto") -> float:
    """Average of ``(e^(alpha*AoI) - 1)/alpha``.

    ``branch`` is ``"auto"``, ``"generic"`` or ``"limit"``; the limit branch is the
    analytic value at ``alpha = r - lambda`` and ``auto`` switches to it inside a
    ``1e-7 * r`` window.
    """
    _check(p)
    _check_alpha(p, alpha)
    lam, r, th, K, B = p.lam, p.r, p.theta, p.K, p.B
    scale = th ** B / (1.0 - th ** (K + B + 1))
    if branch == "auto":
        near = abs(alpha - (r - lam)) < DEGENERATE_ALPHA_WINDOW * r
        branch = "limit" if near else "generic"
    if branch == "limit":
        inner = (th ** (K + 2) - 2.0 * th + 1.0) / ((2.0 * th - 1.0) * (1.0 - th)) + K / th
        return 1.0 / (lam - alpha) + scale / r * inner
    if branch != "generic":
        raise ValueError(f"unknown branch {branch!r}")
    x = lam / (r - alpha)
    # (1 - x^(K+1)) / (r - alpha - lambda) == sum_{j<=K} x^j / (r - alpha)
    geo = float(np.sum(x ** np.arange(K + 1))) / (r - alpha)
    inner = th ** (K + 2) / (lam - alpha) + (1.0 - th) * geo - 1.0 / (r - alpha)
    return 1.0 / (lam - alpha) + r / alpha * scale * inner


def fcfs_violation_prob(p: SystemParams, beta: float) -> float:
    """Long-run fraction of time the AoI exceeds ``beta``."""
    _check(p)
    if not beta >= 0:
        raise ValueError("beta must be >= 0")
    lam, r, th, K, B = p.lam, p.r, p.theta, p.K, p.B
    scale = th ** B / (1.0 - th ** (K + B + 1))
    e_lam = math.exp(-lam * beta)
    # e^{-r b} sum_{i=1..K} (lam b)^i/i!  ==  e^{-(r-lam) b} P{1 <= Pois(lam b) <= K}
    head = math.exp(-(r - lam) * beta) * (pdtr(K, lam * beta) - e_lam) if K >= 1 else 0.0
    # theta^{K+1} (e^{-r b} sum_{i<=K} (r b)^i/i! - e^{-lam b})
    tail = th ** (K + 1) * (pdtr(K, r * beta) - e_lam)
    val = e_lam + scale * (head - tail)
    return min(1.0, max(0.0, val))


def fcfs_peak_violation_bound_check(p: SystemParams, beta: float):
    """Return ``(P{A > beta}, P{AoI > beta})``; the first bounds the second."""
    peak_tail = float(fcfs_peak_cdf(p).sf(beta))
    return peak_tail, fcfs_violation_prob(p, beta)


def min_battery_for_aoi(lam: float, r: float, K: int, delta_max: float) -> int:
    """Smallest battery ``B`` whose FCFS average AoI is at most ``delta_max``."""
    probe = validate_params(SystemParams(lam, r, K, 1))
    if not delta_max > 1.0 / lam:
        raise Infeasible(
            f"delta_max={delta_max} is not above 1/lambda={1 / lam}; no battery reaches it")
    th = probe.theta
    num = lam * delta_max - 1.0
    den = (lam * th ** (K + 1) * delta_max
           + (-K * th ** K - th ** K + (1.0 - th ** K) / (1.0 - th)) * th ** 2)
    arg = num / den
    if not arg > 0 or not math.isfinite(arg):
        raise DegenerateArgument(f"battery-sizing log argument is {arg}")
    b_real = math.log(arg) / math.log(th)
    B = max(1, math.ceil(b_real)) if math.isfinite(b_real) else 1
    if B > MAX_CAPACITY:
        raise Infeasible(f"delta_max={delta_max} needs a battery above {MAX_CAPACITY}")
    # enforce the bracketing contract against the closed form itself
    while B > 1 and fcfs_avg_aoi(probe.with_(B=B - 1)) <= delta_max:
        B -= 1
    while fcfs_avg_aoi(probe.with_(B=B)) > delta_max:
        B += 1
        if B > MAX_CAPACITY:
            raise Infeasible(f"no battery size up to {MAX_CAPACITY} meets delta_max={delta_max}")
    return B


def fcfs_interarrival_cdf(p: SystemParams, x):
    """CDF of the gap between arrivals of consecutive valid updates."""
    _check(p)
    th, n = p.theta, p.K + p.B
    x = np.asarray(x, dtype=float)
    den = 1.0 - th ** n
    return np.where(x < 0, 0.0,
                    1.0 + np.exp(-p.r * x) * th ** n / den - np.exp(-p.lam * x) / den)
