"""Exact LCFS results for negligible service time (newest packet served first,
oldest discarded on overflow)."""
from __future__ import annotations

import math

from scipy.special import pdtr, pdtrc

from .fcfs import _check_alpha
from .model import ExpPolyDist, SystemParams, UpdateProcessStats, validate_params


def _norm(p: SystemParams) -> float:
    # theta^B * [(theta^-B - 1)(1 + theta) + (1 - theta^(K+1))]
    th, K, B = p.theta, p.K, p.B
    return (1.0 - th ** B) * (1.0 + th) + th ** B * (1.0 - th ** (K + 1))


def lcfs_valid_rate(p: SystemParams) -> float:
    """Rate of packets that are still the freshest when delivered.

    Uses the rate form with the leading ``lambda``: a packet is valid if it finds
    energy, or if energy arrives before the next status packet.
    """
    validate_params(p)
    th, K, B = p.theta, p.K, p.B
    return p.lam * _norm(p) / ((1.0 - th ** (K + B + 1)) * (1.0 + th))


def lcfs_sojourn_cdf(p: SystemParams) -> ExpPolyDist:
    validate_params(p)
    th, K, B = p.theta, p.K, p.B
    w = th ** B * (1.0 - th ** (K + 1)) / _norm(p)
    return ExpPolyDist.from_terms(1.0 - w, [(w, 0, p.lam + p.r)])


def lcfs_peak_cdf(p: SystemParams) -> ExpPolyDist:
    validate_params(p)
    lam, r, th, K, B = p.lam, p.r, p.theta, p.K, p.B
    N = _norm(p)
    tB = th ** B
    s = lam + r
    # (lam a)^k = (theta/(1+theta))^k (s a)^k ;  (r a)^k = (1/(1+theta))^k (s a)^k
    q_lam = th / (1.0 + th)
    q_r = 1.0 / (1.0 + th)
    terms = [
        ((1.0 - th ** (K + B + 1)) * (1.0 + th) / N, 0, lam),
        (tB * (1.0 + th) * (K / th + (th ** (K + 1) - 2.0 + 1.0 / th) / (1.0 - th)) / N, 0, r),
    ]
    pre = tB * (1.0 + th) / N
    c1 = K / th + 1.0 / th - th / (1.0 - th)
    c3 = th ** (K + 2) / (1.0 - th)
    # braces carry a minus sign relative to the other two groups
    terms.append((-pre * (th ** (K + 1) - 1.0) / (1.0 + th), 0, s))
    terms += [(-pre * c1 * q_lam ** k, k, s) for k in range(K + 1)]
    # (lam a)^(k+1)/k! = (k+1) (lam a)^(k+1)/(k+1)!
    terms += [(pre / th * (k + 1) * q_lam ** (k + 1), k + 1, s) for k in range(K)]
    terms += [(-pre * c3 * q_r ** k, k, s) for k in range(K + 1)]
    return ExpPolyDist.from_terms(0.0, terms)


def lcfs_stats(p: SystemParams) -> UpdateProcessStats:
    return UpdateProcessStats(lcfs_valid_rate(p), lcfs_peak_cdf(p), lcfs_sojourn_cdf(p))


def lcfs_avg_aoi(p: SystemParams) -> float:
    validate_params(p)
    th, K, B = p.theta, p.K, p.B
    bracket = (1.0 - th) * th ** (K + 1) / (1.0 + th) ** (K + 1) - th ** (K + 1) + th
    return 1.0 / p.lam + th ** B / (p.r * (1.0 - th ** (K + B + 1))) * bracket


def lcfs_avg_exp_penalty(p: SystemParams, alpha: float) -> float:
    validate_params(p)
    _check_alpha(p, alpha)
    lam, r, th, K, B = p.lam, p.r, p.theta, p.K, p.B
    scale = th ** B / (1.0 - th ** (K + B + 1))
    inner = (1.0 + (lam / (lam + r - alpha)) ** (K + 1) * (r - lam) / (lam - alpha)
             - th ** (K + 1) * (r - alpha) / (lam - alpha))
    return 1.0 / (lam - alpha) + lam / (r - alpha) ** 2 * scale * inner


def lcfs_violation_prob(p: SystemParams, beta: float) -> float:
    validate_params(p)
    if not beta >= 0:
        raise ValueError("beta must be >= 0")
    lam, r, th, K, B = p.lam, p.r, p.theta, p.K, p.B
    scale = th ** B / (1.0 - th ** (K + B + 1))
    e_lam, e_r = math.exp(-lam * beta), math.exp(-r * beta)
    c3 = th ** (K + 2) / (1.0 - th)
    # every e^{lam beta} factor is absorbed into a Poisson tail
    body = (c3 * (e_r - e_lam * pdtr(K, r * beta))
            + (K + (1.0 - 2.0 * th) / (1.0 - th)) * e_r * pdtrc(K, lam * beta)
            + (lam * beta * e_r * pdtr(K - 1, lam * beta) if K >= 1 else 0.0))
    return min(1.0, max(0.0, e_lam + scale * body))
