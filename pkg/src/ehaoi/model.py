"""Domain types, parameter validation and the penalty-function family."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Optional, Tuple

import numpy as np
from scipy import integrate
from scipy.special import gammaln, poch, xlogy

from .errors import (
    InvalidCapacity,
    InvalidRate,
    NonIntegrable,
    UnstableSystem,
)

MAX_CAPACITY = 500


class Discipline(str, Enum):
    FCFS = "fcfs"
    LCFS = "lcfs"


@dataclass(frozen=True)
class SystemParams:
    """Arrival rates and capacities of the two-queue system.

    ``lam`` is the status-packet rate, ``r`` the energy-packet rate, ``K`` the
    data-buffer size and ``B`` the battery size in energy packets.  ``mu`` is the
    exponential service rate; ``None`` selects the negligible-service regime.
    """

    lam: float
    r: float
    K: int
    B: int
    mu: Optional[float] = None

    @property
    def theta(self) -> float:
        return self.lam / self.r

    def with_(self, **changes) -> "SystemParams":
        kw = dict(lam=self.lam, r=self.r, K=self.K, B=self.B, mu=self.mu)
        kw.update(changes)
        return SystemParams(**kw)

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "r": self.r, "K": self.K, "B": self.B,
                "mu": self.mu, "theta": self.theta}


def _is_int(x) -> bool:
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


def validate_params(p: SystemParams, require_mu: bool = False) -> SystemParams:
    """Return ``p`` unchanged, or raise the error naming the violated invariant."""
    rates = [("lambda", p.lam), ("r", p.r)]
    if p.mu is not None:
        rates.append(("mu", p.mu))
    for name, v in rates:
        if not (isinstance(v, (int, float, np.floating, np.integer))
                and math.isfinite(v) and v > 0):
            raise InvalidRate(f"{name} must be a finite positive rate, got {v!r}")
    if require_mu and p.mu is None:
        raise InvalidRate("mu is required for the non-negligible service regime")
    if not _is_int(p.B) or p.B < 1:
        raise InvalidCapacity(f"battery capacity B must be an integer >= 1, got {p.B!r}")
    if not _is_int(p.K) or p.K < 0:
        raise InvalidCapacity(f"buffer capacity K must be an integer >= 0, got {p.K!r}")
    if p.B > MAX_CAPACITY or p.K > MAX_CAPACITY:
        raise InvalidCapacity(f"K and B are capped at {MAX_CAPACITY}")
    if p.lam >= p.r:
        raise UnstableSystem(
            f"theta = lambda/r must be < 1 (lambda={p.lam}, r={p.r})")
    return p


# --------------------------------------------------------------------------
# penalty functions


def _expm1_minus_x(y):
    # e^y - 1 - y without cancellation for small |y|
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 1e-2
    ys = np.where(small, y, 0.0)
    series = ys * ys / 2.0 * (1 + ys / 3.0 * (1 + ys / 4.0 * (1 + ys / 5.0 * (1 + ys / 6.0))))
    direct = np.expm1(np.where(small, 0.0, y)) - np.where(small, 0.0, y)
    return np.where(small, series, direct)


class Penalty:
    """Base class of the penalty family ``g``; ``G`` is its antiderivative."""

    def value(self, delta):
        raise NotImplementedError

    def antiderivative(self, x):
        raise NotImplementedError

    @property
    def id(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Linear(Penalty):
    def value(self, delta):
        return np.asarray(delta, dtype=float) * 1.0

    def antiderivative(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * x * x

    @property
    def id(self) -> str:
        return "linear"


@dataclass(frozen=True)
class Exponential(Penalty):
    alpha: float

    def __post_init__(self):
        if not math.isfinite(self.alpha) or self.alpha == 0:
            raise ValueError("exponential penalty needs a finite nonzero alpha")

    def value(self, delta):
        a = self.alpha
        return np.expm1(a * np.asarray(delta, dtype=float)) / a

    def antiderivative(self, x):
        a = self.alpha
        return _expm1_minus_x(a * np.asarray(x, dtype=float)) / (a * a)

    @property
    def id(self) -> str:
        return f"exp({self.alpha:g})"


@dataclass(frozen=True)
class Step(Penalty):
    beta: float

    def __post_init__(self):
        if not math.isfinite(self.beta) or self.beta < 0:
            raise ValueError("step threshold beta must be finite and >= 0")

    def value(self, delta):
        return (np.asarray(delta, dtype=float) > self.beta).astype(float)

    def antiderivative(self, x):
        return np.maximum(0.0, np.asarray(x, dtype=float) - self.beta)

    @property
    def id(self) -> str:
        return f"step({self.beta:g})"


@dataclass(frozen=True)
class Custom(Penalty):
    """User penalty ``g`` with a declared envelope ``g(t) <= growth_const * e^(growth_rate*t)``.

    The envelope is what lets the engine pick a finite integration horizon.
    ``g`` must be nonnegative on ``[0, inf)``.
    """

    func: Callable[[float], float]
    growth_rate: float
    growth_const: float = 1.0
    label: str = "custom"

    def value(self, delta):
        d = np.asarray(delta, dtype=float)
        if d.ndim == 0:
            return float(self.func(float(d)))
        return np.array([self.func(float(v)) for v in d.ravel()]).reshape(d.shape)

    def antiderivative(self, x):
        xs = np.asarray(x, dtype=float)

        def one(v):
            if v <= 0:
                return 0.0
            val, _ = integrate.quad(self.func, 0.0, v, limit=200)
            return val

        if xs.ndim == 0:
            return one(float(xs))
        return np.array([one(float(v)) for v in xs.ravel()]).reshape(xs.shape)

    @property
    def id(self) -> str:
        return self.label


# alias naming the union of penalty kinds
PenaltySpec = Penalty


def penalty_value(spec: Penalty, delta):
    return spec.value(delta)


def penalty_antiderivative(spec: Penalty, x):
    return spec.antiderivative(x)


def parse_penalty(kind: str, alpha: Optional[float] = None,
                  beta: Optional[float] = None) -> Penalty:
    kind = kind.lower()
    if kind == "linear":
        return Linear()
    if kind in ("exp", "exponential"):
        if alpha is None:
            raise ValueError("exponential penalty requires alpha")
        return Exponential(float(alpha))
    if kind == "step":
        if beta is None:
            raise ValueError("step penalty requires beta")
        return Step(float(beta))
    raise ValueError(f"unknown penalty kind {kind!r}")


# --------------------------------------------------------------------------
# exponential-polynomial distributions


def poisson_pmf(n, x):
    """``x^n e^-x / n!`` evaluated in log space; ``pmf(0, 0) == 1``."""
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    return np.exp(xlogy(n, x) - x - gammaln(n + 1.0))


@dataclass(frozen=True)
class ExpPolyDist:
    """Nonnegative law with survivor ``S(t) = sum_j c_j (a_j t)^n_j / n_j! e^(-a_j t)``.

    Each term is a Poisson probability scaled by ``c_j``, so coefficients stay
    O(1) even when rates are large.  ``atom`` is the mass at zero, which makes
    ``S(0+) = 1 - atom``.
    """

    atom: float
    coefs: np.ndarray
    powers: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        for name, dtype in (("coefs", float), ("powers", np.int64), ("rates", float)):
            arr = np.array(getattr(self, name), dtype=dtype).ravel()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (len(self.coefs) == len(self.powers) == len(self.rates)):
            raise ValueError("term arrays must have equal length")
        if np.any(self.rates <= 0):
            raise ValueError("all term rates must be positive")
        if np.any(self.powers < 0):
            raise ValueError("term powers must be nonnegative")

    @classmethod
    def from_terms(cls, atom: float,
                   terms: Iterable[Tuple[float, int, float]]) -> "ExpPolyDist":
        terms = list(terms)
        if not terms:
            return cls(atom, np.zeros(0), np.zeros(0, dtype=np.int64), np.zeros(0))
        c, n, a = zip(*terms)
        return cls(atom, np.array(c), np.array(n), np.array(a))

    @property
    def terms(self):
        return list(zip(self.coefs.tolist(), self.powers.tolist(), self.rates.tolist()))

    @property
    def min_rate(self) -> float:
        return float(self.rates.min()) if len(self.rates) else math.inf

    def sf(self, t):
        """Survivor function ``P{V > t}``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for c, n, a in zip(self.coefs, self.powers, self.rates):
            out = out + c * poisson_pmf(n, a * t)
        return np.where(t < 0, 1.0, out)

    def cdf(self, t):
        return 1.0 - self.sf(t)

    def moment(self, m: int) -> float:
        return expoly_moment(self, m)

    def check(self, grid_points: int = 200, tol: float = 1e-12) -> None:
        """Raise ``ValueError`` unless this is a valid survivor function."""
        s0 = float(np.sum(self.coefs[self.powers == 0]))
        if abs(s0 - (1.0 - self.atom)) > tol:
            raise ValueError(f"S(0+)={s0} but 1-atom={1 - self.atom}")
        if not len(self.rates):
            return
        amin = self.min_rate
        grid = np.geomspace(1e-6 / amin, 50.0 / amin, grid_points)
        s = self.sf(grid)
        if np.any(s < -1e-12) or np.any(s > 1 + 1e-12):
            raise ValueError("survivor function leaves [0, 1]")
        if np.any(np.diff(s) > 1e-12):
            raise ValueError("survivor function is not nonincreasing")


def expoly_moment(d: ExpPolyDist, m: int) -> float:
    """Raw moment ``E[V^m]`` for ``m`` in 1..3, integrating each term in closed form.

    ``E[V^m] = m * int t^(m-1) S(t) dt`` and each term contributes
    ``c * (n+1)(n+2)...(n+m-1) / a^m``.
    """
    if m not in (1, 2, 3):
        raise ValueError("moment order must be 1, 2 or 3")
    n = d.powers.astype(float)
    val = float(m * np.sum(d.coefs * poch(n + 1.0, m - 1) / d.rates ** m))
    if val < -1e-9:
        raise NonIntegrable(f"moment {m} is negative ({val}); malformed distribution")
    return max(val, 0.0)


@dataclass(frozen=True)
class UpdateProcessStats:
    """Valid-update rate with the peak-AoI and sojourn-time laws."""

    valid_rate: float
    peak: ExpPolyDist
    sojourn: ExpPolyDist
