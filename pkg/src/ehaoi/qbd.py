"""Matrix-geometric solution of the exponential-service model.

Levels are data-queue lengths (unbounded), phases are battery levels 0..B.
The stationary law is ``p_i = p_0 R^i`` with ``R`` the minimal nonnegative
solution of ``R^2 U + R V + W = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DegenerateNullSpace, NotConverged
from .model import SystemParams, validate_params


@dataclass(frozen=True)
class QbdModel:
    params: SystemParams
    V_tilde: np.ndarray
    V: np.ndarray
    U: np.ndarray
    W: np.ndarray

    @property
    def dim(self) -> int:
        return self.V.shape[0]


@dataclass(frozen=True)
class QbdSolution:
    R: np.ndarray
    p0: np.ndarray
    iterations: int
    residual: float
    spectral_radius: float


def build_qbd(p: SystemParams) -> QbdModel:
    validate_params(p, require_mu=True)
    lam, r, mu, B = p.lam, p.r, p.mu, p.B
    n = B + 1
    sup = np.diag(np.full(B, r), 1)
    V_tilde = -lam * np.eye(n) + sup + np.diag(np.r_[np.full(B, -r), 0.0])
    V = -lam * np.eye(n) + sup + np.diag(np.r_[-r, np.full(B - 1, -(r + mu)), -mu])
    U = np.diag(np.full(B, mu), -1)
    W = lam * np.eye(n)
    return QbdModel(p, V_tilde, V, U, W)


def drift(m: QbdModel) -> float:
    """Mean downward minus upward rate of the phase process at high levels.

    Positive drift means the level process is positive recurrent.
    """
    A = m.U + m.V + m.W
    pi = _left_null(A)
    pi = pi / pi.sum()
    return float(pi @ m.U.sum(axis=1) - pi @ m.W.sum(axis=1))


def _left_null(M: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    # R is only accurate to the iteration tolerance, so the boundary matrix is
    # nearly (not exactly) singular; take the smallest singular direction
    _, sv, vt = linalg.svd(M.T)
    scale = max(sv[0], 1.0)
    n_small = int(np.sum(sv <= tol * scale))
    if n_small != 1:
        raise DegenerateNullSpace(f"null space has dimension {n_small}, expected 1")
    v = vt[-1]
    return v if v.sum() >= 0 else -v


def spectral_radius(R: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(R)))) if R.size else 0.0


def solve_R(m: QbdModel, eps: float = 1e-8, max_iter: int = 1_000_000,
            track_monotone: bool = False):
    """Fixed-point iteration ``R <- -(R^2 U + W) V^-1`` from ``R = 0``.

    Returns ``(R, iterations, residual)``; with ``track_monotone`` a fourth item
    reports whether every iterate dominated the previous one entrywise.
    """
    lu = linalg.lu_factor(m.V)
    R = np.zeros_like(m.V)
    monotone = True
    for it in range(1, max_iter + 1):
        rhs = -(R @ R @ m.U + m.W)
        # X V = rhs  <=>  V^T X^T = rhs^T
        R_new = linalg.lu_solve(lu, rhs.T, trans=1).T
        if track_monotone and np.any(R_new < R - 1e-15):
            monotone = False
        step = np.max(np.abs(R_new - R))
        R = R_new
        if step < eps:
            break
    else:
        raise NotConverged(f"R iteration did not converge in {max_iter} steps",
                           spectral_radius(R), max_iter)
    rho = spectral_radius(R)
    dr = drift(m)
    # from the zero start an unstable chain converges towards an R with unit
    # spectral radius only at rate eps, so the drift sign is the sharper test
    if rho >= 1.0 - 1e-9 or dr <= 0.0:
        raise NotConverged(
            f"the queue is not stable: spectral radius of R is {rho:.10g}, "
            f"phase drift {dr:.6g} (must be > 0)", rho, it)
    residual = float(np.max(np.abs(R @ R @ m.U + R @ m.V + m.W)))
    if track_monotone:
        return R, it, residual, monotone
    return R, it, residual


def solve_boundary(m: QbdModel, R: np.ndarray) -> np.ndarray:
    """Level-0 vector solving ``p0 (V_tilde + R U) = 0`` with total mass one."""
    p0 = _left_null(m.V_tilde + R @ m.U)
    n = m.dim
    mass = p0 @ np.linalg.solve(np.eye(n) - R, np.ones(n))
    p0 = p0 / mass
    if np.any(p0 < -1e-12):
        raise DegenerateNullSpace("boundary vector has negative entries")
    p0 = np.clip(p0, 0.0, None)
    return p0 / (p0 @ np.linalg.solve(np.eye(n) - R, np.ones(n)))


def solve_qbd(p: SystemParams, eps: float = 1e-8, max_iter: int = 1_000_000) -> QbdSolution:
    m = build_qbd(p)
    R, it, res = solve_R(m, eps, max_iter)
    p0 = solve_boundary(m, R)
    return QbdSolution(R, p0, it, res, spectral_radius(R))


def mean_queue_length(sol: QbdSolution) -> float:
    n = sol.R.shape[0]
    inv = np.linalg.inv(np.eye(n) - sol.R)
    return float(sol.p0 @ inv @ inv @ sol.R @ np.ones(n))


def qbd_mean_sojourn(sol: QbdSolution, p: SystemParams) -> float:
    """Mean time in system by Little's law: mean queue length over ``lambda``."""
    return mean_queue_length(sol) / p.lam


def qbd_avg_peak_aoi(p: SystemParams, eps: float = 1e-8, max_iter: int = 1_000_000) -> float:
    sol = solve_qbd(p, eps, max_iter)
    return 1.0 / p.lam + qbd_mean_sojourn(sol, p)


def level_distribution(sol: QbdSolution, tail: float = 1e-12, max_levels: int = 100_000):
    """Stack ``p0 R^i`` until the remaining mass drops below ``tail``."""
    levels = [sol.p0]
    total = sol.p0.sum()
    cur = sol.p0
    while 1.0 - total > tail and len(levels) < max_levels:
        cur = cur @ sol.R
        levels.append(cur)
        total += cur.sum()
    return np.array(levels)


def balance_residual(m: QbdModel, sol: QbdSolution) -> float:
    """Max-norm of ``pi Q`` over the truncated stationary vector."""
    P = level_distribution(sol)
    L = len(P)
    out = np.empty_like(P)
    out[0] = P[0] @ m.V_tilde + (P[1] @ m.U if L > 1 else 0.0)
    for i in range(1, L):
        row = P[i - 1] @ m.W + P[i] @ m.V
        if i + 1 < L:
            row = row + P[i + 1] @ m.U
        out[i] = row
    # the last level lacks its successor's inflow; that mass is below the tail cut
    return float(np.max(np.abs(out[:-1]))) if L > 1 else float(np.max(np.abs(out)))
