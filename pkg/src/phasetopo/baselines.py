"""Static baselines: graphical lasso and graphical lasso with sign pruning.

The solver works on the precision matrix directly.  For one column at a
time it minimizes

    -log det(Theta) + tr(S Theta) + rho * sum_{i != j} |Theta_ij|

over that column with the rest held fixed.  Writing the Schur complement
``c = theta_22 - theta_12' Theta_11^{-1} theta_12`` splits the block problem
into ``c = 1/s_22`` and a lasso in ``theta_12`` with quadratic form
``s_22 Theta_11^{-1}``, solved by coordinate descent.  Every block step is
an exact minimization, so the objective never increases and ``Theta`` stays
positive definite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import TimeSeriesPanel
from .errors import ConvergenceError
from .graphs import Edge, edge

DEFAULT_EPSILON = 1e-3
DEFAULT_GLASSO_RHO = 1e-3
MAX_SWEEPS = 500
TOL = 1e-6


@dataclass(frozen=True)
class PrecisionEstimate:
    """Inverse-covariance estimate.

    ``kkt`` and ``dual_gap`` are relative to the largest diagonal entry of
    ``S``; ``objective`` records the penalized negative log-likelihood after
    every sweep.
    """

    theta: np.ndarray
    rho: float
    converged: bool
    iterations: int
    kkt: float = 0.0
    dual_gap: float = 0.0
    penalize_diagonal: bool = False
    objective: tuple = field(default=(), repr=False)


def empirical_covariance(panel: TimeSeriesPanel) -> np.ndarray:
    """Mean-removed covariance with the ``1/T`` normalization."""
    x = panel.data
    if x.shape[0] < 2:
        raise ValueError("covariance needs at least two samples")
    xc = x - x.mean(axis=0)
    return xc.T @ xc / x.shape[0]


def _penalty(theta, rho, penalize_diagonal):
    off = np.abs(theta).sum() - np.abs(np.diag(theta)).sum()
    return rho * (off + (np.abs(np.diag(theta)).sum() if penalize_diagonal else 0.0))


def glasso_objective(theta, S, rho, penalize_diagonal=False) -> float:
    """Penalized negative log-likelihood (to be minimized)."""
    sign, logdet = np.linalg.slogdet(theta)
    if sign <= 0:
        return np.inf
    return float(-logdet + np.sum(S * theta) + _penalty(theta, rho, penalize_diagonal))


def kkt_residual(theta, S, rho, penalize_diagonal=False) -> float:
    """Largest violation of the optimality conditions (absolute units)."""
    G = S - np.linalg.inv(theta)
    R = np.empty_like(G)
    off = ~np.eye(len(S), dtype=bool)
    nz = (theta != 0) & off
    R[nz] = np.abs(G[nz] + rho * np.sign(theta[nz]))
    z = (theta == 0) & off
    R[z] = np.maximum(np.abs(G[z]) - rho, 0.0)
    d = np.diag_indices(len(S))
    R[d] = np.abs(G[d] + (rho * np.sign(theta[d]) if penalize_diagonal else 0.0))
    return float(R.max()) if R.size else 0.0


def dual_gap(theta, S, rho, penalize_diagonal=False) -> float:
    return float(np.sum(S * theta) - len(S) + _penalty(theta, rho, penalize_diagonal))


def _lasso_cd(Q, s, rho, x, tol, max_passes=1000):
    """Minimize ``x'Qx/2 + s'x + rho ||x||_1`` by cyclic coordinate descent."""
    if rho == 0:
        return np.linalg.solve(Q, -s)
    diag = np.diag(Q)
    scale = max(np.abs(s).max(), rho, np.finfo(float).tiny)
    for _ in range(max_passes):
        biggest = 0.0
        for k in range(len(x)):
            r = s[k] + Q[k] @ x - diag[k] * x[k]
            new = -np.sign(r) * max(abs(r) - rho, 0.0) / diag[k]
            biggest = max(biggest, abs(new - x[k]) * diag[k])
            x[k] = new
        if biggest <= tol * scale:
            break
    return x


def _initial_theta(S, rho, sdiag):
    """``(S + rho I)^{-1}`` when it is safely invertible, else ``diag(1/s_ii)``.

    Starting near the unpenalized inverse cuts the sweep count by orders of
    magnitude on strongly correlated data, where block coordinate descent
    converges slowly from a diagonal start.
    """
    n = len(S)
    if n == 0:
        return np.zeros((0, 0))
    shifted = S + rho * np.eye(n)
    if np.linalg.cond(shifted) < 1e10:
        theta = np.linalg.inv(shifted)
        theta = 0.5 * (theta + theta.T)
        if np.all(np.linalg.eigvalsh(theta) > 0):
            return theta
    return np.diag(1.0 / sdiag)


def graphical_lasso(S, rho: float = DEFAULT_GLASSO_RHO, penalize_diagonal: bool = False,
                    max_sweeps: int = MAX_SWEEPS, tol: float = TOL) -> PrecisionEstimate:
    """Sparse inverse covariance by blockwise coordinate descent.

    Parameters
    ----------
    S : ndarray
        Symmetric positive semidefinite covariance.
    rho : float
        Penalty weight; must be positive if ``S`` is singular.
    penalize_diagonal : bool
        Apply the penalty to the diagonal too (the plain ``||Theta||_1``).
    max_sweeps, tol : int, float
        Sweeps over all columns and the stopping tolerance, relative to the
        largest diagonal entry, on both the largest entry change in one
        sweep and the KKT residual.

    Raises
    ------
    ValueError
        If ``S`` is not symmetric positive semidefinite, or singular with
        ``rho = 0``.
    ConvergenceError
        If ``max_sweeps`` is reached; ``residual`` holds the relative dual
        gap and ``result`` the last iterate.
    """
    S = np.array(S, dtype=float)
    n = S.shape[0]
    if S.ndim != 2 or S.shape != (n, n) or not np.allclose(S, S.T, rtol=1e-10, atol=0):
        raise ValueError("S must be a symmetric matrix")
    S = 0.5 * (S + S.T)
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    eig = np.linalg.eigvalsh(S) if n else np.zeros(0)
    scale = float(np.max(np.diag(S))) if n else 1.0
    if n and eig.min() < -1e-10 * max(scale, np.finfo(float).tiny):
        raise ValueError(f"S is not positive semidefinite (smallest eigenvalue {eig.min():.3g})")
    sdiag = np.diag(S) + (rho if penalize_diagonal else 0.0)
    if n and (np.any(sdiag <= 0) or (rho == 0 and eig.min() <= 1e-12 * scale)):
        raise ValueError("S is singular; a positive rho is required")

    theta = _initial_theta(S, rho, sdiag)
    history = [glasso_objective(theta, S, rho, penalize_diagonal)]
    kkt = kkt_residual(theta, S, rho, penalize_diagonal) / scale if n > 1 else 0.0
    if n <= 1:
        return PrecisionEstimate(theta, rho, True, 0, 0.0, 0.0, penalize_diagonal, tuple(history))
    for sweep in range(1, max_sweeps + 1):
        biggest = 0.0
        for j in range(n):
            rest = np.r_[0:j, j + 1:n]
            inv11 = np.linalg.inv(theta[np.ix_(rest, rest)])
            Q = sdiag[j] * inv11
            x = theta[rest, j].copy()
            x = _lasso_cd(Q, S[rest, j], rho, x, tol * 1e-3)
            t22 = 1.0 / sdiag[j] + x @ inv11 @ x
            change = max(np.abs(x - theta[rest, j]).max(), abs(t22 - theta[j, j]))
            biggest = max(biggest, change)
            theta[rest, j] = x
            theta[j, rest] = x
            theta[j, j] = t22
        history.append(glasso_objective(theta, S, rho, penalize_diagonal))
        kkt = kkt_residual(theta, S, rho, penalize_diagonal) / scale
        if biggest <= tol * np.max(np.diag(theta)) and kkt <= tol:
            gap = dual_gap(theta, S, rho, penalize_diagonal)
            return PrecisionEstimate(theta, rho, True, sweep, kkt, gap, penalize_diagonal,
                                     tuple(history))
    gap = dual_gap(theta, S, rho, penalize_diagonal)
    est = PrecisionEstimate(theta, rho, False, max_sweeps, kkt, gap, penalize_diagonal,
                            tuple(history))
    raise ConvergenceError(
        f"graphical lasso did not converge in {max_sweeps} sweeps (dual gap {gap:.3g})",
        residual=gap, result=est)


def glasso_topology(est: PrecisionEstimate, epsilon: float = DEFAULT_EPSILON) -> frozenset[Edge]:
    """Pairs with ``|Theta_ij| > epsilon``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    rows, cols = np.nonzero(np.abs(est.theta) > epsilon)
    return frozenset(edge(i, j) for i, j in zip(rows, cols) if i < j)


def glasso_sign_pruned_topology(est: PrecisionEstimate,
                                epsilon: float = DEFAULT_EPSILON) -> frozenset[Edge]:
    """:func:`glasso_topology` without the pairs whose entry is above ``+epsilon``."""
    return frozenset(e for e in glasso_topology(est, epsilon) if est.theta[e] < -epsilon)
