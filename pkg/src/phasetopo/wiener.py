"""FIR non-causal Wiener filters estimated from data.

The filter for target node ``j`` predicts ``x_j(k)`` from lags ``-F..F`` of
every other channel,

    x_j(k) ~ sum_{i != j} sum_{L=-F}^{F} h_ji[L] x_i(k - L),

using only times ``k`` in ``[F, T-1-F]`` so that every regressor is observed.
The least-squares problem is solved through its normal equations; the Gram
matrix of all lagged channels is shared by every target node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import linalg, optimize

from .dynamics import TimeSeriesPanel
from .errors import ConvergenceError, IllConditionedError, InsufficientSamplesError

DEFAULT_F = 20
RIDGE = 1e-8
GRID_POINTS = 50
# Under the Tustin map every coupling gain H_ij carries a factor (1 + z^-1)^l
# and vanishes at omega = pi, so the upper half band holds almost no network
# information.  The default grid stops at pi/2.
GRID_TOP = np.pi / 2
_CHUNK = 65536


@dataclass(frozen=True)
class FrequencyGrid:
    """Sorted, distinct frequencies in ``[0, pi]`` (radians per sample) containing 0."""

    omega: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float).ravel()
        if w.size == 0 or w[0] != 0.0:
            raise ValueError("frequency grid must start at omega = 0")
        if np.any(np.diff(w) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if w[-1] > np.pi:
            raise ValueError("frequency grid must lie in [0, pi]")
        object.__setattr__(self, "omega", w)

    @classmethod
    def uniform(cls, points: int = GRID_POINTS, top: float = GRID_TOP) -> "FrequencyGrid":
        """``points`` equispaced values from 0 to ``top``."""
        if points < 1:
            raise ValueError("grid needs at least one point")
        return cls(np.linspace(0.0, top, points) if points > 1 else np.zeros(1))

    @classmethod
    def near_nyquist(cls, points: int = GRID_POINTS) -> "FrequencyGrid":
        """Full-band grid ending at ``pi (1 - 1/points)``."""
        return cls.uniform(points, np.pi * (1.0 - 1.0 / points))

    def __len__(self) -> int:
        return len(self.omega)


def as_omega(grid) -> np.ndarray:
    if isinstance(grid, FrequencyGrid):
        return grid.omega
    return FrequencyGrid(grid).omega


@dataclass(frozen=True)
class FilterBank:
    """FIR coefficients for one target node.

    ``coefficients[i]`` holds ``h_ji`` in lag order ``-F..F``; the row of
    the target itself is zero.
    """

    target: int
    F: int
    coefficients: np.ndarray
    gamma: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim != 2 or c.shape[1] != 2 * self.F + 1:
            raise ValueError(f"coefficients must have 2F+1 = {2 * self.F + 1} columns")
        if not np.all(np.isfinite(c)):
            raise ValueError("filter coefficients must be finite")
        object.__setattr__(self, "coefficients", c)

    @property
    def n(self) -> int:
        return self.coefficients.shape[0]

    @property
    def sources(self) -> list[int]:
        return [i for i in range(self.n) if i != self.target]

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.F, self.F + 1)


def min_samples(n: int, F: int) -> int:
    """Smallest T for which the lag regression has more rows than unknowns."""
    return (n - 1) * (2 * F + 1) + 2 * F + 1


@dataclass(frozen=True)
class LagGram:
    """Normalized Gram matrix of all lagged channels.

    Column ``i * (2F+1) + (L + F)`` is ``x_i(k - L)`` over the valid rows.
    """

    matrix: np.ndarray
    n: int
    F: int
    rows: int

    def column(self, i: int, lag: int) -> int:
        return i * (2 * self.F + 1) + lag + self.F


def lag_gram(panel: TimeSeriesPanel, F: int = DEFAULT_F) -> LagGram:
    if F < 0:
        raise ValueError("F must be nonnegative")
    x = panel.data
    T, n = x.shape
    if T < min_samples(n, F):
        raise InsufficientSamplesError(
            f"T = {T} samples is too short for n = {n}, F = {F}; need at least {min_samples(n, F)}")
    K = 2 * F + 1
    rows = T - 2 * F
    G = np.zeros((n * K, n * K))
    for start in range(0, rows, _CHUNK):
        stop = min(rows, start + _CHUNK)
        # window w covers x[k-F .. k+F] for k = start + F + w; reverse it to get lags -F..F
        win = sliding_window_view(x[start: stop + 2 * F], K, axis=0)
        Z = np.ascontiguousarray(win[:, :, ::-1].reshape(stop - start, n * K))
        G += Z.T @ Z
    G /= rows
    return LagGram(G, n, F, rows)


def _normal_equations(gram: LagGram, j: int):
    K = 2 * gram.F + 1
    cols = _columns(gram, j)
    tgt = gram.column(j, 0)
    A = gram.matrix[np.ix_(cols, cols)]
    rhs = gram.matrix[cols, tgt]
    scale = np.trace(A) / max(len(cols), 1)
    if not scale > 0:
        raise IllConditionedError("all regressor channels are identically zero")
    A = A + RIDGE * scale * np.eye(len(cols))
    return A, rhs, gram.matrix[tgt, tgt], K


def _bank(gram: LagGram, j: int, h: np.ndarray, gamma: float) -> FilterBank:
    K = 2 * gram.F + 1
    coeffs = np.zeros((gram.n, K))
    coeffs[[i for i in range(gram.n) if i != j]] = h.reshape(gram.n - 1, K)
    return FilterBank(j, gram.F, coeffs, gamma)


def fit_wiener_fir(panel: TimeSeriesPanel, j: int, F: int = DEFAULT_F,
                   gram: LagGram | None = None) -> FilterBank:
    """Least-squares FIR Wiener filter for target ``j``."""
    if not 0 <= j < panel.n:
        raise IndexError(f"node {j} out of range")
    if gram is None:
        gram = lag_gram(panel, F)
    A, rhs, _, _ = _normal_equations(gram, j)
    try:
        cho = linalg.cho_factor(A, check_finite=False)
    except linalg.LinAlgError as exc:
        raise IllConditionedError(f"normal equations for node {j} are not positive definite") from exc
    if np.min(np.diag(cho[0])) ** 2 < 1e-15 * np.max(np.diag(A)):
        raise IllConditionedError(f"normal equations for node {j} are numerically singular")
    h = linalg.cho_solve(cho, rhs, check_finite=False)
    return _bank(gram, j, h, 0.0)


@dataclass(frozen=True)
class GroupLassoInfo:
    iterations: int
    objective: float
    stationarity: float


def _group_stationarity(grad, h, gamma, K):
    g = grad.reshape(-1, K)
    hh = h.reshape(-1, K)
    norms = np.linalg.norm(hh, axis=1)
    gnorm = np.linalg.norm(g, axis=1)
    res = np.empty(len(norms))
    nz = norms > 0
    res[nz] = np.linalg.norm(g[nz] + gamma * hh[nz] / norms[nz, None], axis=1)
    res[~nz] = np.maximum(gnorm[~nz] - gamma, 0.0)
    return res


def _block_soft_threshold(v, t, K):
    v = v.reshape(-1, K)
    norms = np.linalg.norm(v, axis=1)
    shrink = np.where(norms > t, 1.0 - t / np.where(norms > 0, norms, 1.0), 0.0)
    return (v * shrink[:, None]).ravel()


def _group_objective(A, rhs, const, gamma, K, h):
    return float(h @ A @ h - 2 * rhs @ h + const
                 + gamma * np.sum(np.linalg.norm(h.reshape(-1, K), axis=1)))


def _newton_step(A, grad, h, gamma, K, active):
    """Newton direction on the active groups, or None if the Hessian is singular."""
    idx = np.concatenate([np.arange(g * K, (g + 1) * K) for g in active])
    hs = h[idx]
    H = 2 * A[np.ix_(idx, idx)]
    gs = grad[idx].copy()
    for pos, g in enumerate(active):
        sl = slice(pos * K, (pos + 1) * K)
        u = hs[sl]
        nrm = np.linalg.norm(u)
        gs[sl] += gamma * u / nrm
        H[sl, sl] += (gamma / nrm) * (np.eye(K) - np.outer(u, u) / nrm ** 2)
    try:
        cho = linalg.cho_factor(H, check_finite=False)
    except linalg.LinAlgError:
        return None
    step = np.zeros_like(h)
    step[idx] = -linalg.cho_solve(cho, gs, check_finite=False)
    return step


def _block_minimizer(lam, Q, c, gamma):
    """Exact minimizer of ``u'Bu - 2c'u + gamma ||u||`` with ``B = Q diag(lam) Q'``."""
    if 2 * np.linalg.norm(c) <= gamma:
        return np.zeros_like(c)
    d = Q.T @ c
    if gamma == 0:
        return Q @ (d / lam)
    # the minimizer is (B + mu I)^{-1} c with mu = gamma / (2 ||u||); solve for ||u||
    def f(s):
        return np.linalg.norm(d / (lam + gamma / (2 * s))) - s
    hi = np.linalg.norm(d / lam)
    lo = hi
    while f(lo) <= 0:
        lo *= 0.5
    s = optimize.brentq(f, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps)
    return Q @ (d / (lam + gamma / (2 * s)))


def solve_group_lasso(A, rhs, const, gamma, K, tol=1e-9, max_iter=500):
    """Minimize ``h'Ah - 2 rhs'h + const + gamma * sum_g ||h_g||``.

    Each iteration is one sweep of exact block coordinate descent, which
    settles which groups are zero, followed by a damped Newton step on the
    nonzero groups, where the objective is smooth.  The Newton step makes the
    method insensitive to the poor conditioning of lagged covariance
    matrices and is kept only when it lowers the objective.  Stops once the
    stationarity residual, relative to the largest group gradient at zero,
    is below ``tol``.
    """
    gamma = float(gamma)
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    m = len(rhs) // K
    scale = max(np.max(np.linalg.norm((2 * rhs).reshape(-1, K), axis=1)), np.finfo(float).tiny)
    eig = [np.linalg.eigh(A[g * K:(g + 1) * K, g * K:(g + 1) * K]) for g in range(m)]
    h = np.zeros(len(rhs))
    Ah = np.zeros(len(rhs))
    res = np.inf
    for it in range(1, max_iter + 1):
        for g in range(m):
            sl = slice(g * K, (g + 1) * K)
            lam, Q = eig[g]
            old = h[sl].copy()
            c = rhs[sl] - (Ah[sl] - A[sl, sl] @ old)
            new = _block_minimizer(lam, Q, c, gamma)
            if np.any(new != old):
                Ah += A[:, sl] @ (new - old)
                h[sl] = new
        grad = 2 * (Ah - rhs)
        norms = np.linalg.norm(h.reshape(-1, K), axis=1)
        active = list(np.flatnonzero(norms > 0))
        if active:
            obj = _group_objective(A, rhs, const, gamma, K, h)
            step = _newton_step(A, grad, h, gamma, K, active)
            t = 1.0 if step is not None else 0.0
            while t > 1e-6:
                cand = h + t * step
                if _group_objective(A, rhs, const, gamma, K, cand) < obj:
                    h = cand
                    Ah = A @ h
                    grad = 2 * (Ah - rhs)
                    break
                t *= 0.5
        res = float(np.max(_group_stationarity(grad, h, gamma, K))) / scale
        if res <= tol:
            return h, GroupLassoInfo(it, _group_objective(A, rhs, const, gamma, K, h), res)
    raise ConvergenceError(
        f"group lasso did not converge in {max_iter} iterations (relative residual {res:.3g})",
        residual=res,
        result=(h, GroupLassoInfo(max_iter, _group_objective(A, rhs, const, gamma, K, h), res)))


def fit_wiener_fir_group_lasso(panel: TimeSeriesPanel, j: int, F: int = DEFAULT_F,
                               gamma: float = 0.0, gram: LagGram | None = None,
                               **solver) -> FilterBank:
    """Group-lasso regularized FIR Wiener filter; one group per source channel."""
    if not 0 <= j < panel.n:
        raise IndexError(f"node {j} out of range")
    if gram is None:
        gram = lag_gram(panel, F)
    A, rhs, const, K = _normal_equations(gram, j)
    h, _ = solve_group_lasso(A, rhs, const, gamma, K, **solver)
    return _bank(gram, j, h, gamma)


def critical_gamma(gram: LagGram, j: int) -> float:
    """Smallest ``gamma`` for which every group of target ``j`` is zero."""
    _, rhs, _, K = _normal_equations(gram, j)
    return float(np.max(np.linalg.norm((2 * rhs).reshape(-1, K), axis=1)))


def group_lasso_stationarity(gram: LagGram, bank: FilterBank) -> np.ndarray:
    """Per-group stationarity residuals of a fitted bank (absolute units)."""
    A, rhs, _, K = _normal_equations(gram, bank.target)
    h = bank.coefficients[bank.sources].ravel()
    return _group_stationarity(2 * (A @ h - rhs), h, bank.gamma, K)


def freq_response(bank: FilterBank, grid) -> np.ndarray:
    """``W_ji(e^{j omega}) = sum_L h_ji[L] e^{-j omega L}``, shape ``(n, len(grid))``."""
    omega = as_omega(grid)
    E = np.exp(-1j * np.outer(bank.lags, omega))
    return bank.coefficients @ E


def in_sample_mse(gram: LagGram, bank: FilterBank) -> float:
    """Empirical residual power of ``bank`` on the data behind ``gram`` (no ridge)."""
    cols = _columns(gram, bank.target)
    tgt = gram.column(bank.target, 0)
    h = bank.coefficients[bank.sources].ravel()
    A = gram.matrix[np.ix_(cols, cols)]
    rhs = gram.matrix[cols, tgt]
    return float(h @ A @ h - 2 * rhs @ h + gram.matrix[tgt, tgt])


def _columns(gram, j):
    return np.array([gram.column(i, L) for i in range(gram.n) if i != j
                     for L in range(-gram.F, gram.F + 1)], dtype=int)
