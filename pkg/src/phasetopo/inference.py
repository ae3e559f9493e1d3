"""Moral-graph learning from Wiener filter magnitudes and phase-based pruning.

Every ordered pair ``(j, i)`` is summarized by the magnitude and absolute
phase of ``W_ji`` over a frequency grid.  An undirected pair enters the
moral graph when either direction has ``sup |W_ji| > rho``.  It is then
pruned as a spouse-only pair when every direction that passed the magnitude
test keeps ``|angle W_ji| >= pi - tau`` on the whole grid.

The functions ending in ``_from_responses`` work on a response array
``W[j, i, k]`` so that analytic oracle responses and estimated filters go
through exactly the same decision code.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .dynamics import TimeSeriesPanel, detrend as _detrend
from .graphs import Edge, edge
from .wiener import (DEFAULT_F, FilterBank, FrequencyGrid, fit_wiener_fir,
                     fit_wiener_fir_group_lasso, freq_response, lag_gram)

DEFAULT_RHO = 1e-3
LOW_NOISE_RHO = 1e-5
DEFAULT_TAU = 0.2 * np.pi


class DegenerateChannelWarning(RuntimeWarning):
    """A channel is constant after detrending and was left out of the fit."""


@dataclass(frozen=True)
class InferenceParams:
    """Thresholds and estimator settings for :func:`learn_topology`.

    Parameters
    ----------
    rho : float
        Magnitude threshold on ``sup |W_ji|``; inclusion is strict.
    tau : float
        Phase tolerance in radians, ``0 < tau < pi/2``.
    grid : FrequencyGrid
        Frequencies at which responses are evaluated.
    F : int
        Lag half-width of the FIR filters.
    gamma : float
        Group-lasso weight; 0 selects plain least squares.
    detrend : bool
        Remove a linear trend from every channel before fitting.
    """

    rho: float = DEFAULT_RHO
    tau: float = DEFAULT_TAU
    grid: FrequencyGrid = field(default_factory=FrequencyGrid.uniform)
    F: int = DEFAULT_F
    gamma: float = 0.0
    detrend: bool = True

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not 0 < self.tau < np.pi / 2:
            raise ValueError(f"tau must lie in (0, pi/2), got {self.tau}")
        if not isinstance(self.grid, FrequencyGrid):
            object.__setattr__(self, "grid", FrequencyGrid(self.grid))
        if int(self.F) != self.F or self.F < 0:
            raise ValueError(f"F must be a nonnegative integer, got {self.F}")
        object.__setattr__(self, "F", int(self.F))
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")

    def with_(self, **changes) -> "InferenceParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class PairStat:
    sup_mag: float
    min_absphase: float
    max_absphase: float


@dataclass(frozen=True)
class InferenceReport:
    """Result of :func:`learn_topology`.

    ``pair_stats`` is keyed by ordered pairs ``(j, i)`` (target, source).
    ``isolated`` lists channels that were constant after detrending.
    """

    moral_edges: frozenset
    topology_edges: frozenset
    pair_stats: Mapping[tuple[int, int], PairStat]
    params: InferenceParams
    n: int
    isolated: tuple[int, ...] = ()
    banks: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if not self.topology_edges <= self.moral_edges:
            raise ValueError("topology edges must be a subset of the moral edges")


def pair_statistics(W: np.ndarray) -> dict[tuple[int, int], PairStat]:
    """Magnitude and absolute-phase summary of every ordered pair of ``W[j, i, k]``."""
    n = W.shape[0]
    mag = np.abs(W)
    ph = np.abs(np.angle(W))
    return {
        (j, i): PairStat(float(mag[j, i].max()), float(ph[j, i].min()), float(ph[j, i].max()))
        for j in range(n) for i in range(n) if i != j
    }


def moral_edges_from_responses(W: np.ndarray, rho: float) -> frozenset[Edge]:
    """Undirected pairs with ``sup |W_ji| > rho`` in at least one direction."""
    sup = np.abs(W).max(axis=2)
    np.fill_diagonal(sup, 0.0)
    passed = sup > rho
    rows, cols = np.nonzero(passed | passed.T)
    return frozenset(edge(j, i) for j, i in zip(rows, cols) if j < i)


def _spouse_like(W, j, i, tau):
    return bool(np.all(np.abs(np.angle(W[j, i])) >= np.pi - tau))


def prune_from_responses(edges, W: np.ndarray, rho: float, tau: float) -> frozenset[Edge]:
    """Drop every edge whose passing directions all keep phase near pi."""
    sup = np.abs(W).max(axis=2)
    kept = set()
    for a, b in edges:
        directions = [(j, i) for j, i in ((a, b), (b, a)) if sup[j, i] > rho]
        if not directions:
            # not produced by the magnitude test with these responses; leave it alone
            kept.add((a, b))
            continue
        if not all(_spouse_like(W, j, i, tau) for j, i in directions):
            kept.add((a, b))
    return frozenset(kept)


def _as_bank_list(banks) -> list[FilterBank]:
    if isinstance(banks, Mapping):
        n = max(banks) + 1 if banks else 0
        missing = [j for j in range(n) if j not in banks]
        if missing:
            raise ValueError(f"missing filter bank for node(s) {missing}")
        banks = [banks[j] for j in range(n)]
    banks = list(banks)
    for j, bank in enumerate(banks):
        if bank is None:
            raise ValueError(f"missing filter bank for node {j}")
        if bank.target != j or bank.n != len(banks):
            raise ValueError(f"bank at position {j} targets node {bank.target} "
                             f"with {bank.n} rows; expected node {j} with {len(banks)}")
    return banks


def responses(banks, grid) -> np.ndarray:
    """Stack the frequency responses of one bank per node into ``W[j, i, k]``."""
    banks = _as_bank_list(banks)
    return np.stack([freq_response(b, grid) for b in banks]) if banks else np.zeros((0, 0, 0))


def learn_moral_graph(banks, params: InferenceParams) -> frozenset[Edge]:
    """Moral-graph estimate from one filter bank per node."""
    return moral_edges_from_responses(responses(banks, params.grid), params.rho)


def prune_spouse_edges(edges, banks, params: InferenceParams) -> frozenset[Edge]:
    """Remove spouse-only edges by the phase criterion."""
    edges = frozenset(edges)
    if not edges:
        return edges
    return prune_from_responses(edges, responses(banks, params.grid), params.rho, params.tau)


def _degenerate_channels(x: np.ndarray) -> np.ndarray:
    var = x.var(axis=0)
    scale = var.max() if var.size else 0.0
    return var <= 1e-24 * scale


def fit_banks(panel: TimeSeriesPanel, params: InferenceParams, workers: int = 1) -> list[FilterBank]:
    """One filter bank per channel; constant channels get zero filters."""
    x = panel.data
    n = panel.n
    dead = _degenerate_channels(x)
    live = np.flatnonzero(~dead)
    K = 2 * params.F + 1
    banks: list[FilterBank | None] = [None] * n
    for j in np.flatnonzero(dead):
        banks[j] = FilterBank(int(j), params.F, np.zeros((n, K)), params.gamma)
    if len(live) == 1:
        banks[live[0]] = FilterBank(int(live[0]), params.F, np.zeros((n, K)), params.gamma)
    elif len(live) > 1:
        sub = TimeSeriesPanel(x[:, live], panel.dt)
        gram = lag_gram(sub, params.F)

        def fit(local):
            if params.gamma > 0:
                return fit_wiener_fir_group_lasso(sub, local, params.F, params.gamma, gram=gram)
            return fit_wiener_fir(sub, local, params.F, gram=gram)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                fitted = list(pool.map(fit, range(len(live))))
        else:
            fitted = [fit(local) for local in range(len(live))]
        for local, bank in enumerate(fitted):
            coeffs = np.zeros((n, K))
            coeffs[live] = bank.coefficients
            banks[live[local]] = FilterBank(int(live[local]), params.F, coeffs, params.gamma)
    return banks


def learn_topology(panel: TimeSeriesPanel, params: InferenceParams | None = None,
                   workers: int = 1) -> InferenceReport:
    """Fit all filter banks, learn the moral graph and prune spouse edges.

    Channels that are constant after detrending are reported as isolated
    nodes with a :class:`DegenerateChannelWarning`.
    """
    params = params or InferenceParams()
    if params.detrend:
        panel = _detrend(panel)
    dead = tuple(int(j) for j in np.flatnonzero(_degenerate_channels(panel.data)))
    if dead:
        warnings.warn(f"constant channel(s) {[j + 1 for j in dead]} (1-based) reported as isolated",
                      DegenerateChannelWarning, stacklevel=2)
    banks = fit_banks(panel, params, workers)
    W = responses(banks, params.grid)
    moral = moral_edges_from_responses(W, params.rho)
    topo = prune_from_responses(moral, W, params.rho, params.tau)
    return InferenceReport(moral, topo, pair_statistics(W), params, panel.n, dead, tuple(banks))


def topology_from_responses(W: np.ndarray, rho: float = DEFAULT_RHO,
                            tau: float = DEFAULT_TAU) -> tuple[frozenset, frozenset]:
    """``(moral, topology)`` edge sets from a response array such as oracle output."""
    moral = moral_edges_from_responses(W, rho)
    return moral, prune_from_responses(moral, W, rho, tau)


def spouse_pruning_effectiveness(moral, topology, spouses) -> float:
    """Fraction of the strict-spouse pairs present in ``moral`` that pruning removed.

    Returns 1.0 when no spouse pair survived the magnitude test.
    """
    present = frozenset(moral) & frozenset(spouses)
    if not present:
        return 1.0
    return len(present - frozenset(topology)) / len(present)


def pruning_effectiveness(moral, topology, truth) -> float:
    """Fraction of all false positives after the magnitude test that pruning removed.

    Returns 1.0 when the magnitude test produced no false positive.
    """
    fp = frozenset(moral) - frozenset(truth)
    if not fp:
        return 1.0
    return len(fp - frozenset(topology)) / len(fp)


__all__: Sequence[str] = (
    "DEFAULT_RHO", "LOW_NOISE_RHO", "DEFAULT_TAU", "DegenerateChannelWarning",
    "InferenceParams", "PairStat", "InferenceReport", "pair_statistics",
    "moral_edges_from_responses", "prune_from_responses", "responses",
    "learn_moral_graph", "prune_spouse_edges", "fit_banks", "learn_topology",
    "topology_from_responses", "spouse_pruning_effectiveness", "pruning_effectiveness",
)
