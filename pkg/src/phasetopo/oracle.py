"""Closed-form Wiener filters of a known network and the expected phase class of each pair.

All functions take the noise PSD as an array ``psd`` of shape
``(n, len(omega))`` (see :meth:`phasetopo.dynamics.NoiseSpec.psd`) and return
responses indexed ``[i, k]`` for source node ``i`` and grid point ``k``; the
target row ``j`` is identically zero.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dynamics import DiscreteModel
from .graphs import kin_sets


class PhaseClass(str, enum.Enum):
    STRICT_SPOUSE = "strict-spouse-pi"
    NEIGHBOR = "neighbor-zero-at-dc"
    NEIGHBOR_AND_SPOUSE = "neighbor-and-spouse-generic"
    DISCONNECTED = "disconnected"


@dataclass(frozen=True)
class WienerComponents:
    """Child, parent and spouse contributions; ``total`` is their sum."""

    child: np.ndarray
    parent: np.ndarray
    spouse: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.child + self.parent + self.spouse


def _check_psd(psd, n, omega):
    psd = np.asarray(psd, dtype=float)
    if psd.shape != (n, len(omega)):
        raise ValueError(f"psd must have shape {(n, len(omega))}, got {psd.shape}")
    if not np.all(psd > 0) or not np.all(np.isfinite(psd)):
        raise ValueError("noise PSD must be finite and strictly positive on the grid")
    return psd


def analytic_wiener(model: DiscreteModel, psd, j: int, omega) -> WienerComponents:
    """Decompose ``W_ji`` into child, parent and spouse terms at every grid point."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    n = model.n
    if not 0 <= j < n:
        raise IndexError(f"node {j} out of range")
    inv_phi = 1.0 / _check_psd(psd, n, omega)
    if np.any(np.abs(1.0 + np.exp(-1j * omega)) <= 1e-8):
        raise ZeroDivisionError("S_i has a pole on the grid (omega = pi under the bilinear map)")
    S = model.S(omega)
    b = model.b
    kin = kin_sets(model.graph, j)

    # sum over children l of j (b_lj > 0); equals the parent set for bidirected graphs
    denom = np.abs(S[j]) ** 2 * inv_phi[j]
    for l in kin.children:
        denom = denom + b[l, j] ** 2 * inv_phi[l]
    if np.any(denom <= 0):
        raise ZeroDivisionError("Wiener denominator vanishes on the grid")

    m = len(omega)
    child = np.zeros((n, m), dtype=complex)
    parent = np.zeros((n, m), dtype=complex)
    spouse = np.zeros((n, m), dtype=complex)
    for i in range(n):
        if i == j:
            continue
        child[i] = b[i, j] * S[i] * inv_phi[i] / denom
        parent[i] = b[j, i] * np.conj(S[j]) * inv_phi[j] / denom
        shared = kin.children & kin_sets(model.graph, i).children
        acc = np.zeros(m)
        for k in shared:
            acc = acc + b[k, j] * b[k, i] * inv_phi[k]
        spouse[i] = -acc / denom
    return WienerComponents(child, parent, spouse)


def brute_force_wiener(model: DiscreteModel, psd, j: int, omega) -> np.ndarray:
    """``Phi_{x_j, x_-j} Phi_{x_-j}^{-1}`` from the full spectral matrix, point by point."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    n = model.n
    psd = _check_psd(psd, n, omega)
    S = model.S(omega)
    H = model.H(omega)
    others = [i for i in range(n) if i != j]
    out = np.zeros((n, len(omega)), dtype=complex)
    eye = np.eye(n)
    for k in range(len(omega)):
        G = np.linalg.inv(eye - H[k])
        phi_e = np.diag(psd[:, k] / np.abs(S[:, k]) ** 2)
        phi_x = G @ phi_e @ G.conj().T
        cross = phi_x[j, others]
        block = phi_x[np.ix_(others, others)]
        cond = np.linalg.cond(block)
        if not np.isfinite(cond) or cond > 1e14:
            raise np.linalg.LinAlgError(f"spectral block is singular at omega={omega[k]:.6g}")
        out[others, k] = np.linalg.solve(block.T, cross)
    return out


def classify_pair(model: DiscreteModel, i: int, j: int) -> PhaseClass:
    if i == j:
        raise ValueError("pair must consist of two distinct nodes")
    kin = kin_sets(model.graph, j)
    neighbor = i in kin.neighbors
    spouse = i in kin.spouses
    if spouse and not neighbor:
        return PhaseClass.STRICT_SPOUSE
    if neighbor and not spouse:
        return PhaseClass.NEIGHBOR
    if neighbor and spouse:
        return PhaseClass.NEIGHBOR_AND_SPOUSE
    return PhaseClass.DISCONNECTED


def thm4_conditions_hold(model: DiscreteModel, psd, i: int, j: int, omega,
                         atol: float = 1e-12) -> bool:
    """Whether a neighbor-and-spouse pair has phase pi on the whole grid.

    Checks that ``b_ij S_i / Phi_i + b_ji conj(S_j) / Phi_j`` is real and
    that its real part minus the shared-neighbor sum is negative at every
    grid point.
    """
    if classify_pair(model, i, j) is not PhaseClass.NEIGHBOR_AND_SPOUSE:
        raise ValueError(f"pair ({i}, {j}) is not both neighbor and spouse")
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    inv_phi = 1.0 / _check_psd(psd, model.n, omega)
    S = model.S(omega)
    b = model.b
    direct = b[i, j] * S[i] * inv_phi[i] + b[j, i] * np.conj(S[j]) * inv_phi[j]
    common = kin_sets(model.graph, i).neighbors & kin_sets(model.graph, j).neighbors
    shared = sum((b[k, j] * b[k, i] * inv_phi[k] for k in common), np.zeros(len(omega)))
    return bool(np.all(np.abs(direct.imag) <= atol) and np.all(direct.real - shared < 0))


def oracle_responses(model: DiscreteModel, psd, omega) -> np.ndarray:
    """``W[j, i, k]`` for every ordered pair from :func:`analytic_wiener`."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    return np.stack([analytic_wiener(model, psd, j, omega).total for j in range(model.n)])
