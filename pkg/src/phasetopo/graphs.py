"""Generative graphs, their topology and moral graph, and kinship queries.

Nodes are integer indices ``0..n-1`` everywhere in the Python API.  Text
formats (edge lists, reports, CSV headers) print them 1-based; see
:mod:`phasetopo.io`.

An undirected edge is a tuple ``(i, j)`` with ``i < j``; an edge set is a
``frozenset`` of such tuples.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

Edge = tuple[int, int]
EdgeSet = frozenset


def edge(i: int, j: int) -> Edge:
    """Normalize an unordered pair to ``(min, max)``."""
    i, j = int(i), int(j)
    if i == j:
        raise ValueError(f"self-loop ({i}, {i}) is not an edge")
    return (i, j) if i < j else (j, i)


def edge_set(pairs: Iterable[tuple[int, int]]) -> frozenset[Edge]:
    return frozenset(edge(i, j) for i, j in pairs)


@dataclass(frozen=True)
class GenerativeGraph:
    """Directed weighted graph of a linear network.

    ``b[i, j]`` is the gain of the directed edge ``j -> i`` (node ``j``'s
    state enters node ``i``'s dynamics).  ``node_dynamics[i]`` lists the
    derivative coefficients ``a_{1,i}, ..., a_{l,i}``.
    """

    b: np.ndarray
    node_dynamics: tuple = field(default=())

    def __post_init__(self):
        b = np.array(self.b, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError(f"b must be square, got shape {b.shape}")
        if np.any(np.diag(b) != 0):
            raise ValueError("b must have a zero diagonal")
        if np.any(b < 0) or not np.all(np.isfinite(b)):
            raise ValueError("b must be finite and nonnegative")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)
        dyn = tuple(np.atleast_1d(np.asarray(a, dtype=float)) for a in self.node_dynamics)
        if dyn and len(dyn) != b.shape[0]:
            raise ValueError("node_dynamics needs one coefficient list per node")
        object.__setattr__(self, "node_dynamics", dyn)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    def is_bidirected(self) -> bool:
        mask = self.b > 0
        return bool(np.array_equal(mask, mask.T))


def topology_of(g: GenerativeGraph) -> frozenset[Edge]:
    """Undirected edges ``{i, j}`` with ``b_ij > 0`` or ``b_ji > 0``."""
    rows, cols = np.nonzero(g.b > 0)
    return edge_set(zip(rows, cols))


def spouse_pairs(g: GenerativeGraph) -> frozenset[Edge]:
    """Pairs of distinct nodes that share at least one child."""
    mask = g.b > 0
    pairs = set()
    for k in range(g.n):
        parents = np.flatnonzero(mask[k])
        for a in range(len(parents)):
            for c in range(a + 1, len(parents)):
                pairs.add(edge(parents[a], parents[c]))
    return frozenset(pairs)


def moral_graph_of(g: GenerativeGraph) -> frozenset[Edge]:
    return topology_of(g) | spouse_pairs(g)


def adjacency(edges: Iterable[Edge], n: int) -> list[set[int]]:
    adj = [set() for _ in range(n)]
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    return adj


def hop_distances(edges: Iterable[Edge], n: int, source: int) -> np.ndarray:
    """Shortest undirected path length from ``source``; -1 when unreachable."""
    adj = adjacency(edges, n)
    dist = np.full(n, -1, dtype=int)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def strict_two_hop_pairs(edges: Iterable[Edge], n: int) -> frozenset[Edge]:
    """Pairs at shortest distance exactly two."""
    edges = frozenset(edges)
    pairs = set()
    for i in range(n):
        dist = hop_distances(edges, n, i)
        pairs.update(edge(i, j) for j in np.flatnonzero(dist == 2))
    return frozenset(pairs)


@dataclass(frozen=True)
class KinSets:
    children: frozenset[int]
    parents: frozenset[int]
    spouses: frozenset[int]
    hops: dict[int, frozenset[int]]

    @property
    def neighbors(self) -> frozenset[int]:
        return self.hops.get(1, frozenset())

    def hop(self, m: int) -> frozenset[int]:
        if m < 1:
            raise ValueError("hop order must be at least 1")
        return self.hops.get(m, frozenset())


def kin_sets(g: GenerativeGraph, j: int) -> KinSets:
    """Children, parents, spouses and m-hop neighbor sets of node ``j``.

    ``hops[m]`` holds the nodes at shortest distance exactly ``m`` in the
    topology, so the sets for different ``m`` are disjoint.
    """
    if not 0 <= j < g.n:
        raise IndexError(f"node {j} out of range for n={g.n}")
    mask = g.b > 0
    children = frozenset(int(i) for i in np.flatnonzero(mask[:, j]))
    parents = frozenset(int(i) for i in np.flatnonzero(mask[j]))
    spouses = frozenset(
        int(i) for i in range(g.n)
        if i != j and np.any(mask[:, i] & mask[:, j])
    )
    dist = hop_distances(topology_of(g), g.n, j)
    hops = {}
    for m in range(1, int(dist.max()) + 1):
        hops[m] = frozenset(int(i) for i in np.flatnonzero(dist == m))
    return KinSets(children, parents, spouses, hops)


def relative_error(estimated: Iterable[Edge], truth: Iterable[Edge]) -> float:
    """False positives plus false negatives over the number of true edges, in percent."""
    est = edge_set(estimated)
    true = edge_set(truth)
    if not true:
        raise ValueError("relative error is undefined for an empty true edge set")
    return 100.0 * (len(est - true) + len(true - est)) / len(true)


def bidirected(n: int, weighted_edges: Iterable[tuple[int, int, float]]) -> np.ndarray:
    """Symmetric gain matrix from ``(i, j, weight)`` triples."""
    b = np.zeros((n, n))
    for i, j, w in weighted_edges:
        b[i, j] = b[j, i] = w
    return b
