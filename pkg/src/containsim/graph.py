"""Directed weighted leader-follower communication graphs.

Agents are labelled ``1..n`` (followers) and ``n+1..n+m`` (leaders). An edge
``(j, i, w)`` means agent ``i`` receives information from agent ``j`` with
weight ``w``; the adjacency entry is ``a_ij = w``.
"""
from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .errors import AssumptionError, ScenarioError, SingularMatrixError
from .linalg import lu_checked
from scipy.linalg import lu_solve


@dataclass(frozen=True)
class LaplacianPartition:
    L1: np.ndarray
    L2: np.ndarray
    Abar: np.ndarray
    Dbar: np.ndarray


@dataclass(frozen=True)
class Graph:
    """Immutable weighted digraph over ``n`` followers and ``m`` leaders.

    Stored as in-neighbour lists: ``in_edges[i]`` maps each source ``j`` to
    the weight ``a_ij``.
    """

    n: int
    m: int
    in_edges: MappingProxyType = field(repr=False)

    def __deepcopy__(self, memo):
        return self  # immutable

    @classmethod
    def from_edges(cls, n, m, edges):
        """Build from ``(source, target, weight)`` triples, validating invariants."""
        if n < 1 or m < 1:
            raise ScenarioError(f"need at least one follower and one leader (n={n}, m={m})")
        table = {i: {} for i in range(1, n + m + 1)}
        for src, dst, w in edges:
            src, dst, w = int(src), int(dst), float(w)
            for node in (src, dst):
                if not 1 <= node <= n + m:
                    raise ScenarioError(f"edge endpoint {node} outside 1..{n + m}")
            if src == dst:
                raise ScenarioError(f"self-loop at agent {src}")
            if not w > 0 or not np.isfinite(w):
                raise ScenarioError(f"edge {src}->{dst} has non-positive weight {w}")
            if dst > n:
                raise ScenarioError(f"leader {dst} has an incoming edge from {src}")
            if src in table[dst]:
                raise ScenarioError(f"duplicate edge {src}->{dst}")
            table[dst][src] = w
        frozen = {i: MappingProxyType(dict(sorted(nb.items()))) for i, nb in table.items()}
        return cls(n, m, MappingProxyType(frozen))

    @property
    def followers(self):
        return range(1, self.n + 1)

    @property
    def leaders(self):
        return range(self.n + 1, self.n + self.m + 1)

    def is_follower(self, i):
        return 1 <= i <= self.n

    def is_leader(self, i):
        return self.n < i <= self.n + self.m

    def weight(self, i, j):
        """Adjacency entry ``a_ij`` (0 when there is no edge ``j -> i``)."""
        return self.in_edges[i].get(j, 0.0)

    def edges(self):
        """All edges as sorted ``(source, target, weight)`` triples."""
        return sorted((j, i, w) for i, nb in self.in_edges.items() for j, w in nb.items())

    def follower_in_neighbors(self, i):
        """``N_i`` minus the leaders: followers that ``i`` listens to."""
        return [j for j in self.in_edges[i] if j <= self.n]

    def _require_follower(self, i):
        if not self.is_follower(i):
            raise ValueError(f"agent {i} is not a follower (followers are 1..{self.n})")


def laplacian_partition(g):
    """Follower rows of the graph Laplacian, split into follower/leader blocks."""
    n, m = g.n, g.m
    Abar = np.zeros((n, n))
    L2 = np.zeros((n, m))
    for i in g.followers:
        for j, w in g.in_edges[i].items():
            if j <= n:
                Abar[i - 1, j - 1] = w
            else:
                L2[i - 1, j - n - 1] = -w
    Dbar = np.diag(Abar.sum(axis=1) - L2.sum(axis=1))
    return LaplacianPartition(L1=Dbar - Abar, L2=L2, Abar=Abar, Dbar=Dbar)


def topological_order(g):
    """Kahn's algorithm over all agents; ``None`` if there is a cycle."""
    indeg = {i: len(g.in_edges[i]) for i in g.in_edges}
    out = {i: [] for i in g.in_edges}
    for i, nb in g.in_edges.items():
        for j in nb:
            out[j].append(i)
    queue = deque(sorted(i for i, d in indeg.items() if d == 0))
    order = []
    while queue:
        j = queue.popleft()
        order.append(j)
        for i in out[j]:
            indeg[i] -= 1
            if indeg[i] == 0:
                queue.append(i)
    return order if len(order) == len(indeg) else None


def is_acyclic(g):
    return topological_order(g) is not None


def every_follower_led(g):
    """True iff every follower is reachable from at least one leader."""
    return not unled_followers(g)


def unled_followers(g):
    out = {i: [] for i in g.in_edges}
    for i, nb in g.in_edges.items():
        for j in nb:
            out[j].append(i)
    seen = set()
    queue = deque(g.leaders)
    while queue:
        j = queue.popleft()
        for i in out[j]:
            if i not in seen:
                seen.add(i)
                queue.append(i)
    return sorted(set(g.followers) - seen)


def reachable_followers(g, i):
    """Followers with a directed path to follower ``i`` (excluding ``i`` unless on a cycle)."""
    g._require_follower(i)
    seen = set()
    stack = list(g.follower_in_neighbors(i))
    while stack:
        j = stack.pop()
        if j not in seen:
            seen.add(j)
            stack.extend(g.follower_in_neighbors(j))
    return seen


def neighbor_leaders(g, i):
    g._require_follower(i)
    return {j for j in g.in_edges[i] if j > g.n}


def longest_influence_path(g, i):
    """Length of the longest follower-only directed path ending at ``i``."""
    g._require_follower(i)
    order = topological_order(g)
    if order is None:
        raise AssumptionError(2, "communication graph has a directed cycle")
    depth = {}
    for j in order:
        if g.is_follower(j):
            depth[j] = max((depth[k] + 1 for k in g.follower_in_neighbors(j)), default=0)
    return depth[i]


def global_phi(g, pivot_tol=1e-12):
    """Centralized NLI matrix ``-L1^{-1} L2`` (n x m).

    Raises :class:`AssumptionError` (Assumption 1) when ``L1`` is singular.
    """
    part = laplacian_partition(g)
    try:
        lu = lu_checked(part.L1, pivot_tol)
    except SingularMatrixError as exc:
        raise AssumptionError(1, f"L1 is singular ({exc}); some follower has no leader") from exc
    return -lu_solve(lu, part.L2)


def check_assumptions(g):
    """Raise :class:`AssumptionError` for the first violated graph assumption."""
    if not is_acyclic(g):
        raise AssumptionError(2, "communication graph has a directed cycle")
    missing = unled_followers(g)
    if missing:
        raise AssumptionError(1, f"followers {missing} are not reachable from any leader")
