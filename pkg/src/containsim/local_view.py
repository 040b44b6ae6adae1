"""Per-follower local Laplacian blocks and leader-influence (NLI) vectors.

A follower only knows the agents and edges it discovered. From those it
builds the Laplacian of its local graph and reads off its own row of
``-L1^{-1} L2``, which gives the convex weight of each influential leader.
"""
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np
from scipy.linalg import lu_solve

from .errors import AssumptionError, SingularMatrixError
from .linalg import lu_checked


@dataclass(frozen=True)
class SortFn:
    """Ascending enumeration of a finite label set.

    ``ordered`` is 0-indexed internally; :meth:`rank` is the 1-based position.
    """

    ordered: tuple
    _index: MappingProxyType

    def __len__(self):
        return len(self.ordered)

    def __iter__(self):
        return iter(self.ordered)

    def __contains__(self, label):
        return label in self._index

    def __getitem__(self, k):
        return self.ordered[k]

    def index(self, label):
        """0-based position of ``label``."""
        return self._index[label]

    def rank(self, label):
        """1-based position of ``label``."""
        return self._index[label] + 1


def sort_function(labels):
    labels = sorted(set(labels))
    if not labels:
        raise ValueError("sort function of an empty set is undefined")
    return SortFn(tuple(labels), MappingProxyType({x: k for k, x in enumerate(labels)}))


@dataclass(frozen=True)
class LocalView:
    follower: int
    mu: SortFn
    mu_bar: SortFn
    A_local: np.ndarray
    A2_local: np.ndarray
    D_local: np.ndarray
    L1_local: np.ndarray
    L2_local: np.ndarray
    upsilon: np.ndarray
    phi: np.ndarray

    @property
    def leaders(self):
        return self.mu_bar.ordered

    def phi_full(self):
        """Leader weights as a ``{leader: weight}`` mapping."""
        return {lam: float(w) for lam, w in zip(self.mu_bar, self.phi)}


def build_local_view(i, d, pivot_tol=1e-12):
    """Assemble follower ``i``'s local Laplacian blocks and NLI row vector."""
    mu = sort_function(d.followers(i))
    leaders = d.leaders(i)
    if not leaders:
        raise AssumptionError(1, f"follower {i} discovered no influential leader")
    mu_bar = sort_function(leaders)
    edges = d.edges(i)
    l, ll = len(mu), len(mu_bar)
    A = np.zeros((l, l))
    A2 = np.zeros((l, ll))
    for (to, frm), w in edges.items():
        if to not in mu:
            continue
        if frm in mu:
            A[mu.index(to), mu.index(frm)] = w
        elif frm in mu_bar:
            A2[mu.index(to), mu_bar.index(frm)] = w
    D = np.diag(A.sum(axis=1) + A2.sum(axis=1))
    L1 = D - A
    L2 = -A2
    upsilon = np.zeros(l)
    upsilon[mu.index(i)] = 1.0
    try:
        lu = lu_checked(L1, pivot_tol)
    except SingularMatrixError as exc:
        raise AssumptionError(1, f"local L1 of follower {i} is singular: {exc}") from exc
    # one transposed solve selects row rank(i) of L1^{-1} L2
    z = lu_solve(lu, upsilon, trans=1)
    phi = -z @ L2
    return LocalView(i, mu, mu_bar, A, A2, D, L1, L2, upsilon, phi)


def phi_full_solve(view, pivot_tol=1e-12):
    """``-Upsilon L1^{-1} L2`` through a solve against every column of ``L2``."""
    lu = lu_checked(view.L1_local, pivot_tol)
    return -view.upsilon @ lu_solve(lu, view.L2_local)


def build_local_views(g, d, pivot_tol=1e-12):
    return {i: build_local_view(i, d, pivot_tol) for i in g.followers}


def validate_influence(phi, tol=1e-9):
    """Leader weights are a probability vector up to ``tol``."""
    phi = np.asarray(getattr(phi, "phi", phi), dtype=float)
    return bool(abs(phi.sum() - 1.0) <= tol and np.all(phi >= -tol))
