"""Independent reference computations used only by the tests.

Everything here avoids the library's own kernels: exact rational
arithmetic, brute-force path enumeration and grid search.
"""
from fractions import Fraction
from itertools import product

import numpy as np


def frac_matrix(M):
    return [[Fraction(x).limit_denominator(10**9) for x in row] for row in np.atleast_2d(M)]


def frac_solve(A, B):
    """Gauss-Jordan elimination over the rationals: returns ``A^{-1} B``."""
    n = len(A)
    aug = [list(A[r]) + list(B[r]) for r in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def frac_matmul(A, B):
    return [[sum(a * b for a, b in zip(row, col)) for col in zip(*B)] for row in A]


def exact_global_phi(n, m, edges):
    """``-L1^{-1} L2`` in exact arithmetic from ``(src, dst, w)`` triples."""
    L1 = [[Fraction(0)] * n for _ in range(n)]
    L2 = [[Fraction(0)] * m for _ in range(n)]
    for src, dst, w in edges:
        w = Fraction(w).limit_denominator(10**9)
        i = dst - 1
        L1[i][i] += w
        if src <= n:
            L1[i][src - 1] -= w
        else:
            L2[i][src - n - 1] -= w
    Z = frac_solve(L1, L2)
    return [[-z for z in row] for row in Z]


def all_paths_to(edges, n, target):
    """Every directed follower-only path ending at ``target`` (as node lists)."""
    preds = {}
    for src, dst, _ in edges:
        if src <= n and dst <= n:
            preds.setdefault(dst, []).append(src)
    paths = []

    def walk(path):
        paths.append(path)
        for p in preds.get(path[0], []):
            if p not in path:
                walk([p] + path)

    walk([target])
    return paths


def longest_path_bruteforce(edges, n, target):
    return max(len(p) - 1 for p in all_paths_to(edges, n, target))


def ancestors(edges, node):
    """All agents with a directed path to ``node``."""
    preds = {}
    for src, dst, _ in edges:
        preds.setdefault(dst, set()).add(src)
    seen, stack = set(), list(preds.get(node, ()))
    while stack:
        j = stack.pop()
        if j not in seen:
            seen.add(j)
            stack.extend(preds.get(j, ()))
    return seen


def centralized_sets(n, m, edges):
    """Influential leaders, followers and edges of every follower, read off
    the whole graph: everything upstream of ``i`` through followers."""
    out = {}
    for i in range(1, n + 1):
        # followers upstream through follower-only paths, plus i itself
        fol = {i}
        frontier = [i]
        while frontier:
            j = frontier.pop()
            for src, dst, _ in edges:
                if dst == j and src <= n and src not in fol:
                    fol.add(src)
                    frontier.append(src)
        lead = {src for src, dst, _ in edges if dst in fol and src > n}
        edge_set = {(dst, src): w for src, dst, w in edges if dst in fol}
        out[i] = (lead, fol, edge_set)
    return out


def grid_hull_distance(y, points, levels=6, res=40):
    """Zooming grid search over the simplex (2 or 3 vertices)."""
    V = np.column_stack(points)
    K = V.shape[1]
    if K == 1:
        return float(np.linalg.norm(y - V[:, 0]))
    center = np.full(K - 1, 1.0 / K)
    width = 1.0
    best = np.inf
    for _ in range(levels):
        axes = [np.linspace(max(0.0, c - width), min(1.0, c + width), res) for c in center]
        for coords in product(*axes):
            a = np.array(coords)
            if a.sum() > 1.0 + 1e-15:
                continue
            alpha = np.append(a, 1.0 - a.sum())
            d = float(np.linalg.norm(V @ alpha - y))
            if d < best:
                best, center = d, a
        width /= res / 4
    return best


def random_dag(rng, n, m, p_edge=0.35, max_w=3):
    """Random acyclic leader-follower graph where every follower is led.

    Followers are ordered by a random permutation; edges only go from
    earlier to later followers, and every follower gets at least one
    leader or an earlier (led) follower as in-neighbour.
    """
    order = list(rng.permutation(np.arange(1, n + 1)))
    edges = {}
    for pos, i in enumerate(order):
        for j in order[:pos]:
            if rng.random() < p_edge:
                edges[(j, i)] = int(rng.integers(1, max_w + 1))
        for lam in range(n + 1, n + m + 1):
            if rng.random() < p_edge / 2:
                edges[(lam, i)] = int(rng.integers(1, max_w + 1))
        if not any(dst == i for (_, dst) in edges):
            if pos > 0 and rng.random() < 0.6:
                src = order[int(rng.integers(0, pos))]
            else:
                src = int(rng.integers(n + 1, n + m + 1))
            edges[(src, i)] = int(rng.integers(1, max_w + 1))
    return [(s, d, w) for (s, d), w in sorted(edges.items())]
