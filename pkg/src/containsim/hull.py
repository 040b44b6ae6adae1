"""Euclidean distance from a point to the convex hull of finitely many points."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HullProjection:
    distance: float
    weights: np.ndarray
    gap: float        # certified upper minus lower bound on the distance
    iterations: int


def _face_step(G, b, alpha):
    """Move towards the minimizer over the affine hull of the current support.

    The step stops at the simplex boundary, so the objective never increases
    and the result stays feasible; this keeps the iteration count at a few
    per evaluation when the nearest point lies inside a face.
    """
    S = np.flatnonzero(alpha > 0)
    k = len(S)
    if k < 2:
        return alpha
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = G[np.ix_(S, S)]
    kkt[:k, k] = kkt[k, :k] = 1.0
    rhs = np.append(b[S], 1.0)
    w = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
    if not np.all(np.isfinite(w)):
        return alpha
    cur = alpha[S]
    neg = w < 0
    t = 1.0 if not neg.any() else float(np.min(cur[neg] / (cur[neg] - w[neg])))
    new = alpha.copy()
    new[S] = np.clip(cur + t * (w - cur), 0.0, None)
    total = new.sum()
    if total <= 0:
        return alpha
    new /= total
    f_old = alpha @ G @ alpha - 2 * alpha @ b
    f_new = new @ G @ new - 2 * new @ b
    return new if f_new <= f_old else alpha


def hull_projection(y, points, tol=1e-8, max_iter=10000, init=None):
    """Nearest point of ``co(points)`` to ``y`` by away-step Frank-Wolfe.

    Minimizes ``f(a) = |V a - y|^2 / 2`` over the probability simplex with
    exact line search. With residual ``r = V a - y`` the hull lies in the
    half-space ``{z : r.z >= min_k r.p_k}``, which gives a lower bound on the
    distance that sits exactly ``fw_gap / |r|`` below the upper bound
    ``|r|``. Iteration stops once that certified gap (or ``|r|`` itself) is
    within ``tol``.

    Parameters
    ----------
    y : (Q,) array
    points : sequence of (Q,) arrays, at least one
    init : optional starting weights (warm start); defaults to the vertex
        closest to ``y``.
    """
    y = np.asarray(y, dtype=float)
    V = np.column_stack([np.asarray(p, dtype=float) for p in points])
    K = V.shape[1]
    if K == 0:
        raise ValueError("need at least one hull point")
    if K == 1:
        return HullProjection(float(np.linalg.norm(y - V[:, 0])), np.ones(1), 0.0, 0)
    G = V.T @ V
    b = V.T @ y
    if init is None:
        alpha = np.zeros(K)
        alpha[int(np.argmin(np.sum((V - y[:, None]) ** 2, axis=0)))] = 1.0
    else:
        alpha = np.clip(np.asarray(init, dtype=float), 0.0, None)
        alpha = alpha / alpha.sum()
    Ga = G @ alpha
    gap = np.inf
    for it in range(max_iter + 1):
        grad = Ga - b
        s = int(np.argmin(grad))
        fw_gap = float(grad @ alpha - grad[s])
        upper = float(np.linalg.norm(V @ alpha - y))
        gap = upper if upper <= tol else fw_gap / upper
        if gap <= tol or it == max_iter:
            break
        support = np.flatnonzero(alpha > 0)
        a = int(support[np.argmax(grad[support])])
        away_gap = float(grad[a] - grad @ alpha)
        if fw_gap >= away_gap:
            # toward vertex s: d = e_s - alpha
            d_grad = grad[s] - grad @ alpha
            curv = G[s, s] - 2.0 * Ga[s] + float(alpha @ Ga)
            step_max = 1.0
            direction = ("fw", s)
        else:
            # away from vertex a: d = alpha - e_a
            d_grad = grad @ alpha - grad[a]
            curv = float(alpha @ Ga) - 2.0 * Ga[a] + G[a, a]
            step_max = alpha[a] / (1.0 - alpha[a]) if alpha[a] < 1.0 else np.inf
            direction = ("away", a)
        step = step_max if curv <= 0 else min(step_max, -d_grad / curv)
        if step <= 0:
            break
        kind, v = direction
        if kind == "fw":
            alpha *= 1.0 - step
            alpha[v] += step
        else:
            alpha *= 1.0 + step
            alpha[v] -= step
            if step == step_max:
                alpha[v] = 0.0
        alpha = np.clip(alpha, 0.0, None)
        alpha /= alpha.sum()
        alpha = _face_step(G, b, alpha)
        Ga = G @ alpha
    dist = float(np.linalg.norm(V @ alpha - y))
    return HullProjection(dist, alpha, float(gap), it)


def hull_distance(y, points, tol=1e-8, max_iter=10000):
    """``min |y - sum_k a_k p_k|_2`` over convex weights ``a``."""
    return hull_projection(y, points, tol, max_iter).distance
