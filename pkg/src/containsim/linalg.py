"""Small dense linear-algebra kernels.

Everything here avoids general eigensolvers: stability questions are answered
through Lyapunov equations, and Lyapunov/Sylvester equations through the
Kronecker-vectorized linear system and a pivot-checked LU solve.
"""
import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import SingularMatrixError, SpectraOverlapError


def vec(X):
    """Column-stacking vectorization."""
    return np.asarray(X).reshape(-1, order="F")


def unvec(x, rows, cols):
    return np.asarray(x).reshape((rows, cols), order="F")


def lu_checked(M, pivot_tol=1e-12, relative=False):
    """LU-factorize ``M`` with partial pivoting, rejecting tiny pivots.

    With ``relative=True`` the threshold is scaled by ``max(1, max|M|)``.
    Returns the ``(lu, piv)`` pair accepted by :func:`scipy.linalg.lu_solve`.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if M.size == 0:
        return M.copy(), np.zeros(0, dtype=np.int32)
    with warnings.catch_warnings():
        # exact zero pivots are reported below with our own threshold
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(M, check_finite=True)
    pivots = np.abs(np.diag(lu))
    threshold = pivot_tol
    if relative:
        threshold *= max(1.0, float(np.max(np.abs(M))))
    k = int(np.argmin(pivots))
    if pivots[k] < threshold:
        raise SingularMatrixError(
            f"pivot {pivots[k]:.3e} at position {k} below threshold {threshold:.1e}"
        )
    return lu, piv


def solve_checked(M, rhs, pivot_tol=1e-12, relative=False):
    """Solve ``M x = rhs`` via :func:`lu_checked`."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.size == 0 or np.asarray(M).size == 0:
        return np.zeros_like(rhs)
    return lu_solve(lu_checked(M, pivot_tol, relative), rhs)


def solve_sylvester(A, Lam, Q, pivot_tol=1e-10):
    """Solve ``A X - X Lam = Q`` for ``X``.

    Uses ``(I kron A - Lam^T kron I) vec(X) = vec(Q)`` and a pivot-checked LU
    solve. Raises :class:`SpectraOverlapError` when the operator is
    numerically singular, i.e. ``A`` and ``Lam`` (nearly) share an eigenvalue.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Lam = np.atleast_2d(np.asarray(Lam, dtype=float))
    Q = np.asarray(Q, dtype=float).reshape(A.shape[0], Lam.shape[0])
    p, r = A.shape[0], Lam.shape[0]
    op = np.kron(np.eye(r), A) - np.kron(Lam.T, np.eye(p))
    try:
        x = solve_checked(op, vec(Q), pivot_tol, relative=True)
    except SingularMatrixError as exc:
        raise SpectraOverlapError(f"Sylvester operator singular: {exc}") from exc
    return unvec(x, p, r)


def solve_lyapunov(M, Q=None, pivot_tol=1e-10):
    """Solve ``M^T P + P M = -Q`` (``Q`` defaults to the identity)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[0]
    Q = np.eye(n) if Q is None else np.asarray(Q, dtype=float)
    # M^T P - P (-M) = -Q
    return solve_sylvester(M.T, -M, -Q, pivot_tol)


def is_hurwitz(M, pivot_tol=1e-10):
    """True iff every eigenvalue of ``M`` lies in the open left half-plane.

    Certified by the Lyapunov equation ``M^T P + P M = -I`` having a symmetric
    positive-definite solution. Any solver failure counts as "not Hurwitz".
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise ValueError("is_hurwitz needs a square matrix")
    if M.size == 0:
        return True
    if not np.all(np.isfinite(M)):
        return False
    try:
        P = solve_lyapunov(M, pivot_tol=pivot_tol)
    except SingularMatrixError:
        return False
    scale = max(1.0, float(np.max(np.abs(P))))
    if np.max(np.abs(P - P.T)) > 1e-8 * scale:
        return False
    try:
        np.linalg.cholesky(0.5 * (P + P.T))
    except np.linalg.LinAlgError:
        return False
    return True


def char_poly(M):
    """Monic characteristic polynomial coefficients (highest power first).

    Faddeev-LeVerrier recursion; returns ``[1, c_{n-1}, ..., c_0]``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[0]
    coeffs = [1.0]
    Mk = np.zeros_like(M)
    I = np.eye(n)
    for k in range(1, n + 1):
        Mk = M @ Mk + coeffs[-1] * I
        coeffs.append(-np.trace(M @ Mk) / k)
    return np.array(coeffs)


def block_diag(*blocks):
    """Block-diagonal stack that tolerates empty / zero-width blocks."""
    blocks = [np.atleast_2d(np.asarray(b, dtype=float)) if np.size(b) else
              np.zeros(np.shape(b) if np.ndim(b) == 2 else (0, 0)) for b in blocks]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out
