"""Per-follower gain synthesis and closed-loop certification.

For follower ``i`` with influential leaders ``lam_1 < ... < lam_r`` the
regulator equations read::

    Pi S_bb = A Pi + B Gamma
    C Pi    = (phi kron I_Q) D_bb

with ``S_bb = diag(S_lam)`` and ``D_bb = diag(D_lam)``. The control law is
``u = K1 x + K2 eta`` with ``A + B K1`` Hurwitz and ``K2 = Gamma - K1 Pi``.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import AssemblyError, SingularMatrixError, SpectraOverlapError, SynthesisError
from .linalg import block_diag, char_poly, is_hurwitz, lu_checked, solve_checked, solve_sylvester
from .observer import leader_major_coupling, leader_major_theta, permutation_matrix, stack_permutation

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FollowerModel:
    """``x' = A x + B u``, ``y = C x``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A, B, C = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (self.A, self.B, self.C))
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0] or C.shape[1] != A.shape[0]:
            raise ValueError(f"inconsistent follower shapes A{A.shape} B{B.shape} C{C.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def N(self):
        return self.A.shape[0]

    @property
    def P(self):
        return self.B.shape[1]

    @property
    def Q(self):
        return self.C.shape[0]

    def output_full_row_rank(self):
        return np.linalg.matrix_rank(self.C) == self.C.shape[0]


@dataclass
class GainSet:
    Pi: np.ndarray
    Gamma: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    residuals: dict = field(default_factory=dict)


def regulator_target(phi, D_list):
    """``(phi kron I_Q) diag(D_lam)``: the reference output map."""
    Q = D_list[0].shape[0]
    return np.kron(np.asarray(phi, dtype=float)[None, :], np.eye(Q)) @ block_diag(*D_list)


def regulator_residuals(f, S_list, D_list, phi, Pi, Gamma):
    S_bb = block_diag(*S_list)
    r_dyn = np.linalg.norm(Pi @ S_bb - f.A @ Pi - f.B @ Gamma)
    r_out = np.linalg.norm(f.C @ Pi - regulator_target(phi, D_list))
    return float(r_dyn), float(r_out)


def solve_regulator(f, S_list, D_list, phi, tol=1e-9, pivot_tol=1e-12):
    """Solve the regulator equations for ``(Pi, Gamma)``.

    When ``B`` is square and invertible the output equation is solved with
    the right pseudo-inverse of ``C`` and ``Gamma`` follows exactly.
    Otherwise both equations are stacked into one least-squares system in
    ``(vec Pi, vec Gamma)``. Raises :class:`SynthesisError` if a residual
    exceeds ``tol``.
    """
    S_bb = block_diag(*S_list)
    Y = regulator_target(phi, D_list)
    A, B, C = f.A, f.B, f.C
    N, P, r = f.N, f.P, S_bb.shape[0]
    Pi = Gamma = None
    if P == N:
        try:
            lu_checked(B, pivot_tol, relative=True)
            Pi = C.T @ solve_checked(C @ C.T, Y, pivot_tol, relative=True)
            Gamma = solve_checked(B, Pi @ S_bb - A @ Pi, pivot_tol, relative=True)
        except SingularMatrixError:
            Pi = Gamma = None
    if Pi is None:
        I_r = np.eye(r)
        top = np.hstack([np.kron(S_bb.T, np.eye(N)) - np.kron(I_r, A), -np.kron(I_r, B)])
        bottom = np.hstack([np.kron(I_r, C), np.zeros((C.shape[0] * r, P * r))])
        M = np.vstack([top, bottom])
        rhs = np.concatenate([np.zeros(N * r), Y.reshape(-1, order="F")])
        z = np.linalg.lstsq(M, rhs, rcond=None)[0]
        Pi = z[:N * r].reshape((N, r), order="F")
        Gamma = z[N * r:].reshape((P, r), order="F")
    r_dyn, r_out = regulator_residuals(f, S_list, D_list, phi, Pi, Gamma)
    if max(r_dyn, r_out) > tol:
        raise SynthesisError(
            f"regulator equations unsolvable: residuals {r_dyn:.3e}, {r_out:.3e} > {tol:.0e}")
    return Pi, Gamma


def _real_pole_block(poles):
    """Real block-diagonal matrix whose spectrum is ``poles``."""
    poles = [complex(p) for p in poles]
    blocks = []
    pending = list(poles)
    while pending:
        p = pending.pop(0)
        if abs(p.imag) < 1e-14:
            blocks.append(np.array([[p.real]]))
            continue
        match = next((k for k, c in enumerate(pending) if abs(c - p.conjugate()) < 1e-9), None)
        if match is None:
            raise ValueError(f"pole {p} has no conjugate partner")
        pending.pop(match)
        blocks.append(np.array([[p.real, abs(p.imag)], [-abs(p.imag), p.real]]))
    return block_diag(*blocks)


def poly_at(coeffs, z):
    return np.polyval(coeffs, z)


def place_poles(A, B, poles, seed=0, max_attempts=10, tol=1e-6, cond_limit=1e12):
    """State-feedback gain ``K`` such that ``A + B K`` has spectrum ``poles``.

    Sylvester method: pick a random ``G``, solve ``A X - X Lam = B G`` with
    ``spec(Lam) = poles`` and set ``K = -G X^{-1}``, so that
    ``A + B K = X Lam X^{-1}``. Poles must be closed under conjugation, lie
    in the open left half-plane and avoid ``spec(A)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    poles = [complex(p) for p in poles]
    N = A.shape[0]
    if len(poles) != N:
        raise ValueError(f"need {N} poles, got {len(poles)}")
    if any(p.real >= 0 for p in poles):
        raise ValueError("desired poles must lie in the open left half-plane")
    Lam = _real_pole_block(poles)
    rng = np.random.default_rng(seed)
    last = None
    for attempt in range(max_attempts):
        G = rng.standard_normal((B.shape[1], N))
        try:
            X = solve_sylvester(A, Lam, B @ G)
        except SpectraOverlapError as exc:
            raise SynthesisError(f"desired poles overlap the open-loop spectrum: {exc}") from exc
        if not np.all(np.isfinite(X)) or np.linalg.cond(X) > cond_limit:
            last = "ill-conditioned X"
            continue
        K = -np.linalg.solve(X.T, G.T).T
        coeffs = char_poly(A + B @ K)
        worst = max(abs(poly_at(coeffs, p)) for p in poles)
        if worst < tol:
            log.debug("poles placed on attempt %d (char-poly residual %.2e)", attempt + 1, worst)
            return K
        last = f"char-poly residual {worst:.2e}"
    raise SynthesisError(f"pole placement failed after {max_attempts} attempts ({last}); "
                         "(A, B) may be uncontrollable")


def default_poles(N):
    return [-float(k) for k in range(1, N + 1)]


def feedforward_gain(Gamma, K1, Pi):
    Gamma, K1, Pi = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (Gamma, K1, Pi))
    if K1.shape[1] != Pi.shape[0] or Gamma.shape != (K1.shape[0], Pi.shape[1]):
        raise ValueError(f"dimension mismatch: Gamma{Gamma.shape} K1{K1.shape} Pi{Pi.shape}")
    return Gamma - K1 @ Pi


def synthesize_gains(f, view, leaders, K1=None, poles=None, seed=0, tol=None):
    """Regulator solution plus feedback/feedforward gains for one follower."""
    from .config import DEFAULT_TOLERANCES
    tol = tol or DEFAULT_TOLERANCES
    S_list = [leaders[lam].S for lam in view.leaders]
    D_list = [leaders[lam].D for lam in view.leaders]
    Pi, Gamma = solve_regulator(f, S_list, D_list, view.phi, tol.regulator, tol.lu_pivot)
    if K1 is None:
        K1 = place_poles(f.A, f.B, poles or default_poles(f.N), seed=seed, tol=tol.pole)
    K1 = np.atleast_2d(np.asarray(K1, dtype=float))
    if K1.shape != (f.P, f.N):
        raise SynthesisError(f"K1 for follower {view.follower} has shape {K1.shape}, "
                             f"expected {(f.P, f.N)}")
    if not is_hurwitz(f.A + f.B @ K1):
        raise SynthesisError(f"A + B K1 of follower {view.follower} is not Hurwitz")
    K2 = feedforward_gain(Gamma, K1, Pi)
    r_dyn, r_out = regulator_residuals(f, S_list, D_list, view.phi, Pi, Gamma)
    return GainSet(Pi, Gamma, K1, K2, {"regulator_dynamics": r_dyn, "regulator_output": r_out})


@dataclass
class ClosedLoop:
    """Block matrices of the stacked closed loop and its certificate.

    State ``X_C = (x_1..x_n, eta)``, exogenous input ``Omega`` (per-follower
    stacks of influential leader states), error ``E = C_C X_C + D_C Omega``.
    """

    A_C: np.ndarray
    B_C: np.ndarray
    C_C: np.ndarray
    D_C: np.ndarray
    X_bar: np.ndarray
    S_bar: np.ndarray
    n_x: int
    residuals: tuple

    @property
    def plant_block(self):
        return self.A_C[:self.n_x, :self.n_x]

    @property
    def observer_block(self):
        return self.A_C[self.n_x:, self.n_x:]


def assemble_closed_loop(followers, gains, views, slices, leaders, beta_eta=1.0,
                         tol=1e-8, strict=True):
    """Stack every follower and the converged observer into ``(A_C, B_C, C_C, D_C)``.

    The observer block is built leader-major from the reachability slices and
    permuted to follower-major order. ``X_bar = [diag(Pi_i); I]`` and the
    certificate residuals ``|A_C X + B_C - X S|`` and ``|C_C X + D_C|`` are
    attached; with ``strict`` a residual above ``tol`` raises
    :class:`AssemblyError`.
    """
    order = sorted(followers)
    A = block_diag(*[followers[i].A for i in order])
    B = block_diag(*[followers[i].B for i in order])
    C = block_diag(*[followers[i].C for i in order])
    K1 = block_diag(*[gains[i].K1 for i in order])
    K2 = block_diag(*[gains[i].K2 for i in order])
    Pi = block_diag(*[gains[i].Pi for i in order])

    block_leaders = [lam for i in order for lam in views[i].leaders]
    q = leaders[block_leaders[0]].q
    p = stack_permutation(slices)
    Pq = np.kron(permutation_matrix(p), np.eye(q))
    observer = Pq @ leader_major_theta(slices, leaders, beta_eta) @ Pq.T
    drive = beta_eta * Pq @ np.kron(leader_major_coupling(slices), np.eye(q)) @ Pq.T

    n_x, n_eta = A.shape[0], observer.shape[0]
    A_C = np.block([[A + B @ K1, B @ K2], [np.zeros((n_eta, n_x)), observer]])
    B_C = np.vstack([np.zeros((n_x, n_eta)), drive])
    C_C = np.hstack([C, np.zeros((C.shape[0], n_eta))])
    Phi_R = block_diag(*[views[i].phi[None, :] for i in order])
    Q = C.shape[0] // len(order)
    D_bb = block_diag(*[leaders[lam].D for lam in block_leaders])
    D_C = -np.kron(Phi_R, np.eye(Q)) @ D_bb
    S_bar = block_diag(*[leaders[lam].S for lam in block_leaders])
    X_bar = np.vstack([Pi, np.eye(n_eta)])

    r1 = float(np.linalg.norm(A_C @ X_bar + B_C - X_bar @ S_bar))
    r2 = float(np.linalg.norm(C_C @ X_bar + D_C))
    if strict and max(r1, r2) > tol:
        raise AssemblyError(f"closed-loop certificate residuals {r1:.3e}, {r2:.3e} exceed {tol:.0e}")
    return ClosedLoop(A_C, B_C, C_C, D_C, X_bar, S_bar, n_x, (r1, r2))


def pseudo_inverse_certificate(cl):
    """``C^T (C C^T)^{-1} (Phi kron I) D``: the output-pseudo-inverse candidate for
    the plant rows of ``X_bar``."""
    C = cl.C_C[:, :cl.n_x]
    return C.T @ np.linalg.solve(C @ C.T, -cl.D_C)
