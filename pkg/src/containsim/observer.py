"""Adaptive distributed observer of the influential leaders.

Each follower ``i`` keeps, for every leader ``lam`` it is influenced by, an
estimate of the leader state (``eta``), its dynamics matrix (``S_hat``) and
its output matrix (``D_hat``). Estimates are driven towards follower
neighbours' estimates and, for directly pinned leaders, towards the truth.
A neighbour that does not track ``lam`` contributes the follower's own block,
i.e. nothing.

Blocks are ordered follower-major: follower 1's leaders ascending, then
follower 2's, and so on. Reachability slices give the leader-major view used
to analyse the error dynamics.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .linalg import block_diag
from .local_view import sort_function


@dataclass(frozen=True)
class LeaderModel:
    """Exo-system ``w' = S w``, ``y = D w``."""

    S: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.S, dtype=float))
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        if S.shape[0] != S.shape[1] or D.shape[1] != S.shape[0]:
            raise ValueError(f"inconsistent leader shapes S{S.shape} D{D.shape}")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "D", D)

    @property
    def q(self):
        return self.S.shape[0]

    @property
    def Q(self):
        return self.D.shape[0]


@dataclass(frozen=True)
class ObserverGains:
    beta_eta: float = 1.0
    beta_S: float = 1.0
    beta_D: float = 1.0

    def __post_init__(self):
        if min(self.beta_eta, self.beta_S, self.beta_D) <= 0:
            raise ValueError("observer gains must be positive")


@dataclass
class ObserverState:
    """One follower's estimates, one block per tracked leader (ascending)."""

    leaders: tuple
    eta: np.ndarray    # (l, q)
    S_hat: np.ndarray  # (l, q, q)
    D_hat: np.ndarray  # (l, Q, q)

    @classmethod
    def zeros(cls, leaders, q, Q):
        l = len(leaders)
        return cls(tuple(leaders), np.zeros((l, q)), np.zeros((l, q, q)), np.zeros((l, Q, q)))

    def block(self, lam):
        k = self.leaders.index(lam)
        return self.eta[k], self.S_hat[k], self.D_hat[k]

    def eta_stack(self):
        return self.eta.reshape(-1)

    def S_bar(self):
        return block_diag(*self.S_hat)

    def D_bar(self):
        return block_diag(*self.D_hat)


def observer_derivative(i, own, neighbor_states, leader_truth, g, gains):
    """Time derivative of follower ``i``'s observer blocks.

    Parameters
    ----------
    i : int
        Follower label.
    own : ObserverState
    neighbor_states : mapping
        ``{j: ObserverState}`` for every follower neighbour ``j`` of ``i``.
    leader_truth : mapping
        ``{lam: (omega, S, D)}`` for the leaders that pin ``i`` directly.
    g : Graph
    gains : ObserverGains

    Returns
    -------
    ObserverState holding the derivatives.
    """
    d_eta = np.zeros_like(own.eta)
    d_S = np.zeros_like(own.S_hat)
    d_D = np.zeros_like(own.D_hat)
    for k, lam in enumerate(own.leaders):
        eta, S_hat, D_hat = own.eta[k], own.S_hat[k], own.D_hat[k]
        c_eta = np.zeros_like(eta)
        c_S = np.zeros_like(S_hat)
        c_D = np.zeros_like(D_hat)
        for j in g.follower_in_neighbors(i):
            a_ij = g.weight(i, j)
            nb = neighbor_states[j]
            if lam in nb.leaders:
                eta_j, S_j, D_j = nb.block(lam)
            else:
                eta_j, S_j, D_j = eta, S_hat, D_hat
            c_eta += a_ij * (eta_j - eta)
            c_S += a_ij * (S_j - S_hat)
            c_D += a_ij * (D_j - D_hat)
        pin = g.weight(i, lam)
        if pin:
            omega, S_true, D_true = leader_truth[lam]
            c_eta += pin * (omega - eta)
            c_S += pin * (S_true - S_hat)
            c_D += pin * (D_true - D_hat)
        d_eta[k] = S_hat @ eta + gains.beta_eta * c_eta
        d_S[k] = gains.beta_S * c_S
        d_D[k] = gains.beta_D * c_D
    return ObserverState(own.leaders, d_eta, d_S, d_D)


def observer_blocks(g, d):
    """Follower-major list of ``(follower, leader)`` observer blocks."""
    return [(i, lam) for i in g.followers for lam in sorted(d.leaders(i))]


@dataclass(frozen=True)
class ReachabilitySlice:
    """Followers influenced by one leader and their error-coupling matrix.

    ``H = L + delta``: ``L`` is the Laplacian of follower-to-follower edges
    inside the slice and ``delta`` the diagonal of direct pinning weights.
    ``block_index[k]`` is the follower-major block of the ``k``-th follower.
    """

    leader: int
    followers: object  # SortFn, or None for an empty slice
    H: np.ndarray
    block_index: np.ndarray

    @property
    def size(self):
        return 0 if self.followers is None else len(self.followers)

    @property
    def is_empty(self):
        return self.size == 0


def build_reachability_slice(g, lam, d):
    if not g.is_leader(lam):
        raise ValueError(f"agent {lam} is not a leader")
    members = [i for i in g.followers if lam in d.leaders(i)]
    if not members:
        return ReachabilitySlice(lam, None, np.zeros((0, 0)), np.zeros(0, dtype=int))
    mu = sort_function(members)
    H = np.zeros((len(mu), len(mu)))
    for r, i in enumerate(mu):
        for j in g.follower_in_neighbors(i):
            if j in mu:
                a_ij = g.weight(i, j)
                H[r, r] += a_ij
                H[r, mu.index(j)] -= a_ij
        H[r, r] += g.weight(i, lam)
    blocks = {b: k for k, b in enumerate(observer_blocks(g, d))}
    index = np.array([blocks[(i, lam)] for i in mu], dtype=int)
    return ReachabilitySlice(lam, mu, H, index)


def build_reachability_slices(g, d):
    return {lam: build_reachability_slice(g, lam, d) for lam in g.leaders}


def stack_permutation(slices):
    """Index array ``p``: leader-major block ``k`` is follower-major block ``p[k]``.

    The same permutation reorders state estimates (vectors) and dynamics
    estimates (matrices); only the block size differs.
    """
    parts = [slices[lam].block_index for lam in sorted(slices)]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=int)


def permutation_matrix(p):
    """``P`` with ``P @ x_leader_major == x_follower_major`` (unit blocks)."""
    P = np.zeros((len(p), len(p)))
    P[p, np.arange(len(p))] = 1.0
    return P


def leader_major_coupling(slices):
    """``diag(H_lam)`` over leaders in ascending order."""
    return block_diag(*[slices[lam].H for lam in sorted(slices)])


def leader_major_theta(slices, leaders, beta_eta):
    """``diag(I kron S_lam - beta (H_lam kron I_q))`` over leaders."""
    parts = []
    for lam in sorted(slices):
        sl = slices[lam]
        if sl.is_empty:
            continue
        S = leaders[lam].S
        q = S.shape[0]
        parts.append(np.kron(np.eye(sl.size), S) - beta_eta * np.kron(sl.H, np.eye(q)))
    return block_diag(*parts)


class ObserverNetwork:
    """Vectorized observer for all followers at once.

    Arrays are follower-major over :func:`observer_blocks`: ``eta`` is
    ``(nb, q)``, ``S_hat`` is ``(nb, q, q)``, ``D_hat`` is ``(nb, Q, q)``;
    leader states ``omega`` are ``(m, q)`` in label order.
    """

    def __init__(self, g, d, leaders, gains=ObserverGains()):
        self.g = g
        self.gains = gains
        self.blocks = observer_blocks(g, d)
        self.leader_labels = list(g.leaders)
        first = leaders[self.leader_labels[0]]
        self.q, self.Q = first.q, first.Q
        for lam in self.leader_labels:
            if (leaders[lam].q, leaders[lam].Q) != (self.q, self.Q):
                raise ValueError("all leaders must share state and output dimensions")
        self.S_true = np.stack([leaders[lam].S for lam in self.leader_labels])
        self.D_true = np.stack([leaders[lam].D for lam in self.leader_labels])
        index = {b: k for k, b in enumerate(self.blocks)}
        nb = len(self.blocks)
        H = np.zeros((nb, nb))
        pin = np.zeros(nb)
        lam_idx = np.zeros(nb, dtype=int)
        for b, (i, lam) in enumerate(self.blocks):
            lam_idx[b] = lam - g.n - 1
            for j in g.follower_in_neighbors(i):
                if (j, lam) in index:
                    a_ij = g.weight(i, j)
                    H[b, b] += a_ij
                    H[b, index[(j, lam)]] -= a_ij
            pin[b] = g.weight(i, lam)
            H[b, b] += pin[b]
        self.H = H
        self.pin = pin
        self.lam_idx = lam_idx
        self.follower_blocks = {i: [b for b, (f, _) in enumerate(self.blocks) if f == i]
                                for i in g.followers}

    @property
    def n_blocks(self):
        return len(self.blocks)

    def zeros(self):
        nb = self.n_blocks
        return np.zeros((nb, self.q)), np.zeros((nb, self.q, self.q)), np.zeros((nb, self.Q, self.q))

    def derivative(self, eta, S_hat, D_hat, omega):
        g = self.gains
        nb = self.n_blocks
        pin = self.pin
        d_eta = np.einsum("bij,bj->bi", S_hat, eta) + g.beta_eta * (
            -self.H @ eta + pin[:, None] * omega[self.lam_idx])
        d_S = g.beta_S * (-(self.H @ S_hat.reshape(nb, -1)).reshape(S_hat.shape)
                          + pin[:, None, None] * self.S_true[self.lam_idx])
        d_D = g.beta_D * (-(self.H @ D_hat.reshape(nb, -1)).reshape(D_hat.shape)
                          + pin[:, None, None] * self.D_true[self.lam_idx])
        return d_eta, d_S, d_D

    def linear_eta_matrix(self):
        """Converged observer: ``eta' = M eta + N omega_stack`` -> ``M`` (follower-major)."""
        q = self.q
        S_bar = block_diag(*self.S_true[self.lam_idx])
        return S_bar - self.gains.beta_eta * np.kron(self.H, np.eye(q))

    def to_states(self, eta, S_hat, D_hat):
        return {i: ObserverState(tuple(self.blocks[b][1] for b in bs),
                                 eta[bs].copy(), S_hat[bs].copy(), D_hat[bs].copy())
                for i, bs in self.follower_blocks.items()}

    def errors(self, eta, S_hat, D_hat, omega):
        """Per-follower ``(|S~|_F, |D~|_F, |eta~|_2)``."""
        e_eta = eta - omega[self.lam_idx]
        e_S = S_hat - self.S_true[self.lam_idx]
        e_D = D_hat - self.D_true[self.lam_idx]
        return {i: (float(np.linalg.norm(e_S[bs])), float(np.linalg.norm(e_D[bs])),
                    float(np.linalg.norm(e_eta[bs])))
                for i, bs in self.follower_blocks.items()}


def estimation_errors(states, leaders, omega):
    """Per-follower Frobenius/Euclidean norms of the estimation errors.

    ``states`` maps follower -> :class:`ObserverState`; ``leaders`` maps
    leader -> :class:`LeaderModel`; ``omega`` maps leader -> state vector.
    Returns ``{i: (err_S, err_D, err_eta)}``.
    """
    out = {}
    for i, st in states.items():
        e_S = [st.S_hat[k] - leaders[lam].S for k, lam in enumerate(st.leaders)]
        e_D = [st.D_hat[k] - leaders[lam].D for k, lam in enumerate(st.leaders)]
        e_eta = [st.eta[k] - omega[lam] for k, lam in enumerate(st.leaders)]
        out[i] = (float(np.linalg.norm(np.concatenate(e_S))),
                  float(np.linalg.norm(np.concatenate(e_D))),
                  float(np.linalg.norm(np.concatenate(e_eta))))
    return out


def virtual_output_error(view, state, leaders, omega):
    """Observer-built reference output minus the true virtual-leader output."""
    Q = state.D_hat.shape[1]
    kron_phi = np.kron(view.phi[None, :], np.eye(Q))
    D_true = block_diag(*[leaders[lam].D for lam in state.leaders])
    Omega = np.concatenate([omega[lam] for lam in state.leaders])
    return kron_phi @ state.D_bar() @ state.eta_stack() - kron_phi @ D_true @ Omega


def marginal_stability_check(S, horizon=50.0, bound=None, samples=5000, floor=1e-2):
    """Empirical marginal-stability test on the free response ``exp(S t)``.

    True iff ``|exp(S t)|_F`` stays below ``bound`` (default ``100 |I|_F``)
    and above ``floor * |I|_F`` at every one of ``samples`` times in
    ``[0, horizon]``: bounded and not decaying to zero.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    ref = np.sqrt(S.shape[0])
    bound = 100.0 * ref if bound is None else bound
    step = expm(S * (horizon / samples))
    Phi = np.eye(S.shape[0])
    for _ in range(samples):
        Phi = step @ Phi
        norm = np.linalg.norm(Phi)
        if not np.isfinite(norm) or norm > bound or norm < floor * ref:
            return False
    return True
