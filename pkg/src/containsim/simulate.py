"""Fixed-step simulation of leaders, controlled followers and the observer network."""
import logging
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .errors import DivergenceError, ScenarioError
from .hull import hull_projection
from .linalg import block_diag
from .observer import ObserverGains, ObserverNetwork

log = logging.getLogger(__name__)


@dataclass
class Scenario:
    """Everything needed to run the pipeline on one network.

    Labels are internal: followers ``1..n``, leaders ``n+1..n+m``.
    ``labels`` maps each internal label back to the identifier used in the
    scenario file. ``observer_init`` maps ``(follower, leader)`` to a dict
    with optional ``eta``/``S``/``D`` starting estimates (zeros otherwise).
    """

    graph: object
    followers: dict
    leaders: dict
    x0: dict
    w0: dict
    name: str = "scenario"
    K1: dict = field(default_factory=dict)
    poles: dict = field(default_factory=dict)
    seed: int = 0
    observer: ObserverGains = field(default_factory=ObserverGains)
    observer_init: dict = field(default_factory=dict)
    h: float = 1e-3
    T: float = 20.0
    record_every: int = 10
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        g = self.graph
        if sorted(self.followers) != list(g.followers) or sorted(self.leaders) != list(g.leaders):
            raise ScenarioError("agent declarations do not match the graph labels")
        qs = {(L.q, L.Q) for L in self.leaders.values()}
        if len(qs) != 1:
            raise ScenarioError(f"leaders disagree on (state, output) dimensions: {sorted(qs)}")
        (q, Q), = qs
        for i, f in self.followers.items():
            if f.Q != Q:
                raise ScenarioError(f"follower {i} has output dimension {f.Q}, leaders have {Q}")
            if np.shape(self.x0.get(i, ())) != (f.N,):
                raise ScenarioError(f"follower {i} initial state must have length {f.N}")
        for lam in self.leaders:
            if np.shape(self.w0.get(lam, ())) != (q,):
                raise ScenarioError(f"leader {lam} initial state must have length {q}")
        if not self.h > 0 or not self.T > self.h:
            raise ScenarioError(f"need h > 0 and T > h (h={self.h}, T={self.T})")
        if int(self.record_every) < 1:
            raise ScenarioError("record_every must be a positive integer")

    @property
    def q(self):
        return next(iter(self.leaders.values())).q

    @property
    def Q(self):
        return next(iter(self.leaders.values())).Q

    def original(self, label):
        return self.labels.get(label, label)


@dataclass
class Trace:
    """Sampled trajectories; ``data[k]`` is the row recorded at ``times[k]``."""

    times: np.ndarray
    columns: list
    data: np.ndarray

    def column(self, name):
        return self.data[:, self.columns.index(name)]

    def series(self, prefix, label):
        """All components ``{prefix}{label}_{j}`` as a ``(samples, dim)`` array."""
        head = f"{prefix}{label}_"
        idx = [k for k, c in enumerate(self.columns)
               if c.startswith(head) and c[len(head):].isdigit()]
        return self.data[:, idx]

    def dist(self, i):
        return self.column(f"dist{i}")

    def observer_error(self, kind, i):
        return self.column(f"err_{kind}_{i}")

    def followers(self):
        return sorted(int(c[4:]) for c in self.columns if c.startswith("dist"))


class _ViewLeaders:
    """Adapter exposing ``leaders(i)`` from a dict of local views."""

    def __init__(self, views):
        self._views = views

    def leaders(self, i):
        return set(self._views[i].leaders)


def containment_error(y_i, view, D_list, Omega_i):
    """``y_i - (phi kron I_Q) diag(D_lam) Omega_i``."""
    y_i = np.asarray(y_i, dtype=float)
    Q = y_i.shape[0]
    return y_i - np.kron(view.phi[None, :], np.eye(Q)) @ block_diag(*D_list) @ np.asarray(Omega_i)


def rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + h / 2, y + h / 2 * k1)
    k3 = f(t + h / 2, y + h / 2 * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


class ClosedLoopSystem:
    """Monolithic state ``(omega, x, eta, S_hat, D_hat)`` and its vector field."""

    def __init__(self, s, views, gains):
        self.s = s
        g = s.graph
        self.order = list(g.followers)
        self.leader_order = list(g.leaders)
        self.net = ObserverNetwork(g, _ViewLeaders(views), s.leaders, s.observer)
        f = s.followers
        self.Acl = block_diag(*[f[i].A + f[i].B @ gains[i].K1 for i in self.order])
        self.BK2 = block_diag(*[f[i].B @ gains[i].K2 for i in self.order])
        self.C = block_diag(*[f[i].C for i in self.order])
        q, Q, m, nb = s.q, s.Q, g.m, self.net.n_blocks
        self.S_leaders = np.stack([s.leaders[lam].S for lam in self.leader_order])
        self.D_leaders = np.stack([s.leaders[lam].D for lam in self.leader_order])
        sizes = [m * q, self.Acl.shape[0], nb * q, nb * q * q, nb * Q * q]
        self.cuts = np.cumsum([0] + sizes)
        self.shapes = [(m, q), (sizes[1],), (nb, q), (nb, q, q), (nb, Q, q)]
        self.views = views
        self._assemble_linear_part()

    def _assemble_linear_part(self):
        """Everything except ``S_hat @ eta`` is affine in the state: probe it once."""
        dim = int(self.cuts[-1])
        self.offset = self.reference_rhs(0.0, np.zeros(dim), bilinear=False)
        cols = [self.reference_rhs(0.0, e, bilinear=False) - self.offset for e in np.eye(dim)]
        self.linear = np.column_stack(cols)
        self.eta_slice = slice(int(self.cuts[2]), int(self.cuts[3]))

    def split(self, y):
        c = self.cuts
        return [y[c[k]:c[k + 1]].reshape(self.shapes[k]) for k in range(5)]

    def initial_state(self):
        s = self.s
        omega = np.stack([np.asarray(s.w0[lam], dtype=float) for lam in self.leader_order])
        x = np.concatenate([np.asarray(s.x0[i], dtype=float) for i in self.order])
        eta, S_hat, D_hat = self.net.zeros()
        for b, key in enumerate(self.net.blocks):
            init = s.observer_init.get(key, {})
            if "eta" in init:
                eta[b] = init["eta"]
            if "S" in init:
                S_hat[b] = init["S"]
            if "D" in init:
                D_hat[b] = init["D"]
        return np.concatenate([omega.ravel(), x, eta.ravel(), S_hat.ravel(), D_hat.ravel()])

    def reference_rhs(self, t, y, bilinear=True):
        """Vector field evaluated block by block (slow, used for assembly and checks)."""
        omega, x, eta, S_hat, D_hat = self.split(y)
        d_omega = np.einsum("kij,kj->ki", self.S_leaders, omega)
        d_x = self.Acl @ x + self.BK2 @ eta.ravel()
        d_eta, d_S, d_D = self.net.derivative(eta, S_hat, D_hat, omega)
        if not bilinear:
            d_eta = d_eta - np.einsum("bij,bj->bi", S_hat, eta)
        return np.concatenate([d_omega.ravel(), d_x, d_eta.ravel(), d_S.ravel(), d_D.ravel()])

    def rhs(self, t, y):
        out = self.linear @ y + self.offset
        c = self.cuts
        eta = y[c[2]:c[3]].reshape(self.shapes[2])
        S_hat = y[c[3]:c[4]].reshape(self.shapes[3])
        out[self.eta_slice] += np.einsum("bij,bj->bi", S_hat, eta).ravel()
        return out

    def columns(self):
        s, Q, q = self.s, self.s.Q, self.s.q
        cols = ["t"]
        for i in self.order:
            cols += [f"x{i}_{j + 1}" for j in range(s.followers[i].N)]
        for i in self.order:
            cols += [f"y{i}_{j + 1}" for j in range(Q)]
        for lam in self.leader_order:
            cols += [f"w{lam}_{j + 1}" for j in range(q)]
        for i in self.order:
            cols += [f"e{i}_{j + 1}" for j in range(Q)]
        cols += [f"dist{i}" for i in self.order]
        for kind in ("eta", "S", "D"):
            cols += [f"err_{kind}_{i}" for i in self.order]
        return cols

    def record(self, t, y, warm):
        omega, x, eta, S_hat, D_hat = self.split(y)
        y_lead = np.einsum("kij,kj->ki", self.D_leaders, omega)
        y_fol = self.C @ x
        Q = self.s.Q
        n0 = self.s.graph.n + 1
        e, dist = [], []
        for k, i in enumerate(self.order):
            yi = y_fol[k * Q:(k + 1) * Q]
            view = self.views[i]
            ref = sum(w * y_lead[lam - n0] for lam, w in zip(view.leaders, view.phi))
            e.append(yi - ref)
            proj = hull_projection(yi, list(y_lead), tol=self.s.tolerances.hull_gap,
                                   max_iter=self.s.tolerances.hull_max_iter, init=warm.get(i))
            warm[i] = proj.weights
            dist.append(proj.distance)
        errs = self.net.errors(eta, S_hat, D_hat, omega)
        err_cols = [errs[i][2] for i in self.order] + [errs[i][0] for i in self.order] + \
                   [errs[i][1] for i in self.order]
        return np.concatenate([[t], x, y_fol, omega.ravel(), np.concatenate(e), dist, err_cols])


def integrate(s, views, gains, progress=None):
    """Classical RK4 with fixed step ``s.h`` over ``[0, s.T]``.

    Every coupled state advances from the same snapshot each step. A row is
    recorded every ``s.record_every`` steps (and at ``t = 0``). Raises
    :class:`DivergenceError` on a non-finite state or one whose norm exceeds
    the divergence tolerance.
    """
    sys = ClosedLoopSystem(s, views, gains)
    y = sys.initial_state()
    steps = int(round(s.T / s.h))
    limit = s.tolerances.divergence
    warm = {}
    rows = [sys.record(0.0, y, warm)]
    for k in range(1, steps + 1):
        y = rk4_step(sys.rhs, (k - 1) * s.h, y, s.h)
        norm = float(np.sqrt(y @ y))
        if not np.isfinite(norm) or norm > limit:
            raise DivergenceError(k * s.h, norm)
        if k % s.record_every == 0 or k == steps:
            rows.append(sys.record(k * s.h, y, warm))
        if progress is not None and k % 1000 == 0:
            progress(k, steps)
    data = np.vstack(rows)
    return Trace(data[:, 0].copy(), sys.columns(), data)


def final_state(s, views, gains, h=None):
    """Terminal monolithic state of an RK4 run without recording (order checks)."""
    sys = ClosedLoopSystem(s, views, gains)
    h = s.h if h is None else h
    y = sys.initial_state()
    steps = int(round(s.T / h))
    for k in range(steps):
        y = rk4_step(sys.rhs, k * h, y, h)
    return y


def containment_achieved(trace, t_from, tol):
    """Every follower's hull distance is ``<= tol`` at all samples ``t >= t_from``."""
    mask = trace.times >= t_from - 1e-12
    if not mask.any():
        return False
    return bool(all(np.all(trace.dist(i)[mask] <= tol) for i in trace.followers()))


def summarize(trace, tol):
    """Terminal errors and the containment verdict as a JSON-ready dict."""
    out = {"T": float(trace.times[-1]), "followers": {}}
    mask = trace.times >= tol.containment_from - 1e-12
    for i in trace.followers():
        e_T = float(np.linalg.norm(trace.series("e", i)[-1]))
        out["followers"][str(i)] = {
            "terminal_containment_error": e_T,
            "terminal_hull_distance": float(trace.dist(i)[-1]),
            "max_hull_distance_after": float(trace.dist(i)[mask].max()) if mask.any() else None,
            "terminal_err_eta": float(trace.observer_error("eta", i)[-1]),
            "terminal_err_S": float(trace.observer_error("S", i)[-1]),
            "terminal_err_D": float(trace.observer_error("D", i)[-1]),
        }
    terminal_ok = all(v["terminal_containment_error"] < tol.terminal
                      for v in out["followers"].values())
    out["containment_from"] = tol.containment_from
    out["containment_tolerance"] = tol.containment
    out["terminal_tolerance"] = tol.terminal
    out["terminal_errors_ok"] = terminal_ok
    out["containment_achieved"] = containment_achieved(trace, tol.containment_from, tol.containment)
    return out


def write_trace_csv(trace, path):
    np.savetxt(path, trace.data, fmt="%.10e", delimiter=",",
               header=",".join(trace.columns), comments="")


def gnuplot_script(trace, csv_name="trace.csv"):
    """Three-panel gnuplot script: observer errors, outputs, containment errors."""
    col = {c: k + 1 for k, c in enumerate(trace.columns)}
    fol = trace.followers()
    Q = trace.series("y", fol[0]).shape[1]
    lines = [
        "set datafile separator ','",
        "set terminal pngcairo size 900,1200",
        "set output 'trace.png'",
        "set multiplot layout 3,1",
        "set xlabel 't'",
        "set title 'observer estimation errors'",
        "set logscale y",
        "plot " + ", \\\n     ".join(
            f"'{csv_name}' every ::1 using 1:{col[f'err_{k}_{i}']} with lines title 'err_{k}_{i}'"
            for k in ("eta", "S", "D") for i in fol),
        "unset logscale y",
        "set title 'follower outputs (component 1)'",
        "plot " + ", \\\n     ".join(
            [f"'{csv_name}' every ::1 using 1:{col[f'y{i}_1']} with lines title 'y{i}_1'"
             for i in fol]),
        "set title 'containment errors'",
        "plot " + ", \\\n     ".join(
            f"'{csv_name}' every ::1 using 1:{col[f'e{i}_{j + 1}']} with lines title 'e{i}_{j + 1}'"
            for i in fol for j in range(Q)),
        "unset multiplot",
    ]
    return "\n".join(lines) + "\n"
