"""Stage-by-stage driver: validate, discover, local NLI, gains, simulate.

Each stage consumes only what earlier stages produced, so a run can be cut
short after any of them. Errors raised inside a stage carry the stage name
in their ``stage`` attribute.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContainsimError, SingularMatrixError, SynthesisError
from .graph import global_phi, is_acyclic, unled_followers
from .discovery import run_discovery
from .local_view import build_local_views, validate_influence
from .linalg import is_hurwitz
from .observer import build_reachability_slices, marginal_stability_check
from .regulator import assemble_closed_loop, solve_regulator, synthesize_gains
from .simulate import gnuplot_script, integrate, summarize, write_trace_csv

log = logging.getLogger(__name__)

STAGES = ("validate", "discover", "nli", "gains", "simulate")


@dataclass
class Check:
    assumption: int
    subject: str
    ok: bool
    detail: str = ""

    def __post_init__(self):
        self.ok = bool(self.ok)

    def line(self):
        status = "PASS" if self.ok else "FAIL"
        text = f"[{status}] assumption {self.assumption}: {self.subject}"
        return text + (f" ({self.detail})" if self.detail else "")


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self):
        return all(c.ok for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.ok]

    def to_dict(self):
        return {"ok": self.ok, "checks": [c.__dict__ for c in self.checks]}


def stabilizable(A, B, tol=1e-9):
    """Hautus test on every eigenvalue with non-negative real part."""
    N = A.shape[0]
    for lam in np.linalg.eigvals(A):
        if lam.real < -tol:
            continue
        M = np.hstack([lam * np.eye(N) - A, B.astype(complex)])
        if np.linalg.matrix_rank(M, tol=1e-9 * max(1.0, np.abs(M).max())) < N:
            return False
    return True


def validate_scenario(s):
    """Check every assumption that can be checked from the scenario alone."""
    g, tol = s.graph, s.tolerances
    rep = ValidationReport()
    name = s.original
    acyclic = is_acyclic(g)
    rep.checks.append(Check(2, "communication graph is acyclic", acyclic,
                            "" if acyclic else "directed cycle present"))
    unled = unled_followers(g)
    rep.checks.append(Check(1, "every follower is reachable from a leader", not unled,
                            "" if not unled else f"unreached followers {[name(i) for i in unled]}"))
    rep.checks.append(Check(3, "agent labels are unique and typed", True))
    for i, f in sorted(s.followers.items()):
        rank_ok = f.output_full_row_rank()
        rep.checks.append(Check(4, f"C of follower {name(i)} has full row rank", rank_ok,
                                "" if rank_ok else f"rank {np.linalg.matrix_rank(f.C)} < {f.Q}"))
        stab = stabilizable(f.A, f.B)
        rep.checks.append(Check(4, f"(A, B) of follower {name(i)} is stabilizable", stab))
    for lam, L in sorted(s.leaders.items()):
        ok = marginal_stability_check(L.S)
        rep.checks.append(Check(6, f"leader {name(lam)} is marginally stable", ok))
    if acyclic and not unled:
        d = run_discovery(g)
        views = build_local_views(g, d, tol.lu_pivot)
        for i, f in sorted(s.followers.items()):
            view = views[i]
            try:
                solve_regulator(f, [s.leaders[l].S for l in view.leaders],
                                [s.leaders[l].D for l in view.leaders], view.phi,
                                tol.regulator, tol.lu_pivot)
                rep.checks.append(Check(7, f"regulator equations of follower {name(i)} solvable", True))
            except (SynthesisError, SingularMatrixError) as exc:
                rep.checks.append(Check(7, f"regulator equations of follower {name(i)} solvable",
                                        False, str(exc)))
    return rep


@dataclass
class PipelineResult:
    scenario: object
    report: ValidationReport = None
    discovery: object = None
    views: dict = None
    slices: dict = None
    gains: dict = None
    closed_loop: object = None
    trace: object = None
    summary: dict = None
    stages_done: list = field(default_factory=list)


def _stage(name):
    def wrap(fn):
        def run(*args, **kwargs):
            log.info("stage %s", name)
            try:
                return fn(*args, **kwargs)
            except ContainsimError as exc:
                exc.stage = name
                raise
        return run
    return wrap


@_stage("validate")
def _validate(res):
    res.report = validate_scenario(res.scenario)


@_stage("discover")
def _discover(res):
    res.discovery = run_discovery(res.scenario.graph)


@_stage("nli")
def _nli(res):
    s = res.scenario
    res.views = build_local_views(s.graph, res.discovery, s.tolerances.lu_pivot)
    for i, v in res.views.items():
        if not validate_influence(v, s.tolerances.influence):
            log.warning("influence vector of follower %s is not a probability vector", i)


@_stage("gains")
def _gains(res):
    s = res.scenario
    res.gains = {}
    for i, f in sorted(s.followers.items()):
        res.gains[i] = synthesize_gains(f, res.views[i], s.leaders, K1=s.K1.get(i),
                                        poles=s.poles.get(i), seed=s.seed + i, tol=s.tolerances)
    res.slices = build_reachability_slices(s.graph, res.discovery)
    res.closed_loop = assemble_closed_loop(s.followers, res.gains, res.views, res.slices,
                                           s.leaders, s.observer.beta_eta, s.tolerances.closed_loop)


@_stage("simulate")
def _simulate(res):
    s = res.scenario
    res.trace = integrate(s, res.views, res.gains)
    res.summary = summarize(res.trace, s.tolerances)


_RUNNERS = {"validate": _validate, "discover": _discover, "nli": _nli,
            "gains": _gains, "simulate": _simulate}


def run_pipeline(s, stop="simulate", out_dir=None, strict_validation=True):
    """Run stages in order up to and including ``stop``.

    With ``out_dir`` every finished stage writes its artifact immediately,
    so a failure later on leaves earlier outputs in place. A failing
    validation stops the run before discovery when ``strict_validation``.
    """
    if stop not in STAGES:
        raise ValueError(f"unknown stage {stop!r}; choose from {STAGES}")
    res = PipelineResult(s)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for name in STAGES[:STAGES.index(stop) + 1]:
        _RUNNERS[name](res)
        res.stages_done.append(name)
        if out is not None:
            write_stage(res, name, out)
        if name == "validate" and strict_validation and not res.report.ok:
            break
    return res


def _mat(M):
    return np.asarray(M).tolist()


def discovery_doc(res):
    s, d = res.scenario, res.discovery
    name = s.original
    out = {"rounds_used": d.rounds_used, "followers": {}}
    for i in sorted(d.sets):
        out["followers"][str(name(i))] = {
            "influential_leaders": [name(x) for x in sorted(d.leaders(i))],
            "influential_followers": [name(x) for x in sorted(d.followers(i))],
            "influential_edges": [[name(frm), name(to), w] for (to, frm), w in sorted(d.edges(i).items())],
            "change_rounds": list(d.change_rounds[i]),
            "local_stop_round": d.local_stop[i],
        }
    return out


def nli_doc(res):
    s = res.scenario
    name = s.original
    phi_global = global_phi(s.graph, s.tolerances.lu_pivot)
    out = {"followers": {}, "global_phi": _mat(phi_global)}
    worst = 0.0
    for i, v in sorted(res.views.items()):
        cols = [lam - s.graph.n - 1 for lam in v.leaders]
        worst = max(worst, float(np.abs(phi_global[i - 1, cols] - v.phi).max()))
        out["followers"][str(name(i))] = {
            "local_followers": [name(x) for x in v.mu],
            "local_leaders": [name(x) for x in v.mu_bar],
            "L1_local": _mat(v.L1_local), "L2_local": _mat(v.L2_local),
            "selector": _mat(v.upsilon), "phi": _mat(v.phi),
            "phi_sum": float(v.phi.sum()),
        }
    out["max_deviation_from_global"] = worst
    return out


def gains_doc(res):
    s = res.scenario
    name = s.original
    out = {"seed": s.seed, "followers": {}}
    for i, gs in sorted(res.gains.items()):
        f = s.followers[i]
        eig = np.linalg.eigvals(f.A + f.B @ gs.K1)
        out["followers"][str(name(i))] = {
            "Pi": _mat(gs.Pi), "Gamma": _mat(gs.Gamma), "K1": _mat(gs.K1), "K2": _mat(gs.K2),
            "residuals": gs.residuals,
            "closed_loop_eigenvalues": [[float(z.real), float(z.imag)]
                                        for z in sorted(eig, key=lambda z: (z.real, z.imag))],
            "K1_source": "file" if i in s.K1 else "pole placement",
        }
    cl = res.closed_loop
    out["closed_loop"] = {"certificate_residuals": list(cl.residuals),
                          "A_C_hurwitz": bool(is_hurwitz(cl.A_C))}
    return out


def write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def write_stage(res, name, out):
    if name == "validate":
        write_json(out / "validation.json", res.report.to_dict())
    elif name == "discover":
        write_json(out / "discovery.json", discovery_doc(res))
    elif name == "nli":
        write_json(out / "nli.json", nli_doc(res))
    elif name == "gains":
        write_json(out / "gains.json", gains_doc(res))
    elif name == "simulate":
        write_trace_csv(res.trace, out / "trace.csv")
        summary = dict(res.summary)
        summary["scenario"] = res.scenario.name
        summary["labels"] = {str(k): v for k, v in res.scenario.labels.items()}
        write_json(out / "summary.json", summary)
        (out / "plots.gp").write_text(gnuplot_script(res.trace))
