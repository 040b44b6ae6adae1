"""Scenario files: JSON parsing, schema validation, relabelling and serialization.

Agents may carry arbitrary integer or string identifiers in the file. They
are relabelled internally: followers ``1..n`` in declaration order, then
leaders ``n+1..n+m``. The mapping back to file identifiers is kept on the
:class:`~containsim.simulate.Scenario`.
"""
import json
from importlib import resources

import jsonschema
import numpy as np

from .config import ToleranceConfig
from .errors import ScenarioError
from .graph import Graph
from .observer import LeaderModel, ObserverGains
from .regulator import FollowerModel
from .simulate import Scenario

_SCHEMA = None


def schema():
    global _SCHEMA
    if _SCHEMA is None:
        text = resources.files("containsim").joinpath("data/scenario_schema.json").read_text()
        _SCHEMA = json.loads(text)
    return _SCHEMA


def _matrix(value, what):
    rows = {len(r) for r in value}
    if len(rows) != 1:
        raise ScenarioError(f"{what} is not rectangular (row lengths {sorted(rows)})")
    return np.array(value, dtype=float)


def _pole(p):
    return complex(p[0], p[1]) if isinstance(p, list) else complex(p)


def parse_json(text, source="<string>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def parse_scenario(doc, source="<scenario>"):
    """Validate a decoded JSON document and build a :class:`Scenario`."""
    try:
        jsonschema.validate(doc, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"{source}: {where}: {exc.message}") from exc

    fdecl = doc["agents"]["followers"]
    ldecl = doc["agents"]["leaders"]
    n, m = len(fdecl), len(ldecl)
    ids = [a["id"] for a in fdecl + ldecl]
    if len(set(map(str, ids))) != len(ids):
        raise ScenarioError(f"{source}: agent identifiers are not unique")
    internal = {str(a): k + 1 for k, a in enumerate(ids)}
    labels = {k + 1: a for k, a in enumerate(ids)}

    def lookup(a, what):
        try:
            return internal[str(a)]
        except KeyError:
            raise ScenarioError(f"{source}: {what} refers to unknown agent {a!r}") from None

    followers, x0 = {}, {}
    for k, a in enumerate(fdecl, start=1):
        try:
            followers[k] = FollowerModel(_matrix(a["A"], f"A of {a['id']}"),
                                         _matrix(a["B"], f"B of {a['id']}"),
                                         _matrix(a["C"], f"C of {a['id']}"))
        except ValueError as exc:
            raise ScenarioError(f"{source}: follower {a['id']!r}: {exc}") from exc
        x0[k] = np.array(a["x0"], dtype=float)
    leaders, w0 = {}, {}
    for k, a in enumerate(ldecl, start=n + 1):
        try:
            leaders[k] = LeaderModel(_matrix(a["S"], f"S of {a['id']}"),
                                     _matrix(a["D"], f"D of {a['id']}"))
        except ValueError as exc:
            raise ScenarioError(f"{source}: leader {a['id']!r}: {exc}") from exc
        w0[k] = np.array(a["w0"], dtype=float)

    edges = [(lookup(s, "edge"), lookup(t, "edge"), w) for s, t, w in doc["edges"]]
    g = Graph.from_edges(n, m, edges)

    gains = doc.get("gains", {})
    K1, poles = {}, {}
    for a, spec in gains.get("followers", {}).items():
        i = lookup(a, "gains")
        if not g.is_follower(i):
            raise ScenarioError(f"{source}: gains given for leader {a!r}")
        if "K1" in spec:
            K1[i] = _matrix(spec["K1"], f"K1 of {a}")
        if "poles" in spec:
            poles[i] = [_pole(p) for p in spec["poles"]]

    obs = doc.get("observer", {})
    try:
        beta = ObserverGains(obs.get("beta_eta", 1.0), obs.get("beta_S", 1.0), obs.get("beta_D", 1.0))
    except ValueError as exc:
        raise ScenarioError(f"{source}: {exc}") from exc
    init = {}
    for est in obs.get("initial", []):
        key = (lookup(est["follower"], "observer.initial"), lookup(est["leader"], "observer.initial"))
        init[key] = {k: np.array(est[k], dtype=float) for k in ("eta", "S", "D") if k in est}

    integ = doc.get("integration", {})
    try:
        tol = ToleranceConfig.from_dict(doc.get("tolerances", {}))
    except KeyError as exc:
        raise ScenarioError(f"{source}: {exc}") from exc
    return Scenario(graph=g, followers=followers, leaders=leaders, x0=x0, w0=w0,
                    name=doc.get("name", "scenario"), K1=K1, poles=poles,
                    seed=gains.get("seed", 0), observer=beta, observer_init=init,
                    h=integ.get("h", 1e-3), T=integ.get("T", 20.0),
                    record_every=integ.get("record_every", 10), tolerances=tol, labels=labels)


def load_scenario(path):
    with open(path) as fh:
        text = fh.read()
    return parse_scenario(parse_json(text, str(path)), str(path))


def load_packaged(name="four_followers"):
    """A scenario shipped inside the package; ``four_followers`` is the bundled example."""
    text = resources.files("containsim").joinpath(f"data/{name}.json").read_text()
    return parse_scenario(parse_json(text, name), name)


def packaged_k1(name="four_followers_k1"):
    text = resources.files("containsim").joinpath(f"data/{name}.json").read_text()
    return parse_json(text, name)


def _tolist(M):
    return np.asarray(M).tolist()


def dump_scenario(s):
    """Inverse of :func:`parse_scenario` (file identifiers restored)."""
    orig = s.original
    doc = {
        "name": s.name,
        "agents": {
            "followers": [{"id": orig(i), "A": _tolist(f.A), "B": _tolist(f.B), "C": _tolist(f.C),
                           "x0": _tolist(s.x0[i])} for i, f in sorted(s.followers.items())],
            "leaders": [{"id": orig(k), "S": _tolist(L.S), "D": _tolist(L.D),
                         "w0": _tolist(s.w0[k])} for k, L in sorted(s.leaders.items())],
        },
        "edges": [[orig(src), orig(dst), w] for src, dst, w in s.graph.edges()],
        "gains": {"seed": s.seed, "followers": {}},
        "observer": {"beta_eta": s.observer.beta_eta, "beta_S": s.observer.beta_S,
                     "beta_D": s.observer.beta_D, "initial": []},
        "integration": {"h": s.h, "T": s.T, "record_every": s.record_every},
        "tolerances": s.tolerances.to_dict(),
    }
    for i in sorted(set(s.K1) | set(s.poles)):
        entry = {}
        if i in s.K1:
            entry["K1"] = _tolist(s.K1[i])
        if i in s.poles:
            entry["poles"] = [p.real if p.imag == 0 else [p.real, p.imag] for p in s.poles[i]]
        doc["gains"]["followers"][str(orig(i))] = entry
    for (i, lam), est in sorted(s.observer_init.items()):
        doc["observer"]["initial"].append(
            {"follower": orig(i), "leader": orig(lam), **{k: _tolist(v) for k, v in est.items()}})
    return doc


def dumps_scenario(s):
    return json.dumps(dump_scenario(s), indent=2)


def apply_k1_file(s, doc):
    """Attach externally designed ``K1`` matrices (``{follower id: matrix}``)."""
    internal = {str(v): k for k, v in s.labels.items()} or {str(i): i for i in s.followers}
    for a, M in doc.items():
        i = internal.get(str(a))
        if i is None or not s.graph.is_follower(i):
            raise ScenarioError(f"K1 file refers to unknown follower {a!r}")
        s.K1[i] = _matrix(M, f"K1 of {a}")
    return s
