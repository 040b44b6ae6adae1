import copy
import json
from pathlib import Path

import numpy as np
import pytest

from containsim.errors import ScenarioError
from containsim.scenario import (apply_k1_file, dumps_scenario, load_packaged, load_scenario,
                                 packaged_k1, parse_json, parse_scenario, schema)

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def doc():
    return json.loads(dumps_scenario(load_packaged()))


def small_doc(ids=("a", "b", "L")):
    a, b, L = ids
    return {
        "agents": {
            "followers": [{"id": a, "A": [[0]], "B": [[1]], "C": [[1]], "x0": [0.5]},
                          {"id": b, "A": [[0]], "B": [[1]], "C": [[1]], "x0": [-0.5]}],
            "leaders": [{"id": L, "S": [[0]], "D": [[1]], "w0": [1.0]}],
        },
        "edges": [[L, a, 1], [a, b, 2]],
    }


def test_round_trip_is_stable(doc):
    s = parse_scenario(doc)
    assert json.loads(dumps_scenario(s)) == doc
    again = parse_scenario(json.loads(dumps_scenario(s)))
    for i in s.followers:
        np.testing.assert_array_equal(s.followers[i].A, again.followers[i].A)
        np.testing.assert_array_equal(s.x0[i], again.x0[i])
    assert s.graph.in_edges == again.graph.in_edges


def test_packaged_example_values():
    s = load_packaged()
    assert (s.graph.n, s.graph.m) == (4, 3)
    assert s.h == 1e-3 and s.T == 20.0 and s.record_every == 10
    np.testing.assert_array_equal(s.leaders[7].S, [[1, -5], [1, -1]])
    assert set(packaged_k1()) == {"1", "2", "3", "4"}


@pytest.mark.parametrize("ids,expected", [
    (("a", "b", "L"), {1: "a", 2: "b", 3: "L"}),
    ((10, 4, 1), {1: 10, 2: 4, 3: 1}),
])
def test_relabeling_follows_declaration_order(ids, expected):
    s = parse_scenario(small_doc(ids))
    assert s.labels == expected
    assert s.graph.in_edges[2] == {1: 2.0}
    assert s.graph.in_edges[1] == {3: 1.0}


@pytest.mark.parametrize("mutate,needle", [
    (lambda d: d.update(extra=1), "extra"),
    (lambda d: d["agents"]["followers"][0].update(K=[[1]]), "K"),
    (lambda d: d["agents"].pop("leaders"), "leaders"),
    (lambda d: d["edges"].append(["a", "b"]), "edges"),
    (lambda d: d["edges"].append(["a", "zz", 1]), "zz"),
    (lambda d: d["agents"]["followers"][1].update(id="a"), "unique"),
    (lambda d: d["agents"]["followers"][0].update(A=[[0, 1], [0]]), "rectangular"),
    (lambda d: d["agents"]["followers"][0].update(x0=[1, 2]), "length"),
    (lambda d: d.update(integration={"h": -1}), "h"),
])
def test_invalid_documents_are_rejected(mutate, needle):
    d = small_doc()
    mutate(d)
    with pytest.raises(ScenarioError, match=needle):
        parse_scenario(d)


def test_json_syntax_error_reports_position():
    with pytest.raises(ScenarioError, match=r"line 3, column"):
        parse_json('{\n  "a": 1,\n  oops\n}', "bad.json")


def test_load_from_file(tmp_path, doc):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    assert load_scenario(p).graph.n == 4
    p.write_text("{")
    with pytest.raises(ScenarioError, match="s.json"):
        load_scenario(p)


def test_k1_file_overrides():
    s = load_packaged()
    apply_k1_file(s, packaged_k1())
    assert set(s.K1) == {1, 2, 3, 4}
    with pytest.raises(ScenarioError, match="unknown follower"):
        apply_k1_file(copy.deepcopy(s), {"99": [[1.0]]})


def test_observer_initial_estimates():
    d = small_doc()
    d["observer"] = {"initial": [{"follower": "b", "leader": "L", "eta": [3.0], "S": [[0.0]]}]}
    s = parse_scenario(d)
    np.testing.assert_array_equal(s.observer_init[(2, 3)]["eta"], [3.0])
    assert "D" not in s.observer_init[(2, 3)]


def test_schema_copy_in_docs_matches_package():
    assert json.loads((ROOT / "docs" / "scenario_schema.json").read_text()) == schema()
