import json
import subprocess
import sys

import pytest

from containsim.cli import (EXIT_DIVERGENCE, EXIT_NOT_CONTAINED, EXIT_OK, EXIT_SYNTHESIS,
                            EXIT_VALIDATION, main)
from containsim.scenario import packaged_k1


def scenario(**changes):
    d = {
        "name": "two followers on a chain",
        "agents": {
            "followers": [{"id": "a", "A": [[0]], "B": [[1]], "C": [[1]], "x0": [0.5]},
                          {"id": "b", "A": [[1]], "B": [[1]], "C": [[1]], "x0": [-0.5]}],
            "leaders": [{"id": "L", "S": [[0]], "D": [[1]], "w0": [1.0]}],
        },
        "edges": [["L", "a", 1], ["a", "b", 1]],
        "gains": {"seed": 0, "followers": {"a": {"poles": [-3]}, "b": {"poles": [-2]}}},
        "integration": {"h": 0.01, "T": 20.0, "record_every": 10},
    }
    for key, value in changes.items():
        d[key] = value
    return d


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_validate_example(capsys):
    assert main(["validate", "@four_followers", "--out", ""]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 10


def test_full_run_contained(tmp_path):
    out = tmp_path / "out"
    assert main(["run", write(tmp_path, scenario()), "--out", str(out)]) == EXIT_OK
    for f in ("validation.json", "discovery.json", "nli.json", "gains.json", "trace.csv",
              "summary.json", "plots.gp"):
        assert (out / f).exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["containment_achieved"] and summary["labels"] == {"1": "a", "2": "b", "3": "L"}


def cycle():
    d = scenario()
    d["edges"].append(["b", "a", 1])
    return d


def zero_output_row():
    d = scenario()
    d["agents"]["followers"][0]["C"] = [[0]]
    return d


def unstable_k1():
    return scenario(gains={"followers": {"a": {"K1": [[1.0]]}}})


@pytest.mark.parametrize("doc,code", [
    (cycle, EXIT_VALIDATION),
    (zero_output_row, EXIT_VALIDATION),
    (unstable_k1, EXIT_SYNTHESIS),
])
def test_exit_codes_for_bad_scenarios(tmp_path, doc, code, capsys):
    assert main(["run", write(tmp_path, doc()), "--out", str(tmp_path / "o")]) == code
    assert capsys.readouterr().err


def test_exit_code_divergence(tmp_path, capsys):
    args = ["run", write(tmp_path, scenario()), "--out", str(tmp_path / "o"),
            "--tol-divergence", "0.5"]
    assert main(args) == EXIT_DIVERGENCE
    assert "[simulate]" in capsys.readouterr().err


def test_exit_code_not_contained(tmp_path):
    doc = scenario(integration={"h": 0.01, "T": 2.0, "record_every": 10})
    args = ["run", write(tmp_path, doc), "--out", str(tmp_path / "o"), "--tol-containment-from", "1"]
    assert main(args) == EXIT_NOT_CONTAINED


def test_malformed_file_is_validation_error(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"agents": ')
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == EXIT_VALIDATION
    assert "line 1" in capsys.readouterr().err


def test_stage_gating(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "@four_followers", "--stage", "nli", "--out", str(out)]) == EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == ["discovery.json", "nli.json", "validation.json"]
    nli = json.loads((out / "nli.json").read_text())
    assert nli["max_deviation_from_global"] < 1e-12
    assert nli["followers"]["3"]["phi"] == pytest.approx([5 / 12, 1 / 4, 1 / 3])


def test_seed_determinism(tmp_path):
    def run(tag, *extra):
        out = tmp_path / tag
        assert main(["gains", "@four_followers", "--seed", "7", "--out", str(out), *extra]) == EXIT_OK
        return (out / "gains.json").read_bytes()
    first = run("a")
    assert first == run("b")
    assert json.loads(first)["seed"] == 7

    def trace(tag):
        out = tmp_path / tag
        main(["run", write(tmp_path, scenario()), "--seed", "7", "--out", str(out)])
        return (out / "trace.csv").read_bytes()
    assert trace("c") == trace("d")


def test_k1_from_file(tmp_path):
    k1 = write(tmp_path, packaged_k1(), "k1.json")
    out = tmp_path / "o"
    assert main(["gains", "@four_followers", "--k1-from-file", k1, "--out", str(out)]) == EXIT_OK
    doc = json.loads((out / "gains.json").read_text())
    assert all(f["K1_source"] == "file" for f in doc["followers"].values())
    assert doc["followers"]["1"]["K1"] == packaged_k1()["1"]


def test_batch_directory_with_jobs(tmp_path, capsys):
    batch = tmp_path / "batch"
    batch.mkdir()
    write(batch, scenario(), "good.json")
    write(batch, cycle(), "cyclic.json")
    out = tmp_path / "o"
    code = main(["discover", str(batch), "--jobs", "2", "--out", str(out)])
    assert code == EXIT_VALIDATION
    assert (out / "good" / "discovery.json").exists()
    assert not (out / "cyclic" / "discovery.json").exists()


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "containsim.cli", "validate", "@four_followers", "--out", ""],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0, r.stderr
    assert "acyclic" in r.stdout
