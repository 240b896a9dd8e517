import json

import pytest

from lagonn.cli import main


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_solve_ok(work, capsys):
    assert main(["solve", "u20-01", "--trials", "10", "--seed", "7", "--jobs", "1"]) == 0
    out = capsys.readouterr().out
    assert "trials solved" in out
    lines = (work / "solve.csv").read_text().splitlines()
    assert lines[0].startswith("trial,seed,solved") and len(lines) == 11
    manifest = json.loads((work / "solve.manifest.json").read_text())
    assert manifest["master_seed"] == 7 and "solve.csv" in manifest["outputs"]


def test_solve_onn_reports_costs(work, capsys):
    code = main(["solve", "u20-01", "--mode", "onn", "--trials", "10", "--jobs", "1"])
    assert code in (0, 10)
    rows = (work / "solve.csv").read_text().splitlines()[1:]
    assert any(float(r.split(",")[5]) >= 1 for r in rows)


def test_solve_bad_file(work, capsys):
    (work / "bad.cnf").write_text("p cnf 2 1\n1 -1 2 0\n")
    assert main(["solve", "bad.cnf"]) == 2
    assert "repeats a variable" in capsys.readouterr().err
    assert main(["solve", "missing.cnf"]) == 2
    assert main(["solve"]) == 2
    assert main(["solve", "u20-01", "--nstates", "1"]) == 2


def test_solve_unsolved_exit(work):
    assert main(["solve", "u20-04", "--tmax", "0.3", "--trials", "2", "--jobs", "1"]) == 10


def test_solve_trace(work):
    assert main(["solve", "u20-01", "--trace", "tr.csv", "--trace-phases", "--jobs", "1"]) == 0
    header = (work / "tr.csv").read_text().splitlines()[0].split(",")
    assert header[:3] == ["t", "kappa", "lagrangian"] and len(header) == 3 + 20 + 91


def test_bench_walksat_and_replay(work):
    assert main(["bench", "--bundled", "20", "--first", "2", "--solver", "walksat",
                 "--trials", "10", "--jobs", "1", "--out", "res/w"]) == 0
    assert (work / "res" / "w.csv").exists() and (work / "res" / "w.json").exists()
    assert main(["replay", "res/w.manifest.json"]) == 0


def test_replay_detects_change(work):
    assert main(["walksat", "u20-01", "--trials", "5", "--jobs", "1"]) == 0
    (work / "walksat.csv").write_text("tampered\n")
    m = json.loads((work / "walksat.manifest.json").read_text())
    m["outputs"]["walksat.csv"] = "0" * 64
    (work / "walksat.manifest.json").write_text(json.dumps(m))
    assert main(["replay", "walksat.manifest.json"]) == 1
    assert main(["replay", "nope.json"]) == 2


def test_anneal_cost_trace(work, capsys):
    assert main(["anneal", "u100-01", "--trials", "2", "--cost-trace", "ct.csv", "--all-true-init",
                 "--trace-steps", "150", "--jobs", "1", "--tmax-cap", "20000"]) in (0, 10)
    assert "first sweep" in capsys.readouterr().out
    lines = (work / "ct.csv").read_text().splitlines()
    assert lines[0] == "step,cost,temperature" and len(lines) == 152
    assert main(["replay", "anneal.manifest.json"]) == 0


def test_sweep_and_discretize(work):
    assert main(["sweep-tau", "u20-02", "--grid", "0.5,1", "--trials", "5", "--jobs", "1"]) == 0
    s = json.loads((work / "sweep_tau.json").read_text())
    assert set(s["median_tts"]) == {"0.5", "1.0"}
    assert main(["discretize", "u20-02", "--grid", "64", "--trials", "5", "--jobs", "1"]) == 0
    s = json.loads((work / "discretize.json").read_text())
    assert set(s["median_tts"]) == {"0", "64"}
    assert main(["sweep-tau", "u20-02", "--grid", "a,b"]) == 2


def test_copy_demo_and_gen(work):
    assert main(["copy-demo", "--mode", "penalty", "--strength", "0.5", "--seeds", "2",
                 "--tmax", "20", "--trace", "cd.csv"]) == 0
    assert (work / "cd.csv").exists()
    assert main(["replay", "copy_demo.manifest.json"]) == 0
    assert main(["gen", "--vars", "10", "--clauses", "30", "--seed", "1", "--certify", "--out", "g.cnf"]) == 0
    assert main(["solve", "g.cnf", "--jobs", "1", "--out", "g"]) == 0
