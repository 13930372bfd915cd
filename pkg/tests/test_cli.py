import json
import subprocess
import sys

import pytest

from gridprice import scenario as scn
from gridprice.cli import run


@pytest.fixture
def ref_file(tmp_path):
    path = tmp_path / "ref.json"
    assert run(["generate", "--out", str(path)]) == 0
    return path


@pytest.fixture
def tiny3(tmp_path):
    doc = {
        "version": 1,
        "label": "tiny3",
        "seed": 0,
        "n_users": 3,
        "n_periods": 1,
        "p_b": 1.0,
        "P_cap": 4.0,
        "consumers": [
            {"alpha": 2.0, "omega": [w], "m": [0.2], "s": [0.0]} for w in (3.6, 4.4, 5.1)
        ],
    }
    path = tmp_path / "tiny3.json"
    path.write_text(json.dumps(doc))
    return path


def test_generate_matches_library(ref_file):
    assert scn.load(ref_file) == scn.generate_reference()


def test_seed_env_and_flag(tmp_path, monkeypatch):
    monkeypatch.setenv("GRIDPRICE_SEED", "3")
    assert run(["generate", "--out", str(tmp_path / "a.json")]) == 0
    assert scn.load(tmp_path / "a.json").seed == 3
    assert run(["generate", "--out", str(tmp_path / "b.json"), "--seed", "5"]) == 0
    assert scn.load(tmp_path / "b.json").seed == 5


def test_solve_json_and_summary(ref_file, capsys):
    code = run(
        ["solve", "--scenario", str(ref_file), "--period", "3", "--formulation", "f1", "--weights", "1,1,1", "--eta", "0.5"]
    )
    assert code == 0
    captured = capsys.readouterr()
    doc = json.loads(captured.out)
    assert doc["formulation"] == "f1" and doc["period"] == 3 and doc["eta"] == 0.5
    assert max(doc["prices"]) - min(doc["prices"]) <= 0.5 + 1e-6
    assert "objective" in captured.err and "omega" in captured.err


def test_solve_out_then_validate(ref_file, tmp_path, capsys):
    out = tmp_path / "o.json"
    assert run(["solve", "--scenario", str(ref_file), "--period", "2", "--formulation", "f2", "--out", str(out)]) == 0
    assert "revenue" in capsys.readouterr().out
    assert run(["validate", "--outcome", str(out), "--scenario", str(ref_file)]) == 0
    assert capsys.readouterr().out.strip().endswith("ok")


def test_validate_catches_tampering(ref_file, tmp_path, capsys):
    out = tmp_path / "o.json"
    run(["solve", "--scenario", str(ref_file), "--period", "2", "--out", str(out), "--eta", "0.3"])
    doc = json.loads(out.read_text())
    doc["prices"][0] += 0.5
    out.write_text(json.dumps(doc))
    capsys.readouterr()
    assert run(["validate", "--outcome", str(out), "--scenario", str(ref_file)]) == 1
    text = capsys.readouterr()
    assert "FAIL" in text.out and "error [" in text.err


def test_eta_star_constant_across_periods(ref_file, capsys):
    assert run(["eta-star", "--scenario", str(ref_file), "--weights", "1,1,1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "period,eta_star,eta_star_net_metering"
    values = [float(line.split(",")[1]) for line in lines[1:]]
    assert len(values) == 6
    assert max(values) - min(values) <= 1e-12


def test_eta_star_nm_varies_with_solar(tmp_path, capsys):
    path = tmp_path / "solar.json"
    assert run(["generate", "--out", str(path), "--solar"]) == 0
    capsys.readouterr()
    run(["eta-star", "--scenario", str(path)])
    lines = capsys.readouterr().out.strip().splitlines()[1:]
    nm = [float(line.split(",")[2]) for line in lines]
    assert nm[0] == nm[5] and len(set(nm[1:5])) > 1


def test_oracle_agrees_with_solver(tiny3, capsys):
    assert run(["oracle", "--scenario", str(tiny3), "--period", "1", "--grid", "0.01"]) == 0
    oracle = json.loads(capsys.readouterr().out)
    assert run(["solve", "--scenario", str(tiny3), "--period", "1", "--formulation", "f1"]) == 0
    solved = json.loads(capsys.readouterr().out)
    assert min(solved["demands"]) > 0
    assert abs(oracle["objective"] - solved["objective"]) <= 5 * 0.01 * 3 * 4.0
    assert oracle["objective"] <= solved["objective"] + 1e-9


def test_sweeps_write_csv(ref_file, tmp_path):
    files = {}
    for cmd, extra in (
        ("sweep-eta", ["--grid", "0,0.5"]),
        ("sweep-e1", ["--grid", "1,2", "--formulations", "f1,f2"]),
        ("compare-nm", []),
        ("sweep-e2-sellback", ["--grid", "0,1"]),
        ("sweep-eta-nm", ["--grid", "0,1"]),
    ):
        path = tmp_path / f"{cmd}.csv"
        assert run([cmd, "--scenario", str(ref_file), "--out", str(path), *extra]) == 0
        files[cmd] = path.read_text()
    assert files["sweep-e1"].count("\n") == 5
    assert files["compare-nm"].splitlines()[0].startswith("period,model")


def test_sweep_eta_byte_stable(ref_file, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert run(["sweep-eta", "--scenario", str(ref_file), "--grid", "0,0.3,0.9", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize(
    "argv, code",
    [
        (["solve", "--period", "9"], 1),
        (["solve", "--period", "1", "--formulation", "nope"], 2),
        (["solve", "--period", "1", "--weights", "1,2"], 2),
        (["solve", "--period", "1", "--eta", "-1"], 2),
        (["frobnicate"], 2),
        ([], 2),
        (["oracle", "--period", "1"], 1),  # 20 users is too many for the grid
    ],
)
def test_exit_codes(argv, code, capsys):
    assert run(argv) == code
    if code == 1:
        assert "error [" in capsys.readouterr().err


def test_malformed_scenario_reports_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    doc = scn.to_dict(scn.generate_reference(7, 2))
    del doc["consumers"][0]["alpha"]
    bad.write_text(json.dumps(doc))
    assert run(["solve", "--scenario", str(bad), "--period", "1"]) == 1
    err = capsys.readouterr().err
    assert "SCHEMA_VIOLATION" in err and "consumers[0].alpha" in err
    assert run(["solve", "--scenario", str(tmp_path / "missing.json"), "--period", "1"]) == 1
    assert "IO_ERROR" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    out = tmp_path / "s.json"
    proc = subprocess.run(
        [sys.executable, "-m", "gridprice", "generate", "--out", str(out), "--users", "3"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert scn.load(out).n_users == 3
