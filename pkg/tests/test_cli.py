import json

import pytest

from riskstop.catalog import build
from riskstop.cli import main
from riskstop.modelio import save_model


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_counterexamples_text(capsys):
    code, out, _ = _run(capsys, "counterexamples")
    assert code == 0
    assert "joint CVaR = 52" in out
    assert "nested CVaR = 4000/97" in out
    assert "41.2371" in out


def test_counterexamples_json(capsys, tmp_path):
    assert main(["counterexamples", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "summary.json").read_text())
    tower = data["headline_values"]["tower"]
    assert tower["joint_cvar"]["exact"] == "52"
    assert tower["nested_cvar"]["exact"] == "4000/97"
    assert tower["markov_chain_nested_value"] == pytest.approx(4000 / 97, abs=1e-9)


def test_example_asset_sale(tmp_path):
    assert main(["example", "--name", "asset-sale", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "summary.json").read_text())
    assert all(r["verdict"] != "Violated" for r in data["verdicts"])
    for table in ("values", "policy", "continuation_loss", "one_step_loss"):
        assert (tmp_path / f"{table}.csv").exists()


def test_example_reports_violation_with_exit_code(tmp_path):
    # the deadline-sale grid clips at its upper end, so the single-threshold check fails
    assert main(["example", "--name", "deadline-sale", "--out", str(tmp_path)]) == 1
    data = json.loads((tmp_path / "summary.json").read_text())
    bad = [r for r in data["verdicts"] if r["verdict"] == "Violated"]
    assert bad and all(r["witness"] for r in bad)


def test_oracle_verify_small(capsys):
    code, out, _ = _run(capsys, "oracle-verify", "--seeds", "5")
    assert code == 0
    assert json.loads(out)["headline_values"]["mismatches"] == 0


def test_solve_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["solve", "--builtin", "random-comonotone", "--params", "seed=3", "--risk", "cvar:0.4"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    for f in sorted(p.name for p in a.iterdir()):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_solve_csv_layout(tmp_path):
    assert main(["solve", "--builtin", "asset-sale", "--params", "T=2", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "policy.csv").read_text().splitlines()
    # decision epochs only; the terminal epoch always stops
    assert rows[0].split(",") == ["x0", "t0", "t1"]
    assert len(rows) == 1 + 12
    assert {a for r in rows[1:] for a in r.split(",")[1:]} <= {"S", "C"}


def test_solve_json_embeds_tables(capsys):
    code, out, _ = _run(capsys, "solve", "--builtin", "random-tabular", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert set(data["tables"]) == {"values", "policy", "continuation_loss", "one_step_loss"}


def test_model_file_and_check(tmp_path, capsys):
    path = tmp_path / "m.json"
    save_model(build("random-monotone", {"n1": 3, "n2": 3}), path)
    code, out, _ = _run(capsys, "check", "--model", str(path), "--check", "value_monotonicity")
    assert code == 0
    assert json.loads(out)["verdicts"][0]["verdict"] == "Holds"


def test_bad_model_file_exit_two(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n "horizon": 1,\n "grid": [[0.0]],\n "kernel": {"tabular": [[[1.0]]]},\n'
                    ' "costs": {"stop": [[0.0], [0.0]], "continue": [[0.0]]},\n'
                    ' "risk": ["cvar:2"]\n}\n')
    code, _, err = _run(capsys, "solve", "--model", str(path))
    assert code == 2
    assert "line 6" in err


def test_compare_more_averse(capsys):
    code, out, _ = _run(capsys, "compare", "--builtin", "random-comonotone", "--risk-a",
                        "mean-cvar:0.8,0.2", "--risk-b", "mean-cvar:0.2,0.2")
    assert code == 0
    assert json.loads(out)["headline_values"]["direction"] is not None


def test_bad_parameter(capsys):
    code, _, err = _run(capsys, "solve", "--builtin", "arf", "--params", "zz=1")
    assert code == 2 and "bad parameters" in err


def test_unknown_check_name(capsys):
    code, _, err = _run(capsys, "check", "--builtin", "arf", "--check", "nonsense")
    assert code == 2 and "nonsense" in err
