"""Command line interface, driven through run() with real files."""

import json

import pytest

from fairrank import DuplicateId, ParseError
from fairrank.cli import load_constraints, parse_instance, run

from conftest import EIGHT_ROWS

EIGHT_CSV = "id,group,score\n" + "".join(
    f"{i},{g},{s}\n" for i, g, s in EIGHT_ROWS
)


@pytest.fixture()
def eight_csv(tmp_path):
    path = tmp_path / "eight.csv"
    path.write_text(EIGHT_CSV)
    return str(path)


def run_json(capsys, argv):
    code = run(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_parse_instance_roundtrip():
    inst = parse_instance(EIGHT_CSV)
    assert inst.n == 8
    assert inst.ids[0] == "u1"
    assert inst.group_labels == ("M", "F")


def test_parse_instance_errors():
    with pytest.raises(ParseError) as err:
        parse_instance("id;group;score\nu1,a,1.0\n")
    assert err.value.row == 1
    with pytest.raises(ParseError) as err:
        parse_instance("id,group,score\nu1,a,high\n")
    assert err.value.row == 2
    with pytest.raises(DuplicateId):
        parse_instance("id,group,score\nu1,a,1.0\nu1,a,0.9\n")
    with pytest.raises(ParseError):
        parse_instance("id,group,score\nu1,a,-0.5\n")
    with pytest.raises(ParseError):
        parse_instance("id,group,score\n")


def test_load_constraints_tables(eight):
    cons = load_constraints(
        eight, {"upper": {"M": [1, 2, 2, 2, 3, 3, 4, 4]}}
    )
    assert cons.upper[0] == (1, 2, 2, 2, 3, 3, 4, 4)
    assert cons.upper_only
    with pytest.raises(ValueError):
        load_constraints(eight, {"upper": {"M": [1, 2]}})
    with pytest.raises(ValueError):
        load_constraints(eight, {})


def test_solve_command(eight_csv, capsys):
    code, payload = run_json(capsys, [
        "solve", "--input", eight_csv, "--rule", "floor-balanced",
        "--epsilon", "0.05",
    ])
    assert code == 0
    expected = payload["expected_satisfaction"]
    assert expected["u1"] == pytest.approx(-0.75, abs=0.05)
    assert expected["u6"] == pytest.approx(1.0, abs=0.05)
    probs = [entry["probability"] for entry in payload["support"]]
    assert sum(probs) == pytest.approx(1.0, abs=1e-9)
    assert all(p == float(f"{p:.12g}") for p in probs)
    assert set(payload["metrics"]) == {
        "min_value", "spread", "gini", "dcg_mean", "dcg_std",
    }


def test_baseline_command(eight_csv, capsys):
    code, payload = run_json(capsys, [
        "baseline", "--input", eight_csv, "--rule", "floor-balanced",
    ])
    assert code == 0
    assert payload["ranking"] == ["u1", "u2", "u3", "u6", "u4", "u7", "u5", "u8"]
    assert payload["min_value"] == -2.0


def test_sample_and_metrics_commands(eight_csv, tmp_path, capsys):
    code, solved = run_json(capsys, [
        "solve", "--input", eight_csv, "--rule", "floor-balanced",
        "--epsilon", "0.05",
    ])
    assert code == 0
    dist_path = tmp_path / "dist.json"
    dist_path.write_text(json.dumps(solved))

    code, draw = run_json(capsys, [
        "sample", "--distribution", str(dist_path), "--seed", "11",
    ])
    assert code == 0
    supports = {tuple(e["ranking"]) for e in solved["support"]}
    assert tuple(draw["ranking"]) in supports
    code, again = run_json(capsys, [
        "sample", "--distribution", str(dist_path), "--seed", "11",
    ])
    assert code == 0
    assert again == draw

    code, metrics = run_json(capsys, [
        "metrics", "--input", eight_csv, "--distribution", str(dist_path),
    ])
    assert code == 0
    assert metrics["min_value"] == pytest.approx(
        solved["metrics"]["min_value"], abs=1e-9
    )
    assert metrics["expected_satisfaction"] == pytest.approx(
        solved["expected_satisfaction"]
    )


def test_decompose_command(eight_csv, capsys):
    code, payload = run_json(capsys, [
        "decompose", "--input", eight_csv, "--rule", "floor-balanced",
    ])
    assert code == 0
    levels = {
        frozenset(block["individuals"]): block["lambda"]
        for block in payload["blocks"]
    }
    assert levels == {
        frozenset({"u1", "u2", "u4", "u5"}): -0.75,
        frozenset({"u3"}): 0.0,
        frozenset({"u6", "u7", "u8"}): 1.0,
    }


def test_experiment_command(eight_csv, capsys):
    code, payload = run_json(capsys, [
        "experiment", "--input", eight_csv, "--alpha", "0.25",
        "--protected", "F", "--epsilon", "1.0",
    ])
    assert code == 0
    assert payload["alphas"] == [0.25]
    row = payload["rows"][0]
    assert row["maxmin"]["min_value"] >= row["deterministic"]["min_value"] - 1.0


def test_output_flag_writes_file(eight_csv, tmp_path, capsys):
    out = tmp_path / "baseline.json"
    code = run([
        "baseline", "--input", eight_csv, "--rule", "floor-balanced",
        "--output", str(out),
    ])
    assert code == 0
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["min_value"] == -2.0


def test_exit_code_for_malformed_input(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("name,team,points\nu1,a,1.0\n")
    code, payload = run_json(capsys, ["baseline", "--input", str(bad)])
    assert code == 2
    assert payload["error"]["type"] == "ParseError"
    assert payload["error"]["row"] == 1

    code, payload = run_json(
        capsys, ["baseline", "--input", str(tmp_path / "missing.csv")]
    )
    assert code == 2

    good = tmp_path / "good.csv"
    good.write_text(EIGHT_CSV)
    code, payload = run_json(capsys, [
        "baseline", "--input", str(good), "--value-fn", "top-k",
    ])
    assert code == 2


def test_exit_code_for_infeasible_bounds(eight_csv, tmp_path, capsys):
    code, payload = run_json(capsys, [
        "solve", "--input", eight_csv, "--rule", "ceil-alpha",
        "--alpha", "0.9", "--protected", "F",
    ])
    assert code == 3
    assert payload["error"]["type"] == "InfeasibleConstraints"

    spec = tmp_path / "blocked.json"
    spec.write_text(json.dumps({"upper": {"M": [0] * 8, "F": [0] * 8}}))
    code, payload = run_json(capsys, [
        "solve", "--input", eight_csv, "--constraints", str(spec),
    ])
    assert code == 3


def test_exit_code_for_size_guard(tmp_path, capsys):
    rows = "".join(f"x{i:02d},a,{1.0 - i * 0.01}\n" for i in range(13))
    big = tmp_path / "big.csv"
    big.write_text("id,group,score\n" + rows)
    code, payload = run_json(capsys, ["decompose", "--input", str(big)])
    assert code == 4
    assert payload["error"]["type"] == "InstanceTooLarge"
