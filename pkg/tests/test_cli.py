import json

import pytest

from queenon.cli import FAILED, OK, USAGE, main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_count_enumerate_sample(capsys, tmp_path):
    assert run(capsys, "count", "--n", 8)[:2] == (OK, "92\n")
    code, out, _ = run(capsys, "enumerate", "--n", 4)
    assert code == OK and [json.loads(line) for line in out.splitlines()] == [
        [[1, 3], [2, 1], [3, 4], [4, 2]],
        [[1, 2], [2, 4], [3, 1], [4, 3]],
    ]
    path = tmp_path / "six.jsonl"
    assert run(capsys, "enumerate", "--n", 6, "--out", path)[0] == OK
    assert len(path.read_text().split("\n")) == 5
    a = run(capsys, "sample", "--n", 8, "--seed", 4)
    b = run(capsys, "sample", "--n", 8, "--seed", 4)
    assert a == b and len(json.loads(a[1])) == 8


def test_usage_errors(capsys):
    assert run(capsys, "count", "--n", 40)[0] == USAGE
    assert run(capsys, "sample", "--n", 3)[0] == USAGE
    code, _, err = run(capsys, "entropy", "--queenon", "missing.json")
    assert code == USAGE and "no such queenon" in err
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_entropy_and_distance(capsys, tmp_path):
    code, out, _ = run(capsys, "entropy", "--queenon", "uniform", "--quad", "--discrete", 4)
    rep = json.loads(out)
    assert code == OK and rep["h_q"] == pytest.approx(-2.0) and rep["h_q_quad"] == pytest.approx(-2.0)
    from queenon.queenon import kappa, save_queenon

    path = tmp_path / "k.json"
    save_queenon(kappa(), path)
    code, out, _ = run(capsys, "entropy", "--queenon", path)
    assert code == OK and json.loads(out)["n_steps"] == 3
    code, out, _ = run(capsys, "distance", "--a", "uniform", "--b", path, "--L", 6)
    d = json.loads(out)
    assert code == OK and d["upper"] == pytest.approx(d["lower"] + 4 / 6)


def test_optimize_and_alpha_report(capsys, tmp_path):
    low, up = tmp_path / "low.json", tmp_path / "up.json"
    code, out, _ = run(capsys, "optimize", "primal", "--n-steps", 12, "--budget", 1, "--init", "a12", "--out", low)
    assert code == OK and json.loads(out)["kind"] == "lower"
    code, out, _ = run(capsys, "optimize", "dual", "--n-steps", 6, "--budget", 500, "--out", up)
    assert code == OK and json.loads(out)["kind"] == "upper"
    code, out, _ = run(capsys, "alpha-report", "--lower", low, "--upper", up)
    assert code == OK and "<= alpha <=" in out
    code, out, _ = run(capsys, "alpha-report", "--lower", low)
    assert code == OK and "alpha <=" in out
    data = json.loads(up.read_text())
    data["value"] -= 0.1
    up.write_text(json.dumps(data))
    code, _, err = run(capsys, "alpha-report", "--lower", low, "--upper", up)
    assert code == FAILED and "verification failed" in err


def test_construct_and_absorb(capsys, tmp_path):
    run_path = tmp_path / "run.json"
    code, _, _ = run(capsys, "construct", "--n", 256, "--seed", 1, "--trace", "--out", run_path)
    data = json.loads(run_path.read_text())
    assert code == OK and data["abort_step"] is None and data["params"]["T"] == 14
    assert "trajectory_deviation" in data and "trace" in data
    full = tmp_path / "full.json"
    code, out, _ = run(capsys, "absorb", "--in", run_path, "--policy", "guided", "--out", full)
    assert code == OK and json.loads(out)["success"]
    queens = json.loads(full.read_text())
    from queenon.board import is_valid_configuration

    assert is_valid_configuration([tuple(q) for q in queens], 256)
    # a bare list needs --n; an empty board cannot be completed
    empty = tmp_path / "empty.json"
    empty.write_text("[]")
    assert run(capsys, "absorb", "--in", empty)[0] == USAGE
    code, out, _ = run(capsys, "absorb", "--in", empty, "--n", 5)
    assert code == FAILED and json.loads(out)["abort_index"] == 1


def test_construct_abort_exit_code(capsys):
    code, out, _ = run(capsys, "construct", "--n", 40, "--queenon", "uniform", "--horizon", 39)
    assert code == FAILED and json.loads(out)["abort_step"] is not None


def test_pipeline_and_structure(capsys, tmp_path):
    code, out, _ = run(capsys, "pipeline", "--n", 64, "--queenon", "uniform", "--trials", 4)
    rep = json.loads(out)
    assert code == OK and rep["all_successes_valid"] and len(rep["runs"]) == 4
    csv = tmp_path / "grid.csv"
    code, out, _ = run(capsys, "structure", "--n", 6, "--N", 3, "--samples", 50, "--csv", csv)
    assert code == OK and json.loads(out)["N"] == 3
    rows = csv.read_text().strip().split("\n")
    assert len(rows) == 3 and all(len(r.split(",")) == 3 for r in rows)


def test_distance_bad_grid(capsys):
    assert run(capsys, "distance", "--a", "uniform", "--b", "kappa", "--L", 4)[0] == USAGE
