import json

import pytest

from src.maxplus_tails.cli import dispatch


def run(capsys, *argv):
    code = dispatch(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


def test_theta_for_identical_tandem(capsys):
    code, document = run(
        capsys, "theta", "--builtin", "tandem_identical", "--mu", "1", "--lambda", "0.4"
    )
    assert code == 0
    assert document["theta_star"] == pytest.approx(0.5)
    assert document["binding"] == "eta"
    assert document["manifest"]["subcommand"] == "theta"
    assert document["manifest"]["model"] == "tandem_identical"
    assert "wall_time" not in document["manifest"]


def test_theta_output_is_reproducible(capsys):
    argv = ("theta", "--builtin", "fork_join", "--seed", "5")
    _, first = run(capsys, *argv)
    _, second = run(capsys, *argv)
    assert first == second
    assert first["binding"] == "theta^2"


def test_validate_bundled_config(capsys, config_dir):
    code, document = run(capsys, "validate", str(config_dir / "fork_join.json"))
    assert code == 0
    assert document["valid"] is True
    assert document["s"] == 4


def test_validate_reports_path_of_bad_entry(capsys, config_dir):
    code, document = run(capsys, "validate", str(config_dir / "bad_diagonal.json"))
    assert code == 1
    assert document["valid"] is False
    assert document["path"] == "A[0][0]"


def test_validate_rejects_non_object_config(capsys, tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[]")
    code, document = run(capsys, "validate", str(path))
    assert code == 1
    assert document["valid"] is False
    assert document["error"] == "expected an object"
    assert document["path"] == ""


def test_analyze_lists_classes_one_based(capsys):
    code, document = run(capsys, "analyze", "--builtin", "fork_join")
    assert code == 0
    assert document["classes"] == [[1], [2], [3], [4]]
    assert document["eta"] == pytest.approx(0.8)


def test_optimize_resequencing(capsys):
    code, document = run(capsys, "optimize", "--mu2", "1.2", "--mu3", "0.8", "--lambda", "1")
    assert code == 0
    assert document["p_star"] == pytest.approx(0.7, abs=1e-6)
    assert document["theta_star"] == pytest.approx(0.5, abs=1e-6)


def test_infeasible_routing_exits_2(capsys):
    code, _ = run(capsys, "optimize", "--mu2", "1", "--mu3", "1", "--lambda", "2.5")
    assert code == 2


def test_unstable_model_exits_2(capsys):
    code, document = run(capsys, "theta", "--builtin", "mm1", "--lambda", "1.5")
    assert code == 2
    assert document is None


def test_missing_model_exits_1(capsys):
    code, _ = run(capsys, "theta")
    assert code == 1


def test_usage_errors_exit_64(capsys):
    assert dispatch(["frobnicate"]) == 64
    assert dispatch(["theta", "--builtin", "mm1", "--bogus"]) == 64


def test_help_exits_0(capsys):
    assert dispatch(["--help"]) == 0
    assert "maxplus-tails" in capsys.readouterr().out


def test_mgf_writes_csv(capsys, tmp_path):
    out = tmp_path / "mgf.csv"
    argv = (
        "mgf", "--builtin", "mm1", "--block", "1", "--n", "2", "--replicas", "2000",
        "--points", "5", "--out", str(out),
    )
    code, document = run(capsys, *argv)
    assert code == 0
    assert len(document["curve"]) == 5
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# manifest: ")
    assert lines[1] == "theta,lambda_hat,ci,flag"
    assert len(lines) == 7

    first = out.read_bytes()
    run(capsys, *argv)
    assert out.read_bytes() == first


def test_mgf_rejects_unknown_block(capsys):
    code, _ = run(capsys, "mgf", "--builtin", "mm1", "--block", "7", "--replicas", "100")
    assert code == 1


def test_simulate_writes_one_row_per_replica(capsys, tmp_path):
    out = tmp_path / "z.csv"
    code, document = run(
        capsys, "simulate", "--builtin", "mm1", "--replicas", "200", "--out", str(out)
    )
    assert code == 0
    assert document["replicas"] == 200
    assert document["censored"] == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "replica,z,horizon_used,converged"
    assert len(lines) == 202


def test_crosscheck_passes_for_mm1(capsys):
    code, document = run(
        capsys, "crosscheck", "--builtin", "mm1", "--replicas", "20000",
        "--quantile-window", "0.9,0.99", "--seed", "3",
    )
    assert code == 0
    assert document["verdict"] == "PASS"
