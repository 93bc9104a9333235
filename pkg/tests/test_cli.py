import csv
import json

import pytest
from click.testing import CliRunner

import artifact.cli as cli
from conftest import SCENARIOS


def invoke(*args):
    return CliRunner().invoke(cli.main, [str(a) for a in args])


def test_solve_writes_policy_and_report(tmp_path):
    res = invoke("solve", "--scenario", SCENARIOS / "common_prior_impatient.yaml", "--out", tmp_path, "--svg")
    assert res.exit_code == 0, res.output
    for name in ("policy.csv", "policy.json", "report.json", "report.txt", "policy.svg"):
        assert (tmp_path / name).is_file()
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["regime"] == "common-prior"
    assert report["t1"] > 0
    assert report["segments"] == ["silence", "full_reveal"]


def test_solve_two_type_writes_both_policies(tmp_path):
    res = invoke("solve", "--scenario", SCENARIOS / "two_type_comparison.yaml", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert (tmp_path / "policy_L.csv").is_file() and (tmp_path / "policy_H.csv").is_file()


def test_simulate_is_byte_identical_for_a_seed(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / str(k)
        res = invoke("simulate", "--scenario", SCENARIOS / "exogenous_exit.yaml", "--out", out, "--paths", 2000, "--seed", 11)
        assert res.exit_code == 0, res.output
        outs.append(out)
    for name in ("paths.csv", "exit_time_cdf.csv", "exit_belief_cdf.csv", "summary.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    other = tmp_path / "other"
    invoke("simulate", "--scenario", SCENARIOS / "exogenous_exit.yaml", "--out", other, "--paths", 2000, "--seed", 12)
    assert (other / "paths.csv").read_bytes() != (outs[0] / "paths.csv").read_bytes()


def test_verify_passes_on_solved_policy(tmp_path):
    res = invoke("verify", "--scenario", SCENARIOS / "common_prior_impatient.yaml", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert json.loads((tmp_path / "verify.json").read_text())["passed"] is True


def test_sweep_writes_ordered_table(tmp_path):
    res = invoke("sweep", "--scenario", SCENARIOS / "ratio_sweep.yaml", "--out", tmp_path, "--svg")
    assert res.exit_code == 0, res.output
    with open(tmp_path / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 15
    assert all(r["quality_ordered"] == "true" and r["speed_ordered"] == "true" for r in rows)
    assert (tmp_path / "sweep_quality.svg").is_file() and (tmp_path / "sweep_speed.svg").is_file()
    assert (tmp_path / "summary.json").is_file()


def test_compare_summary(tmp_path, two_type_steady):
    res = invoke(
        "compare", "--scenario", SCENARIOS / "two_type_comparison.yaml", "--out", tmp_path,
        "--paths", 1000, "--program-steps", 64,
    )
    assert res.exit_code == 0, res.output
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["personalized"]["L"]["steady_mu_A"] == pytest.approx(0.7184, abs=1e-4)
    assert summary["personalized"]["H"]["steady_mu_A"] == pytest.approx(0.4261, abs=1e-4)
    assert summary["nonpersonalized"]["mu_P_star"] == pytest.approx(two_type_steady.mu_P_star, abs=1e-9)
    assert (tmp_path / "transient.csv").is_file()


def test_parse_error_exits_with_code_two(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("mu_P: 0.5\nmu_A: oops\ndelta_A: 0.2\n")
    res = invoke("solve", "--scenario", bad, "--out", tmp_path / "o")
    assert res.exit_code == 2
    assert "mu_A" in res.output and "line 2" in res.output


def test_domain_error_exits_with_code_three(tmp_path):
    bad = tmp_path / "equal.yaml"
    bad.write_text("mu_P: 0.5\nmu_A: 0.3\ndelta_A: 0.2\ndelta_P: 0.2\n")
    res = invoke("solve", "--scenario", bad, "--out", tmp_path / "o")
    assert res.exit_code == 3


def test_wrong_model_for_subcommand_is_rejected(tmp_path):
    res = invoke("compare", "--scenario", SCENARIOS / "exogenous_exit.yaml", "--out", tmp_path)
    assert res.exit_code != 0


def test_verification_failure_exits_with_code_four(tmp_path, monkeypatch):
    real = cli.oracle_verify

    def failing(*args, **kwargs):
        rep = real(*args, **kwargs)
        rep["passed"] = False
        return rep

    monkeypatch.setattr(cli, "oracle_verify", failing)
    res = invoke("verify", "--scenario", SCENARIOS / "common_prior_impatient.yaml", "--out", tmp_path)
    assert res.exit_code == 4
