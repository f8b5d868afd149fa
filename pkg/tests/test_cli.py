"""Command-line interface: reports, determinism, exit codes."""

import json

import pytest

from ratshare.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def result_sections(text: str) -> str:
    """Everything up to the [timing] section."""
    head, _, _ = text.partition("[timing]")
    return head


def test_simulate_alpha_one(capsys):
    code, out = run_cli(capsys, "simulate", "--alpha", "1", "--trials", "10", "--seed", "1")
    assert code == 0
    assert "mean-iterations = 1" in out
    assert "cause.AllLearned.count = 10" in out
    assert "honest-expected-steps = 5" in out


def test_simulate_mean_steps_near_forty(capsys):
    code, out = run_cli(
        capsys, "simulate", "--alpha", "0.5", "--trials", "50000", "--seed", "42"
    )
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("mean-total-steps"))
    mean = float(line.split(" = ")[1])
    assert abs(mean - 40) / 40 < 0.02


def test_simulate_deviant_fraction(capsys):
    code, out = run_cli(
        capsys, "simulate", "--alpha", "0.8", "--trials", "50000", "--seed", "7",
        "--deviant", "1:withhold",
    )
    assert code == 0
    line = next(
        l for l in out.splitlines() if l.startswith("deviant.only-deviator-learned-fraction")
    )
    assert abs(float(line.split(" = ")[1]) - 0.9412) < 0.01


def test_simulate_auto_alpha(capsys):
    code, out = run_cli(
        capsys, "simulate", "--alpha", "auto", "--trials", "100", "--seed", "3"
    )
    assert code == 0
    assert "resolved-alpha = 0.25" in out


def test_simulate_parameterized_deviant(capsys):
    code, out = run_cli(
        capsys, "simulate", "--alpha", "0.4", "--trials", "5000", "--seed", "11",
        "--deviant", "2:biased-coin:0.9",
    )
    assert code == 0
    # Coin bias alone never breaks all-or-nothing learning.
    assert "cause.AllLearned.fraction = 1" in out
    assert "cause.CheatStop.count = 0" in out


def test_repeat_invocations_are_byte_identical(capsys):
    argv = ("simulate", "--alpha", "0.5", "--trials", "20000", "--seed", "42")
    _, first = run_cli(capsys, *argv)
    _, second = run_cli(capsys, *argv)
    assert result_sections(first) == result_sections(second)


def test_alpha_star_command(capsys):
    code, out = run_cli(capsys, "alpha-star", "--u-only", "2", "--u-all", "1", "--u-none", "0")
    assert code == 0
    assert "global = 0.5" in out


def test_alpha_star_from_file(tmp_path, capsys):
    doc = {"players": 3, "u_only": 5, "u_all": 1, "u_none": 0}
    path = tmp_path / "utilities.json"
    path.write_text(json.dumps(doc))
    code, out = run_cli(capsys, "alpha-star", "--utilities", str(path))
    assert code == 0
    assert "global = 0.333333333333" in out


def test_audit_below_threshold(capsys):
    code, out = run_cli(
        capsys, "audit", "--alpha", "0.25", "--trials", "10000", "--seed", "5",
        "--deviators", "1",
    )
    assert code == 0
    assert "any-profitable = false" in out
    assert out.count("verdict = NoIncentive") == 5


def test_audit_flags_withholding_above_threshold(capsys):
    code, out = run_cli(
        capsys, "audit", "--alpha", "0.8", "--trials", "10000", "--seed", "5",
        "--deviations", "withhold", "--deviators", "1,2,3",
    )
    assert code == 0
    assert out.count("verdict = ProfitableDeviation") == 3
    assert "any-profitable = true" in out


def test_dominance_oneshot(capsys):
    code, out = run_cli(capsys, "dominance", "--builtin", "oneshot-2of2")
    assert code == 0
    assert "surviving.player1 = withhold" in out
    assert "recommended.practical = false" in out
    assert "deletion-rounds = 1" in out


def test_dominance_bounded(capsys):
    code, out = run_cli(capsys, "dominance", "--builtin", "bounded-r2")
    assert code == 0
    assert "recommended.survives = false" in out


def test_dominance_game_file(tmp_path, capsys):
    from ratshare.dominance import prisoners_dilemma

    path = tmp_path / "pd.json"
    prisoners_dilemma().save(path)
    code, out = run_cli(
        capsys, "dominance", "--game", str(path), "--profile", "defect,defect"
    )
    assert code == 0
    assert "recommended.practical = true" in out


def test_hiding_command(capsys):
    code, out = run_cli(capsys, "hiding")
    assert code == 0
    assert "all-pass = true" in out
    assert "m2.hiding-subset-size1 = uniform" in out


def test_transcript_dump(tmp_path, capsys):
    path = tmp_path / "transcripts.jsonl"
    code, out = run_cli(
        capsys, "simulate", "--alpha", "1", "--trials", "3", "--seed", "9",
        "--dump-transcripts", str(path),
    )
    assert code == 0
    assert "sampler = reference-engine" in out
    lines = [json.loads(l) for l in path.read_text().splitlines()]
    assert {rec["trial"] for rec in lines} == {0, 1, 2}
    kinds = {rec["kind"] for rec in lines}
    assert {"CoinPlus", "CoinMinus", "MaskedBit", "ShareBroadcast"} <= kinds
    share_records = [rec for rec in lines if rec["kind"] == "ShareBroadcast"]
    assert all({"epoch", "holder", "x", "y", "tag"} <= set(r["payload"]) for r in share_records)
    # Byte-identical on repeat.
    first = path.read_text()
    run_cli(
        capsys, "simulate", "--alpha", "1", "--trials", "3", "--seed", "9",
        "--dump-transcripts", str(path),
    )
    assert path.read_text() == first


def test_out_flag_writes_file(tmp_path, capsys):
    path = tmp_path / "report.txt"
    code, _ = run_cli(
        capsys, "--out", str(path), "simulate", "--alpha", "1", "--trials", "5", "--seed", "2"
    )
    assert code == 0
    assert path.read_text().startswith("schema = ratshare.report.v1")


# --- exit codes -------------------------------------------------------------------


def test_bad_alpha_is_a_config_error(capsys):
    assert main(["simulate", "--alpha", "1.5", "--trials", "10", "--seed", "1"]) == 2
    assert main(["simulate", "--alpha", "zero", "--trials", "10", "--seed", "1"]) == 2


def test_invalid_utility_table_is_a_config_error(capsys):
    code = main(["alpha-star", "--u-only", "1", "--u-all", "2", "--u-none", "0"])
    assert code == 2


def test_bad_deviant_is_a_config_error(capsys):
    code = main(
        ["simulate", "--alpha", "0.5", "--trials", "10", "--seed", "1", "--deviant", "1:bogus"]
    )
    assert code == 2


def test_too_few_audit_trials_is_a_config_error(capsys):
    code = main(["audit", "--alpha", "0.5", "--trials", "100", "--seed", "1"])
    assert code == 2


def test_missing_seed_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--alpha", "0.5", "--trials", "10"])
    assert exc.value.code == 2


def test_invariant_violation_exits_three(monkeypatch, capsys):
    from ratshare.cli import montecarlo as cli_montecarlo
    from ratshare.engine import InvariantViolationError

    def explode(*args, **kwargs):
        raise InvariantViolationError("honest players disagree on parity")

    monkeypatch.setattr(cli_montecarlo, "sample_runs", explode)
    code = main(["simulate", "--alpha", "0.5", "--trials", "10", "--seed", "1"])
    assert code == 3
