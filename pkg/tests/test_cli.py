"""CLI contract: subcommands, exit codes, determinism, artifacts."""

import json

import numpy as np
import pytest

from emergelab import cli

MACRO_HEADER = "t,Q,C,A,E,D,q_filled,d_filled"


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_series_fixture(path, micro_mode, t=400, seed=0):
    """Series CSV with alternating macro quality over a chosen micro level."""
    rng = np.random.default_rng(seed)
    q = np.where(np.arange(t) % 2 == 0, 0.2, 0.8)
    lines = [MACRO_HEADER + ",c_a,c_b,c_c"]
    for i in range(t):
        if micro_mode == "noise":
            micro = rng.integers(0, 2, size=3)
        else:  # micro carries exactly the macro signal
            micro = [q[i], q[i], q[i]]
        row = [i * 86400, q[i], 0.5, 0.0, 1.0, 0.1, 0, 0, *micro]
        lines.append(",".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


GIT_FIXTURE = (
    "H|c1|1000|amy\n1\t0\tcore/a.py\n"
    "H|c2|2000|codex-bot\n2\t1\tweb/b.py\n"
)


class TestSimulate:
    def test_requires_config_or_preset(self, capsys, tmp_path):
        code, _, err = run(capsys, "simulate", "--out", str(tmp_path / "x.jsonl"))
        assert code == 2
        assert "--config or --preset" in err

    def test_unknown_preset(self, capsys, tmp_path):
        code, _, err = run(capsys, "simulate", "--preset", "nope",
                           "--out", str(tmp_path / "x.jsonl"))
        assert code == 2
        assert "unknown preset" in err

    def test_preset_run_is_deterministic(self, capsys, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        code1, out1, _ = run(capsys, "simulate", "--preset", "subcritical",
                             "--seed", "5", "--out", str(a),
                             "--truth", str(tmp_path / "truth.jsonl"))
        code2, _, _ = run(capsys, "simulate", "--preset", "subcritical",
                          "--seed", "5", "--out", str(b))
        assert code1 == code2 == 0
        assert a.read_bytes() == b.read_bytes()
        assert "commits:" in out1 and "ai_share:" in out1 and "span:" in out1
        assert (tmp_path / "truth.jsonl").exists()

    def test_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("n_ai = 2\nsteps = 10\n# comment\n")
        code, out, _ = run(capsys, "simulate", "--config", str(cfg),
                           "--out", str(tmp_path / "x.jsonl"))
        assert code == 0

    def test_bad_config(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("bogus_key = 1\n")
        code, _, err = run(capsys, "simulate", "--config", str(cfg),
                           "--out", str(tmp_path / "x.jsonl"))
        assert code == 2
        assert "bad config" in err

    def test_unwritable_output_is_io_error(self, capsys):
        code, _, err = run(capsys, "simulate", "--preset", "subcritical",
                           "--out", "/nonexistent-dir/x.jsonl")
        assert code == 3
        assert "i/o error" in err


class TestIngest:
    def test_malformed_jsonl_names_line(self, capsys, tmp_path):
        log = tmp_path / "log.jsonl"
        log.write_text(
            '{"commit_id": "c1", "ts": 0, "author": "a", "author_kind": "HUMAN",'
            ' "modules": ["m"], "ci_passed": true}\nnot json\n'
        )
        code, _, err = run(capsys, "ingest", "jsonl", "--log", str(log),
                           "--out", str(tmp_path / "o.jsonl"))
        assert code == 2
        assert "line 2" in err

    def test_git_with_sidecars(self, capsys, tmp_path):
        log = tmp_path / "git.txt"
        log.write_text(GIT_FIXTURE)
        ci = tmp_path / "ci.jsonl"
        ci.write_text('{"commit_id": "c1", "passed": false}\n')
        out = tmp_path / "o.jsonl"
        code, stdout, _ = run(capsys, "ingest", "git", "--log", str(log),
                              "--ci", str(ci), "--ai-authors", "bot$",
                              "--out", str(out))
        assert code == 0
        assert "commits: 2" in stdout
        assert "ai_share: 0.500" in stdout
        records = [json.loads(line) for line in out.read_text().splitlines()]
        assert records[0]["ci_passed"] is False
        assert records[1]["author_kind"] == "AI"

    def test_conflicting_ci_evidence(self, capsys, tmp_path):
        log = tmp_path / "git.txt"
        log.write_text(GIT_FIXTURE)
        ci = tmp_path / "ci.jsonl"
        ci.write_text(
            '{"commit_id": "c1", "passed": true}\n'
            '{"commit_id": "c1", "passed": false}\n'
        )
        code, _, err = run(capsys, "ingest", "git", "--log", str(log),
                           "--ci", str(ci), "--out", str(tmp_path / "o.jsonl"))
        assert code == 4
        assert "conflicting evidence" in err


class TestMeasure:
    def test_series_and_cascades(self, capsys, tmp_path):
        log = tmp_path / "log.jsonl"
        run(capsys, "simulate", "--preset", "subcritical", "--seed", "3",
            "--out", str(log))
        series = tmp_path / "series.csv"
        cascades = tmp_path / "cascades.csv"
        code, out, _ = run(capsys, "measure", "--events", str(log),
                           "--out-series", str(series),
                           "--out-cascades", str(cascades))
        assert code == 0
        assert "windows: 100" in out
        assert len(series.read_text().splitlines()) == 101  # header + windows
        assert cascades.read_text().startswith("root,size,depth")


class TestEI:
    def test_bins_and_budget_validation(self, capsys, tmp_path):
        series = tmp_path / "s.csv"
        write_series_fixture(series, "noise")
        for flags in (("--bins", "1"), ("--budget", "1")):
            code, _, err = run(capsys, "ei", "--series", str(series),
                               *flags, "--out", str(tmp_path / "r.json"))
            assert code == 2
            assert "must be >= 2" in err

    def test_macro_signal_over_micro_noise_is_top_heavy(self, capsys, tmp_path):
        series = tmp_path / "s.csv"
        write_series_fixture(series, "noise")
        out = tmp_path / "r.json"
        code, stdout, _ = run(capsys, "ei", "--series", str(series),
                              "--seed", "1", "--out", str(out))
        assert code == 0
        report = json.loads(out.read_text())
        assert report["classification"] == "TOP_HEAVY"
        assert report["ce"] > 0
        assert "TOP_HEAVY" in stdout

    def test_identity_coarse_graining_is_neutral(self, capsys, tmp_path):
        series = tmp_path / "s.csv"
        write_series_fixture(series, "identity")
        out = tmp_path / "r.json"
        code, _, _ = run(capsys, "ei", "--series", str(series),
                         "--seed", "1", "--out", str(out))
        assert code == 0
        report = json.loads(out.read_text())
        assert report["classification"] == "NEUTRAL"
        assert report["ce"] == pytest.approx(0.0, abs=1e-12)

    def test_same_seed_same_report(self, capsys, tmp_path):
        series = tmp_path / "s.csv"
        write_series_fixture(series, "noise")
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(capsys, "ei", "--series", str(series), "--seed", "9", "--out", str(a))
        run(capsys, "ei", "--series", str(series), "--seed", "9", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()


class TestTestPropositions:
    def test_unknown_proposition_rejected(self, capsys):
        code, _, err = run(capsys, "test-propositions", "--propositions", "p9")
        assert code == 2
        assert "unknown propositions" in err

    def test_missing_inputs_are_usage_errors(self, capsys):
        code, _, err = run(capsys, "test-propositions", "--propositions", "p2")
        assert code == 2
        assert "--ratio-csv" in err

    def test_p4_too_few_levels_is_usage_error(self, capsys, tmp_path):
        levels = tmp_path / "levels.csv"
        levels.write_text("n,rate\n1,1.0\n1,1.1\n1,0.9\n2,2.0\n2,2.1\n2,1.9\n")
        code, _, err = run(capsys, "test-propositions", "--propositions", "p4",
                           "--levels-csv", str(levels))
        assert code == 2
        assert "TooFewLevels" in err

    def test_p5_from_csv_with_report_and_plots(self, capsys, tmp_path):
        rng = np.random.default_rng(7)
        n = 60
        bumps = (rng.random(n) < 0.15).astype(float)
        rules = np.cumsum(bumps)
        inter = 0.05 + 0.02 * np.roll(rules, 1) + 0.001 * np.arange(n)
        inter[0] = 0.05
        cap = 0.8 + 0.002 * np.arange(n)
        csv_path = tmp_path / "feedback.csv"
        csv_path.write_text(
            "intervention,rules,capability\n"
            + "\n".join(f"{a},{b},{c}" for a, b, c in zip(inter, rules, cap))
            + "\n"
        )
        report = tmp_path / "report.json"
        plots = tmp_path / "plots"
        code, out, _ = run(capsys, "test-propositions", "--propositions", "p5",
                           "--feedback-csv", str(csv_path),
                           "--report", str(report), "--plots", str(plots))
        assert code == 0
        assert "P5: CONFIRMED" in out
        payload = json.loads(report.read_text())
        assert payload[0]["id"] == "P5"
        assert (plots / "p5.svg").exists()

    def test_null_bundle_never_confirms(self, capsys):
        code, out, _ = run(capsys, "test-propositions", "--bundle", "null",
                           "--seed", "3")
        assert code == 0
        assert "CONFIRMED" not in out
