import json

import numpy as np
import pytest

from recgame.cli import main
from recgame.serialize import dump_game, read_json, write_json

from gen import chain_game, zero_reward_game

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.fixture(scope="module")
def table1_run(tmp_path_factory):
    """One solve of the default broadcast preset, shared by the checks."""
    out = tmp_path_factory.mktemp("table1")
    strategy = out / "strategy.json"
    rc = main(["solve", "--preset", "table1-c3", "--out", str(strategy)])
    assert rc == 0
    return strategy


@pytest.fixture(scope="module")
def overcap_ud(tmp_path_factory):
    out = tmp_path_factory.mktemp("overcap")
    strategy = out / "ud.json"
    rc = main(
        ["baseline", "--preset", "overcap-c1", "--kind", "ud", "--out", str(strategy)]
    )
    assert rc == 0
    return strategy


class TestSolve:
    def test_preset_prints_frozen_value(self, tmp_path, capsys):
        rc = main(
            ["solve", "--preset", "table1-c3", "--out", str(tmp_path / "s.json")]
        )
        assert rc == 0
        assert capsys.readouterr().out.strip() == "43.326426"

    def test_zero_reward_spec(self, tmp_path, capsys):
        spec_path = dump_game(
            zero_reward_game(np.random.default_rng(0)), tmp_path / "zero.json"
        )
        rc = main(
            ["solve", "--spec", str(spec_path), "--out", str(tmp_path / "s.json")]
        )
        assert rc == 0
        assert capsys.readouterr().out.strip() == "0.000000"

    def test_missing_input_choice(self, tmp_path, capsys):
        rc = main(["solve", "--out", str(tmp_path / "s.json")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_malformed_kernel_row(self, tmp_path, capsys):
        doc = json.loads(
            (dump_game(chain_game(horizon=1), tmp_path / "g.json")).read_text()
        )
        doc["kernel"][0]["u1"] = "sprint"
        bad = write_json(tmp_path / "bad.json", doc)
        rc = main(["solve", "--spec", str(bad), "--out", str(tmp_path / "s.json")])
        assert rc == 2
        err = capsys.readouterr().err
        assert "kernel row" in err and "sprint" in err

    def test_unknown_preset(self, tmp_path, capsys):
        rc = main(
            ["solve", "--preset", "mystery", "--out", str(tmp_path / "s.json")]
        )
        assert rc == 2
        assert "unknown game preset" in capsys.readouterr().err


class TestVerify:
    def test_solver_output_passes(self, table1_run, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        rc = main(
            [
                "verify",
                "--preset",
                "table1-c3",
                "--strategy",
                str(table1_run),
                "--out",
                str(report_path),
            ]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert out.splitlines()[-1].startswith("PASS")
        assert "obedience route" in out
        assert "best-response route, agent 2" in out
        doc = read_json(report_path)
        assert doc["passed"] is True
        assert doc["violations"] == []
        assert doc["best_response"]["agent1"]["passed"] is True

    def test_report_bytes_are_reproducible(self, table1_run, tmp_path):
        paths = [tmp_path / "r1.json", tmp_path / "r2.json"]
        for p in paths:
            rc = main(
                [
                    "verify",
                    "--preset",
                    "table1-c3",
                    "--strategy",
                    str(table1_run),
                    "--out",
                    str(p),
                ]
            )
            assert rc == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_dictation_fails_under_tight_channel(self, overcap_ud, capsys):
        rc = main(
            ["verify", "--preset", "overcap-c1", "--strategy", str(overcap_ud)]
        )
        out = capsys.readouterr().out
        assert rc == 1
        assert out.splitlines()[-1].startswith("FAIL")
        assert "worst violations" in out

    def test_empty_strategy_file(self, tmp_path, capsys):
        empty = write_json(
            tmp_path / "empty.json",
            {"kind": "messaging", "horizon": 10, "entries": {}},
        )
        rc = main(
            ["verify", "--preset", "table1-c3", "--strategy", str(empty)]
        )
        assert rc == 2
        assert "no distributions" in capsys.readouterr().err

    def test_nonpositive_tolerance(self, table1_run, capsys):
        rc = main(
            [
                "verify",
                "--preset",
                "table1-c3",
                "--strategy",
                str(table1_run),
                "--tol",
                "0",
            ]
        )
        assert rc == 2
        assert "--tol" in capsys.readouterr().err


class TestEvalAndBaseline:
    def parse_totals(self, text):
        totals = {}
        for line in text.strip().splitlines():
            name, value = line.split()
            totals[name] = float(value)
        return totals

    def test_eval_prints_benchmark_totals(self, table1_run, capsys):
        rc = main(
            ["eval", "--preset", "table1-c3", "--strategy", str(table1_run)]
        )
        assert rc == 0
        totals = self.parse_totals(capsys.readouterr().out)
        assert totals["designer"] == pytest.approx(43.3264, abs=1e-3)
        assert totals["agent1"] == pytest.approx(8.6653, abs=5e-2)
        assert totals["agent2"] == pytest.approx(8.6653, abs=5e-2)

    def test_eval_writes_report(self, table1_run, tmp_path, capsys):
        out = tmp_path / "eval.json"
        rc = main(
            [
                "eval",
                "--preset",
                "table1-c3",
                "--strategy",
                str(table1_run),
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        capsys.readouterr()
        doc = read_json(out)
        assert set(doc["totals"]) == {"designer", "agent1", "agent2"}
        assert set(doc["trace"]) == {str(t) for t in range(1, 11)}

    def test_unconstrained_baseline_value(self, tmp_path, capsys):
        rc = main(
            [
                "baseline",
                "--preset",
                "table1-c3",
                "--kind",
                "ud",
                "--out",
                str(tmp_path / "ud.json"),
            ]
        )
        assert rc == 0
        assert float(capsys.readouterr().out.strip()) == pytest.approx(
            44.8288, abs=1e-3
        )

    def test_constrained_baseline_value(self, table1_run, tmp_path, capsys):
        rc = main(
            ["eval", "--preset", "table1-c3", "--strategy", str(table1_run)]
        )
        assert rc == 0
        totals = self.parse_totals(capsys.readouterr().out)
        rc = main(
            [
                "baseline",
                "--preset",
                "table1-c3",
                "--kind",
                "cmdp",
                "--eps1",
                str(totals["agent1"]),
                "--eps2",
                str(totals["agent2"]),
                "--out",
                str(tmp_path / "cmdp.json"),
            ]
        )
        assert rc == 0
        assert float(capsys.readouterr().out.strip()) == pytest.approx(
            43.5472, abs=1e-2
        )

    def test_cmdp_needs_floors(self, tmp_path, capsys):
        rc = main(
            [
                "baseline",
                "--preset",
                "table1-c3",
                "--kind",
                "cmdp",
                "--out",
                str(tmp_path / "c.json"),
            ]
        )
        assert rc == 2
        assert "--eps1" in capsys.readouterr().err

    def test_cmdp_infeasible_floors(self, tmp_path, capsys):
        spec_path = dump_game(
            zero_reward_game(np.random.default_rng(1)), tmp_path / "zero.json"
        )
        rc = main(
            [
                "baseline",
                "--spec",
                str(spec_path),
                "--kind",
                "cmdp",
                "--eps1",
                "1000",
                "--eps2",
                "1000",
                "--out",
                str(tmp_path / "c.json"),
            ]
        )
        assert rc == 2
        assert "infeasible" in capsys.readouterr().err


class TestBench:
    def test_static_artifacts(self, tmp_path, capsys):
        out_dir = tmp_path / "static"
        rc = main(["bench", "--preset", "static", "--out", str(out_dir)])
        out = capsys.readouterr().out
        assert rc == 0
        assert (out_dir / "static.csv").exists()
        assert (out_dir / "static.png").read_bytes()[:8] == PNG_MAGIC
        assert out.count("wrote ") == 3

        doc = read_json(out_dir / "static.json")
        by_alpha = {case["alpha"]: case for case in doc["cases"]}
        assert by_alpha[4.0]["unconstrained"]["support"] == [["1", "1", 1.0]]
        assert by_alpha[4.0]["recommendation"]["support"] == [["2", "1", 1.0]]
        assert by_alpha[4.0]["supports_differ"] is True
        assert by_alpha[3.0]["supports_differ"] is False

        lines = (out_dir / "static.csv").read_text().splitlines()
        assert lines[0] == "alpha,unconstrained,recommendation,threshold,supports_differ"
        assert lines[1].startswith("3,")
        assert lines[2].startswith("4,")

    def test_table_preset_artifacts(self, tmp_path, capsys):
        out_dir = tmp_path / "bench"
        rc = main(["bench", "--preset", "table1-c3", "--out", str(out_dir)])
        assert rc == 0
        capsys.readouterr()
        names = {p.name for p in out_dir.iterdir()}
        assert names == {
            "table1.csv",
            "totals.png",
            "probes_recommendation.json",
            "trajectory.csv",
            "trajectory.png",
        }
        assert (out_dir / "totals.png").read_bytes()[:8] == PNG_MAGIC

        lines = (out_dir / "table1.csv").read_text().splitlines()
        assert lines[0] == "metric,unconstrained,constrained,recommendation"
        designer = [float(v) for v in lines[1].split(",")[1:]]
        assert designer[0] == pytest.approx(44.8288, abs=1e-3)
        assert designer[1] == pytest.approx(43.5472, abs=1e-2)
        assert designer[2] == pytest.approx(43.3264, abs=1e-3)

        doc = read_json(out_dir / "probes_recommendation.json")
        assert doc["state"] == "(2,2)"
        assert len(doc["probes"]) == 10
        assert [p["t"] for p in doc["probes"]] == list(range(1, 11))

    def test_tight_channel_probes(self, tmp_path, capsys):
        out_dir = tmp_path / "bench"
        rc = main(["bench", "--preset", "overcap-c1", "--out", str(out_dir)])
        assert rc == 0
        capsys.readouterr()
        rec = read_json(out_dir / "probes_recommendation.json")["probes"]
        assert rec[6]["t"] == 7
        assert rec[6]["over_capacity_mass"] == pytest.approx(1.0, abs=1e-6)
        ud = read_json(out_dir / "probes_unconstrained.json")["probes"]
        support = ud[6]["support"]
        assert len(support) == 1
        assert (support[0]["u1"], support[0]["u2"]) == (0, 0)

    def test_unknown_preset(self, tmp_path, capsys):
        rc = main(["bench", "--preset", "table9", "--out", str(tmp_path / "x")])
        assert rc == 2
        assert "unknown preset" in capsys.readouterr().err


class TestOracle:
    def test_tiny_instance_agrees(self, tmp_path, capsys):
        spec_path = dump_game(chain_game(horizon=2), tmp_path / "chain.json")
        rc = main(["oracle", "--spec", str(spec_path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "markov 2.000000" in out
        assert "expanded 2.000000" in out
        assert out.strip().endswith("pass")

    def test_large_instance_refused(self, capsys):
        rc = main(["oracle", "--preset", "table1-c3"])
        assert rc == 2
        assert "refusing" in capsys.readouterr().err

    def test_thread_validation(self, tmp_path, capsys):
        rc = main(
            [
                "solve",
                "--preset",
                "table1-c3",
                "--threads",
                "0",
                "--out",
                str(tmp_path / "s.json"),
            ]
        )
        assert rc == 2
        assert "--threads" in capsys.readouterr().err
