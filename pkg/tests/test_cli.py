"""End-to-end CLI tests: exit codes, written artifacts, and output text."""

from __future__ import annotations

import csv
import json

import pytest

from sesop.cli import EXIT_NO_CONVERGENCE, EXIT_OK, EXIT_USAGE, main
from sesop.corpus import corpus_names
from sesop.harness import TRACE_COLUMNS

SEED = "20260815"


def run_cli(*argv) -> int:
    return main(list(argv))


class TestCheck:
    @pytest.mark.parametrize("name", corpus_names())
    def test_corpus_problems_pass(self, name, capsys):
        assert run_cli("check", "--problem", name) == EXIT_OK
        out = capsys.readouterr().out
        assert "overall: PASS" in out
        assert "adjoint defect" in out

    def test_empirical_certificate_notes_safety_factor(self, capsys):
        assert run_cli("check", "--problem", "autoconv-16") == EXIT_OK
        assert "1.5 safety factor" in capsys.readouterr().out

    def test_json_report_written(self, tmp_path, capsys):
        path = tmp_path / "check.json"
        assert run_cli("check", "--problem", "diagquad", "--json", str(path)) == EXIT_OK
        payload = json.loads(path.read_text())
        assert payload["pass"] is True
        assert payload["certificate"]["ctc"] == 0.25
        assert payload["checks"]["results"]["adjoint defect"] is True

    def test_unknown_problem_exits_2(self, capsys):
        assert run_cli("check", "--problem", "nope") == EXIT_USAGE
        assert "available" in capsys.readouterr().err

    def test_problem_from_json_file(self, tmp_path):
        spec = {
            "name": "tiny",
            "matrix": [[2.0, 0.0], [0.0, 1.0]],
            "x_plus": [0.5, 0.5],
            "x0": [0.0, 0.0],
            "rho": 2.0,
        }
        path = tmp_path / "tiny.json"
        path.write_text(json.dumps(spec))
        assert run_cli("check", "--problem", str(path)) == EXIT_OK

    def test_malformed_json_exits_2_with_position(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "name": oops\n}')
        assert run_cli("check", "--problem", str(path)) == EXIT_USAGE
        err = capsys.readouterr().err
        assert "line 2" in err


class TestRun:
    def test_writes_trace_and_figure(self, tmp_path, capsys):
        code = run_cli(
            "run", "--problem", "diagquad", "--solver", "resesop2",
            "--delta", "1e-3", "--tau", "auto", "--seed", "7", "--out", str(tmp_path),
        )
        assert code == EXIT_OK
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["diagquad_resesop2_trace.csv", "diagquad_resesop2_trace.png"]
        with open(tmp_path / "diagquad_resesop2_trace.csv", newline="") as handle:
            rows = list(csv.reader(handle))
        assert tuple(rows[0]) == TRACE_COLUMNS
        assert "stop reason:    discrepancy" in capsys.readouterr().out

    def test_no_plot_skips_figure(self, tmp_path):
        code = run_cli(
            "run", "--problem", "diagquad", "--solver", "sesop",
            "--delta", "1e-2", "--out", str(tmp_path), "--no-plot",
        )
        assert code == EXIT_OK
        assert sorted(p.name for p in tmp_path.iterdir()) == ["diagquad_sesop_trace.csv"]

    def test_zero_delta_exact_branch(self, tmp_path):
        code = run_cli(
            "run", "--problem", "linear-diag", "--solver", "sesop",
            "--delta", "0", "--out", str(tmp_path), "--no-plot",
        )
        assert code == EXIT_OK
        with open(tmp_path / "linear-diag_sesop_trace.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert float(rows[-1]["residual_norm"]) <= 1e-10

    def test_iteration_cap_exits_3(self, tmp_path):
        code = run_cli(
            "run", "--problem", "diagquad", "--solver", "sesop",
            "--delta", "1e-3", "--max-iter", "1", "--out", str(tmp_path), "--no-plot",
        )
        assert code == EXIT_NO_CONVERGENCE

    def test_unknown_solver_exits_2(self, tmp_path, capsys):
        code = run_cli(
            "run", "--problem", "diagquad", "--solver", "newton",
            "--delta", "1e-3", "--out", str(tmp_path),
        )
        assert code == EXIT_USAGE
        assert "landweber" in capsys.readouterr().err

    def test_tau_below_bound_exits_2_and_prints_bound(self, tmp_path, capsys):
        code = run_cli(
            "run", "--problem", "diagquad", "--solver", "sesop",
            "--delta", "1e-3", "--tau", "1.0", "--out", str(tmp_path),
        )
        assert code == EXIT_USAGE
        assert "1.66667" in capsys.readouterr().err

    def test_invalid_tau_string_exits_2(self, tmp_path, capsys):
        code = run_cli(
            "run", "--problem", "diagquad", "--solver", "sesop",
            "--delta", "1e-3", "--tau", "soon", "--out", str(tmp_path),
        )
        assert code == EXIT_USAGE
        assert "invalid tau" in capsys.readouterr().err

    def test_negative_delta_exits_2(self, tmp_path, capsys):
        code = run_cli(
            "run", "--problem", "diagquad", "--solver", "sesop",
            "--delta=-1e-3", "--out", str(tmp_path),
        )
        assert code == EXIT_USAGE
        assert "delta" in capsys.readouterr().err

    def test_env_var_sets_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SESOP_OUT_DIR", str(tmp_path))
        code = run_cli(
            "run", "--problem", "diagquad", "--solver", "sesop",
            "--delta", "1e-2", "--no-plot",
        )
        assert code == EXIT_OK
        assert (tmp_path / "diagquad_sesop_trace.csv").exists()

    def test_out_flag_overrides_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SESOP_OUT_DIR", str(tmp_path / "env"))
        flag_dir = tmp_path / "flag"
        code = run_cli(
            "run", "--problem", "diagquad", "--solver", "sesop",
            "--delta", "1e-2", "--out", str(flag_dir), "--no-plot",
        )
        assert code == EXIT_OK
        assert (flag_dir / "diagquad_sesop_trace.csv").exists()
        assert not (tmp_path / "env").exists()

    def test_verbose_flag_accepted(self, tmp_path):
        code = run_cli(
            "run", "--problem", "diagquad", "--solver", "sesop",
            "--delta", "1e-2", "--out", str(tmp_path), "--no-plot", "-v",
        )
        assert code == EXIT_OK


class TestSweep:
    def test_writes_json_and_figure(self, tmp_path):
        code = run_cli(
            "sweep", "--problem", "diagquad", "--solver", "sesop",
            "--deltas", "1e-1,1e-2,1e-3,1e-4", "--seed", SEED, "--out", str(tmp_path),
        )
        assert code == EXIT_OK
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["diagquad_sesop_sweep.json", "diagquad_sesop_sweep.png"]
        payload = json.loads((tmp_path / "diagquad_sesop_sweep.json").read_text())
        assert len(payload["rows"]) == 4
        assert payload["error_trend_ok"] is True

    def test_non_descending_deltas_exit_2(self, tmp_path, capsys):
        code = run_cli(
            "sweep", "--problem", "diagquad", "--solver", "sesop",
            "--deltas", "1e-3,1e-2", "--out", str(tmp_path),
        )
        assert code == EXIT_USAGE
        assert "descending" in capsys.readouterr().err

    def test_bad_delta_token_exits_2(self, tmp_path, capsys):
        code = run_cli(
            "sweep", "--problem", "diagquad", "--solver", "sesop",
            "--deltas", "1e-1,abc", "--out", str(tmp_path),
        )
        assert code == EXIT_USAGE
        assert "invalid delta list" in capsys.readouterr().err

    def test_failed_sweep_exits_3_but_writes_report(self, tmp_path):
        code = run_cli(
            "sweep", "--problem", "diagquad", "--solver", "sesop",
            "--deltas", "1e-2", "--max-iter", "1", "--out", str(tmp_path), "--no-plot",
        )
        assert code == EXIT_NO_CONVERGENCE
        payload = json.loads((tmp_path / "diagquad_sesop_sweep.json").read_text())
        assert payload["failed"] is True
        assert payload["rows"][0]["n_star"] is None


class TestCompare:
    def test_table_and_artifacts(self, tmp_path, capsys):
        code = run_cli(
            "compare", "--problem", "diagquad", "--solvers", "resesop2,landweber",
            "--delta", "1e-2", "--seed", SEED, "--out", str(tmp_path),
        )
        assert code == EXIT_OK
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["diagquad_compare.json", "diagquad_compare.png"]
        out = capsys.readouterr().out
        assert "resesop2" in out and "landweber" in out
        payload = json.loads((tmp_path / "diagquad_compare.json").read_text())
        assert [row["solver"] for row in payload["rows"]] == ["resesop2", "landweber"]
        for row in payload["rows"]:
            assert row["forward_evals"] == row["n_star"] + 1

    def test_duplicate_solvers_exit_2(self, tmp_path, capsys):
        code = run_cli(
            "compare", "--problem", "diagquad", "--solvers", "sesop,sesop",
            "--delta", "1e-2", "--out", str(tmp_path),
        )
        assert code == EXIT_USAGE
        assert "duplicate" in capsys.readouterr().err

    def test_single_solver_exits_2(self, tmp_path):
        code = run_cli(
            "compare", "--problem", "diagquad", "--solvers", "sesop",
            "--delta", "1e-2", "--out", str(tmp_path),
        )
        assert code == EXIT_USAGE


class TestParser:
    def test_missing_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exit_info:
            main([])
        assert exit_info.value.code == 2

    def test_missing_required_option_is_usage_error(self):
        with pytest.raises(SystemExit) as exit_info:
            main(["run", "--problem", "diagquad"])
        assert exit_info.value.code == 2
