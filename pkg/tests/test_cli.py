import json
import subprocess
import sys

import pytest

from tangmax import FieldSpec, evaluate, generate
from tangmax.cli import main


def run_cli(args):
    return main(list(args))


def write_cfg(path, **kv):
    path.write_text("".join(f"{k} = {v}\n" for k, v in kv.items()))
    return str(path)


def csv_body(path):
    """Everything after the volatile '#' metadata line."""
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# tangmax=")
    return "\n".join(lines[1:])


class TestEvolve:
    def test_constant_field_all_ones(self, tmp_path):
        out = tmp_path / "u.csv"
        cfg = write_cfg(
            tmp_path / "c.cfg",
            n=1, P=8, field="constant", grid_points=8, times="0;1.5", out=str(out),
        )
        assert run_cli(["evolve", "--config", cfg]) == 0
        rows = [line.split(",") for line in csv_body(out).splitlines()[1:]]
        assert all(float(r[-1]) == pytest.approx(1.0) for r in rows)

    def test_ball_row_matches_direct_evaluation(self, tmp_path):
        out = tmp_path / "u.csv"
        cfg = write_cfg(
            tmp_path / "c.cfg",
            n=1, P=8, field="ball_indicator", grid_points=16, times="0", out=str(out),
        )
        assert run_cli(["evolve", "--config", cfg]) == 0
        field = generate(FieldSpec("ball_indicator"), 1, 8.0)
        for line in csv_body(out).splitlines()[1:]:
            x, _t, re, im, _a = (float(v) for v in line.split(","))
            val = evaluate(field, x, 0.0)
            assert re == pytest.approx(val.real, abs=1e-10)
            assert im == pytest.approx(val.imag, abs=1e-10)

    def test_rejects_non_tangential_alpha(self, tmp_path):
        cfg = write_cfg(
            tmp_path / "c.cfg",
            n=1, P=8, field="constant", grid_points=8, times="0",
            out=str(tmp_path / "u.csv"), alpha=0.6,
        )
        assert run_cli(["evolve", "--config", cfg]) == 2

    def test_rejects_unknown_key(self, tmp_path):
        cfg = write_cfg(
            tmp_path / "c.cfg",
            n=1, P=8, field="constant", grid_points=8, times="0",
            out=str(tmp_path / "u.csv"), wavelength=3,
        )
        assert run_cli(["evolve", "--config", cfg]) == 2


class TestMaxscan:
    def test_profile_matches_library(self, tmp_path):
        from tangmax import ModelCurve, RescaledCurve, scan

        out = tmp_path / "prof.csv"
        cfg = write_cfg(
            tmp_path / "c.cfg",
            n=1, alpha=0.25, R=8, field="random_phase", seed=5, tol=1e-2,
            regime="late", out=str(out),
        )
        assert run_cli(["maxscan", "--config", cfg]) == 0
        field = generate(FieldSpec("random_phase", seed=5), 1, 16.0)
        prof = scan(field, RescaledCurve(ModelCurve((0.25,)), 8.0), "late", 1e-2)
        lines = csv_body(out).splitlines()[1:]
        assert len(lines) == prof.size
        for line, j, value in zip(lines, prof.lattice, prof.values):
            parts = line.split(",")
            assert int(parts[0]) == j[0]
            assert float(parts[1]) == pytest.approx(value, rel=1e-15)

    def test_deterministic_bodies(self, tmp_path):
        cfgs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{tag}.csv"
            cfgs.append(
                write_cfg(
                    tmp_path / f"{tag}.cfg",
                    n=1, alpha=0.25, R=8, field="random_phase", seed=9, tol=1e-2,
                    regime="early", out=str(out),
                )
            )
        assert run_cli(["maxscan", "--config", cfgs[0]]) == 0
        assert run_cli(["maxscan", "--config", cfgs[1]]) == 0
        assert csv_body(tmp_path / "a.csv") == csv_body(tmp_path / "b.csv")

    def test_budget_exit_code(self, tmp_path):
        cfg = write_cfg(
            tmp_path / "c.cfg",
            n=1, alpha=0.25, R=8, field="random_phase", seed=5, tol=1e-9,
            regime="late", out=str(tmp_path / "x.csv"), budget=1000,
        )
        assert run_cli(["maxscan", "--config", cfg]) == 3


class TestSweep:
    def test_synthetic_slope_is_exact(self, tmp_path):
        out, fit_out = tmp_path / "s.csv", tmp_path / "fit.json"
        cfg = write_cfg(
            tmp_path / "c.cfg",
            n=1, alpha=0.1, field="ball_indicator", R_list="16;32;64;128",
            regime="early", synthetic_slope=0.4, out=str(out), fit_out=str(fit_out),
        )
        assert run_cli(["sweep", "--config", cfg]) == 0
        fit = json.loads(fit_out.read_text())
        assert fit["slope"] == pytest.approx(0.4, abs=1e-12)
        assert fit["s0_ref"] == pytest.approx(0.4)

    def test_empty_scale_list_rejected(self, tmp_path):
        cfg = write_cfg(
            tmp_path / "c.cfg",
            n=1, alpha=0.1, field="ball_indicator", R_list=";",
            regime="early", out=str(tmp_path / "s.csv"), fit_out=str(tmp_path / "f.json"),
        )
        assert run_cli(["sweep", "--config", cfg]) == 2

    def test_three_scales_rejected_by_fit(self, tmp_path):
        cfg = write_cfg(
            tmp_path / "c.cfg",
            n=1, alpha=0.1, field="ball_indicator", R_list="16;32;64",
            regime="early", synthetic_slope=0.4,
            out=str(tmp_path / "s.csv"), fit_out=str(tmp_path / "f.json"),
        )
        assert run_cli(["sweep", "--config", cfg]) == 2

    def test_real_small_sweep_runs(self, tmp_path):
        out, fit_out = tmp_path / "s.csv", tmp_path / "fit.json"
        cfg = write_cfg(
            tmp_path / "c.cfg",
            n=1, alpha=0.25, field="constant", R_list="8;16;32;64",
            regime="total", tol=1e-2, out=str(out), fit_out=str(fit_out),
        )
        assert run_cli(["sweep", "--config", cfg]) == 0
        fit = json.loads(fit_out.read_text())
        assert abs(fit["slope"]) < 0.02
        header = csv_body(out).splitlines()[0]
        assert header == "n,alpha,R,regime,N,tol,seed,wall_ms"


class TestAudit:
    def test_report_with_mode_gate(self, tmp_path):
        out = tmp_path / "audit.json"
        cubes_out = tmp_path / "cubes.csv"
        cfg = write_cfg(
            tmp_path / "c.cfg",
            n=1, alpha=0.25, R=16, field="ball_indicator", tol=1e-2,
            out=str(out), cubes_out=str(cubes_out),
        )
        assert run_cli(["audit", "--config", cfg]) == 0
        payload = json.loads(out.read_text())
        assert payload["brute_fast_equal"] is True
        assert payload["cube_count"] > 0
        assert payload["overlap_audit"]["max_statistic"] > 0
        assert payload["shift_checks"]["translation_ok"]
        assert payload["shift_checks"]["radius_cap_ok"]
        body = csv_body(cubes_out).splitlines()
        assert body[0] == "c0,ct,multiplicity"
        assert len(body) - 1 == payload["cube_count"]

    def test_empty_slice_classes_are_absent(self, tmp_path):
        out = tmp_path / "audit.json"
        cfg = write_cfg(
            tmp_path / "c.cfg",
            n=1, alpha=0.25, R=8, field="constant", tol=1e-2, out=str(out),
        )
        assert run_cli(["audit", "--config", cfg]) == 0
        payload = json.loads(out.read_text())
        for rec in payload["density_audit"]["classes"]:
            assert rec["cubes"] > 0


class TestStability:
    def test_rows_and_summary(self, tmp_path):
        out, summary = tmp_path / "st.csv", tmp_path / "sum.json"
        cfg = write_cfg(
            tmp_path / "c.cfg",
            fields="constant;ball_indicator", n=1, P=32, L_list="4;8",
            instances=5, seed=3, out=str(out), summary_out=str(summary),
        )
        assert run_cli(["stability", "--config", cfg]) == 0
        payload = json.loads(summary.read_text())
        assert payload["monotone_in_truncation"] is True
        assert payload["degenerate_instances"] == 0
        lines = csv_body(out).splitlines()
        assert lines[0] == "kind,seed,x,y,t,s,p,L,ratio,tail_bound,flagged"
        assert len(lines) - 1 == 2 * 5 * 2  # specs * instances * truncations


class TestHarness:
    def test_selftest_passes(self, capsys):
        assert run_cli(["selftest"]) == 0
        out = capsys.readouterr().out
        assert out.count("[PASS]") == 5

    def test_missing_config_is_validation_error(self):
        assert run_cli(["sweep"]) == 2

    def test_unreadable_config_is_io_error(self):
        assert run_cli(["sweep", "--config", "/nonexistent/x.cfg"]) == 4

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "tangmax.cli", "selftest"],
            capture_output=True, text=True, timeout=300,
        )
        assert proc.returncode == 0
        assert "[PASS] conservation" in proc.stdout

    def test_duplicate_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("n = 1\nn = 2\n")
        assert run_cli(["maxscan", "--config", str(cfg)]) == 2
