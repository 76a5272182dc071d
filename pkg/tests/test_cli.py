import json
import subprocess
import sys

import numpy as np
import pytest

from sancdyn.cli import run

DET = {"model": "deterministic", "alpha": 0.5, "beta": 0.5, "x0": 0, "x1": 1, "y0": 0, "y1": 1, "steps": 10}
STO = {"model": "stochastic", "alpha": 0.8, "beta": 0.8, "x0": 0, "x1": 1, "y0": 0, "y1": 1,
       "sigma_x": 0.3, "sigma_y": 0.3, "distribution": "gaussian", "steps": 10, "seed": 42,
       "trajectories": 20000}
LAN = {"model": "lanchester", "alpha": 0.1, "beta": 0.1, "r0": 100, "g0": 100, "dt": 1, "steps": 5}


@pytest.fixture
def scenario(tmp_path):
    def write(doc, name="s.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)
    return write


class TestSimulate:
    def test_csv_and_summary(self, scenario, tmp_path, capsys):
        out = tmp_path / "traj.csv"
        assert run(["simulate", "--scenario", scenario(DET), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "n,x,y,v,w" and len(lines) == 12
        summary = capsys.readouterr().out
        assert "q=0.25" in summary and "verdict=stable" in summary

    def test_json_report(self, scenario, tmp_path):
        out = tmp_path / "r.json"
        assert run(["simulate", "--scenario", scenario(DET), "--out", str(out), "--format", "json"]) == 0
        text = out.read_text()
        assert '"q":0.25' in text and '"verdict":"stable"' in text
        assert json.loads(text)["schema"] == "sancdyn-report-v1"

    def test_report_alongside_csv(self, scenario, tmp_path):
        out, rep = tmp_path / "t.csv", tmp_path / "r.json"
        assert run(["simulate", "--scenario", scenario(STO), "--out", str(out), "--report", str(rep)]) == 0
        doc = json.loads(rep.read_text())
        assert doc["gains"]["qbar"] == pytest.approx(0.5329)
        assert doc["gains"]["noise_floor"] == pytest.approx(0.0081)
        assert doc["verdicts"] == {"deterministic": "stable", "mean_square": "stable"}
        assert doc["outputs"] == {"csv": str(out), "report": str(rep)}

    def test_lanchester(self, scenario, tmp_path):
        out = tmp_path / "l.csv"
        assert run(["simulate", "--scenario", scenario(LAN), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "n,r,g" and lines[2] == "1,90.0,90.0"

    def test_steps_override(self, scenario, tmp_path):
        out = tmp_path / "t.csv"
        assert run(["simulate", "--scenario", scenario(DET), "--steps", "3", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 5

    def test_seed_override_changes_path(self, scenario, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(["simulate", "--scenario", scenario(STO), "--out", str(a)])
        run(["simulate", "--scenario", scenario(STO), "--seed", "43", "--out", str(b)])
        assert a.read_bytes() != b.read_bytes()

    def test_stdout_when_no_out(self, scenario, capsys):
        assert run(["simulate", "--scenario", scenario(DET)]) == 0
        captured = capsys.readouterr()
        assert captured.out.startswith("n,x,y,v,w\n")
        assert "verdict=stable" in captured.err

    def test_overflow_truncation(self, scenario, tmp_path):
        out = tmp_path / "t.csv"
        assert run(["simulate", "--scenario", scenario(dict(DET, alpha=1e3, beta=1e3, steps=500)),
                    "--out", str(out)]) == 0
        assert out.read_text().splitlines()[-1].startswith("# truncated: overflow at n=")


class TestMonteCarlo:
    def test_report(self, scenario, tmp_path):
        out = tmp_path / "mc.json"
        assert run(["montecarlo", "--scenario", scenario(STO), "--out", str(out)]) == 0
        mc = json.loads(out.read_text())["montecarlo"]
        assert mc["horizon"] == 11 and mc["n_trajectories"] == 20000
        assert mc["ci_low"] <= mc["empirical_ms_ratio"] <= mc["ci_high"]
        assert mc["analytic_qbar"] == pytest.approx(0.5329)

    def test_trajectories_flag(self, scenario, tmp_path):
        out = tmp_path / "mc.json"
        doc = dict(STO)
        del doc["trajectories"]
        assert run(["montecarlo", "--scenario", scenario(doc), "--trajectories", "3000",
                    "--out", str(out)]) == 0
        assert json.loads(out.read_text())["montecarlo"]["n_trajectories"] == 3000

    def test_missing_trajectories(self, scenario, tmp_path):
        doc = dict(STO)
        del doc["trajectories"]
        assert run(["montecarlo", "--scenario", scenario(doc), "--out", str(tmp_path / "x")]) == 1
        assert not (tmp_path / "x").exists()

    def test_odd_steps_rejected(self, scenario, tmp_path):
        assert run(["montecarlo", "--scenario", scenario(STO), "--steps", "9",
                    "--out", str(tmp_path / "x")]) == 1

    def test_csv_mean_squares(self, scenario, tmp_path):
        out = tmp_path / "ms.csv"
        assert run(["montecarlo", "--scenario", scenario(STO), "--format", "csv", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "n,mean_square_v" and lines[1] == "1,1.0" and len(lines) == 12

    def test_workers_do_not_change_bytes(self, scenario, tmp_path):
        doc = dict(STO, trajectories=140_000, steps=4)
        out = tmp_path / "mc.json"
        run(["montecarlo", "--scenario", scenario(doc), "--out", str(out)])
        serial = out.read_bytes()
        run(["montecarlo", "--scenario", scenario(doc), "--out", str(out), "--workers", "3"])
        assert out.read_bytes() == serial

    def test_deterministic_scenario_rejected(self, scenario, tmp_path):
        assert run(["montecarlo", "--scenario", scenario(DET), "--trajectories", "10"]) == 1


class TestSweep:
    def test_grid_csv(self, tmp_path):
        out = tmp_path / "grid.csv"
        assert run(["sweep", "--alpha", "0.01:2:101", "--beta", "0.01:2:101", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "alpha,beta,gain,verdict" and len(lines) == 1 + 101 * 101
        for line in lines[1:]:
            a, b, g, verdict = line.split(",")
            assert (verdict == "stable") == (float(a) * float(b) < 1 - 1e-9)
            assert float(g) == float(a) * float(b)

    def test_mean_square(self, tmp_path):
        out = tmp_path / "g.json"
        assert run(["sweep", "--alpha", "0.1:1:10", "--beta", "0.1:1:10", "--mode", "mean-square",
                    "--sigma-x", "0.5", "--sigma-y", "0.5", "--format", "json", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["grid"]["mode"] == "mean-square"
        assert doc["gains"]["noise_floor"] == 0.0625
        assert sum(doc["grid"]["counts"].values()) == 100

    def test_noise_from_scenario(self, scenario, tmp_path):
        out = tmp_path / "g.csv"
        assert run(["sweep", "--scenario", scenario(STO), "--mode", "mean-square", "--alpha", "0.8:0.8:1",
                    "--beta", "0.8:0.8:1", "--out", str(out)]) == 0
        assert out.read_text().splitlines()[1].startswith("0.8,0.8,0.5329")

    def test_mean_square_without_noise(self, tmp_path):
        assert run(["sweep", "--mode", "mean-square", "--out", str(tmp_path / "g")]) == 1

    def test_bad_axis(self, tmp_path):
        out = tmp_path / "g.csv"
        assert run(["sweep", "--alpha", "2:0.01:10", "--out", str(out)]) == 1
        assert run(["sweep", "--alpha", "0:2:10", "--out", str(out)]) == 1
        assert not out.exists()


class TestAnalyze:
    def test_deterministic(self, scenario, tmp_path):
        out = tmp_path / "a.json"
        assert run(["analyze", "--scenario", scenario(DET), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["growth"]["residual"] < 1e-9
        assert doc["cumulative_limit"]["x"] == pytest.approx(2.0)

    def test_stochastic_comparison(self, scenario, tmp_path):
        out = tmp_path / "a.json"
        assert run(["analyze", "--scenario", scenario(dict(STO, steps=40)), "--steps", "40",
                    "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert "comparison" in doc and doc["comparison"]["analytic_qbar"] == pytest.approx(0.5329)
        assert doc["montecarlo"]["horizon"] == 41

    def test_csv_rejected(self, scenario):
        assert run(["analyze", "--scenario", scenario(DET), "--format", "csv"]) == 1

    def test_estimation_error_exit_2(self, scenario, tmp_path):
        doc = dict(DET, x0=1, x1=1, y0=2, y1=2, steps=20)
        out = tmp_path / "a.json"
        assert run(["analyze", "--scenario", scenario(doc), "--out", str(out)]) == 2
        assert not out.exists()


class TestExitStatus:
    def test_unknown_subcommand(self, capsys):
        assert run(["explode"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_flag(self, scenario):
        assert run(["simulate", "--scenario", scenario(DET), "--frobnicate"]) == 1

    def test_constraint_violation_leaves_output_untouched(self, scenario, tmp_path):
        out = tmp_path / "t.csv"
        out.write_text("previous")
        assert run(["simulate", "--scenario", scenario(dict(DET, alpha=-1)), "--out", str(out)]) == 1
        assert out.read_text() == "previous"

    def test_missing_scenario_file(self, tmp_path):
        assert run(["simulate", "--scenario", str(tmp_path / "nope.json")]) == 1

    def test_seed_on_deterministic(self, scenario):
        assert run(["simulate", "--scenario", scenario(DET), "--seed", "4"]) == 1

    def test_help_is_success(self):
        assert run(["--help"]) == 0

    def test_module_entry_point(self, scenario, tmp_path):
        out = tmp_path / "t.csv"
        proc = subprocess.run([sys.executable, "-m", "sancdyn", "simulate", "--scenario", scenario(DET),
                               "--out", str(out)], capture_output=True, text=True)
        assert proc.returncode == 0 and out.exists()
        proc = subprocess.run([sys.executable, "-m", "sancdyn", "bogus"], capture_output=True, text=True)
        assert proc.returncode == 1
