import json
import os

import numpy as np
import pytest

from fpif.cli import main, read_solution

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def config_path(name):
    return os.path.join(CONFIG_DIR, name)


class TestRun:
    def test_matching_pennies_reports_tiny_gap(self, tmp_path, capsys):
        code, out, _ = run_cli(
            capsys, "run", config_path("matching_pennies.json"), "--out", str(tmp_path)
        )
        assert code == 0
        report = json.loads(out)
        assert report["status"] == "converged"
        assert report["residuals"]["gap"] <= 1e-5
        assert (tmp_path / "solution.csv").exists()
        assert (tmp_path / "trace.csv").exists()
        assert (tmp_path / "report.json").exists()
        sol = read_solution(tmp_path / "solution.csv")
        np.testing.assert_allclose(sol["x1"], [0.5, 0.5], atol=1e-6)

    def test_sum_box_intersection_lands_inside(self, tmp_path, capsys):
        code, out, _ = run_cli(
            capsys, "run", config_path("box_intersection_sum.json"), "--out", str(tmp_path)
        )
        assert code == 0
        sol = read_solution(tmp_path / "solution.csv")
        assert np.all(sol["x"] >= 3.0 - 1e-7)
        assert np.all(sol["x"] <= 5.0 + 1e-7)

    def test_gamma_out_of_range_names_the_constraint(self, tmp_path, capsys):
        # chi = 1 for matching pennies' translation... the matrix game chi
        # is 2; gamma = 2/chi = 1.0 violates ]0, 1/chi[ = ]0, 0.5[
        code, out, err = run_cli(
            capsys, "run", config_path("matching_pennies.json"),
            "--out", str(tmp_path), "--gamma", "1.0",
        )
        assert code == 1
        assert "]0, 1/chi[" in err

    def test_missing_field_reports_path(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"kind": "tseng", "space": {"dim": 1}}))
        code, _, err = run_cli(capsys, "run", str(bad), "--out", str(tmp_path))
        assert code == 1
        assert "config.A" in err

    def test_unknown_kind_rejected(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"kind": "nonsense"}))
        code, _, err = run_cli(capsys, "run", str(bad), "--out", str(tmp_path))
        assert code == 1
        assert "config.kind" in err

    def test_max_iter_exhaustion_exits_2(self, tmp_path, capsys):
        code, out, _ = run_cli(
            capsys, "run", config_path("diagonal_game.json"),
            "--out", str(tmp_path), "--max-iter", "8", "--tol", "1e-300",
        )
        assert code == 2
        assert json.loads(out)["status"] == "max_iter"

    def test_missing_kernel_file_reported(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({
            "kind": "grid-game",
            "kernel": "no_such_file.csv",
            "x1": {"from": 0.0, "to": 1.0, "points": 5},
            "x2": {"from": 0.0, "to": 1.0, "points": 5},
        }))
        code, _, err = run_cli(capsys, "run", str(bad), "--out", str(tmp_path))
        assert code == 1
        assert "does not exist" in err


class TestDeterminism:
    @pytest.mark.parametrize("config", [
        "tseng_rotation.json",
        "fpif_affine_diagonal.json",
        "sum_box_affine.json",
        "pd_scalar.json",
        "diagonal_game.json",
    ])
    def test_identical_runs_give_byte_identical_traces(self, config, tmp_path, capsys):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run_cli(capsys, "run", config_path(config), "--out", str(out_a))[0] == 0
        assert run_cli(capsys, "run", config_path(config), "--out", str(out_b))[0] == 0
        assert (out_a / "trace.csv").read_bytes() == (out_b / "trace.csv").read_bytes()
        assert (out_a / "solution.csv").read_bytes() == (out_b / "solution.csv").read_bytes()


class TestVerify:
    @pytest.mark.parametrize("config", [
        "tseng_rotation.json",
        "fpif_affine_diagonal.json",
        "sum_box_affine.json",
        "pd_scalar.json",
        "rps.json",
        "grid_xy.json",
    ])
    def test_round_trip_reproduces_reported_residuals(self, config, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "run", config_path(config), "--out", str(tmp_path))
        assert code == 0
        reported = json.loads(out)["residuals"]
        code, out, _ = run_cli(
            capsys, "verify", str(tmp_path / "solution.csv"), config_path(config)
        )
        assert code == 0
        recomputed = json.loads(out)["residuals"]
        assert set(recomputed) == set(reported)
        for key, value in reported.items():
            assert abs(recomputed[key] - value) <= 1e-12, key

    def test_perturbed_equilibrium_reports_positive_gap(self, tmp_path, capsys):
        code, _, _ = run_cli(capsys, "run", config_path("rps.json"), "--out", str(tmp_path))
        assert code == 0
        sol_path = tmp_path / "solution.csv"
        text = sol_path.read_text().splitlines()
        # push mass onto the first action of player 1
        rows = [text[0]]
        for line in text[1:]:
            var, idx, val = line.split(",")
            if var == "x1":
               val = "0.9" if idx == "0" else "0.05"
            rows.append(f"{var},{idx},{val}")
        sol_path.write_text("\n".join(rows) + "\n")
        code, out, _ = run_cli(capsys, "verify", str(sol_path), config_path("rps.json"))
        assert code == 0
        assert json.loads(out)["residuals"]["gap"] > 0.5

    def test_dimension_mismatch_rejected(self, tmp_path, capsys):
        code, _, _ = run_cli(capsys, "run", config_path("rps.json"), "--out", str(tmp_path))
        assert code == 0
        code, _, err = run_cli(
            capsys, "verify", str(tmp_path / "solution.csv"),
            config_path("matching_pennies.json"),
        )
        assert code == 1


class TestFullConfigSweep:
    @pytest.mark.parametrize("config", sorted(
        f for f in os.listdir(CONFIG_DIR) if f.endswith(".json")
    ))
    def test_every_shipped_config_converges(self, config, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "run", config_path(config), "--out", str(tmp_path))
        assert code == 0, out
        assert json.loads(out)["status"] == "converged"
