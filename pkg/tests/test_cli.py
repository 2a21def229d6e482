import json

import numpy as np
import pytest

from pathforge.cli import cli
from pathforge.io import write_session
from pathforge.lowess import RawPath

FPS = 25.0


@pytest.fixture
def session_file(tmp_path):
    rng = np.random.default_rng(1)
    n = 400
    x = np.round(np.cumsum(rng.normal(0.5, 0.4, n)))
    y = np.round(np.cumsum(rng.normal(0.0, 0.4, n)))
    path = tmp_path / "session.csv"
    write_session(path, RawPath.from_xy(x, y, FPS))
    return path


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self, tmp_path, capsys):
        status = cli(["simulate", "--out", str(tmp_path), "--frobnicate"])
        assert status == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_command_is_usage_error(self, tmp_path):
        assert cli(["transmogrify", "--out", str(tmp_path)]) == 1

    def test_missing_required_flag(self):
        assert cli(["smooth"]) == 1

    def test_data_error_is_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("frame,t,x,y\n0,0,1,\n")
        status = cli(["smooth", "--input", str(bad), "--out", str(tmp_path / "o")])
        assert status == 2
        assert "error" in capsys.readouterr().err

    def test_help_is_success(self, capsys):
        assert cli(["--help"]) == 0
        assert "pathforge" in capsys.readouterr().out


class TestSessionCommands:
    def test_smooth_writes_outputs(self, session_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert cli(["smooth", "--input", str(session_file), "--out", str(out)]) == 0
        assert (out / "smoothed.csv").exists()
        assert (out / "manifest.json").exists()
        assert "smooth" in capsys.readouterr().out

    def test_segments_and_endpoints(self, session_file, tmp_path):
        out = tmp_path / "seg"
        assert cli(["segments", "--input", str(session_file), "--out", str(out)]) == 0
        assert (out / "segments.csv").exists()
        assert (out / "episodes.csv").exists()
        out2 = tmp_path / "end"
        assert cli(["endpoints", "--input", str(session_file), "--out", str(out2)]) == 0
        header = (out2 / "endpoints.csv").read_text().splitlines()[0]
        assert header.startswith("total_distance_m,proportion_arrest")

    def test_config_override_changes_manifest(self, session_file, tmp_path):
        out = tmp_path / "cfg"
        assert cli(["arrests", "--input", str(session_file), "--out", str(out),
                    "--set", "lowess.half_window=12", "--seed", "5"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["lowess.half_window"] == "12"
        assert manifest["seed"] == 5

    def test_bad_override_is_usage_like_error(self, session_file, tmp_path):
        status = cli(["arrests", "--input", str(session_file),
                      "--out", str(tmp_path / "x"), "--set", "bogus=1"])
        assert status == 2


class TestSimulate:
    def test_same_seed_identical_files(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["simulate", "--seed", "7", "--set", "sim.n_frames=30001"]
        assert cli(args + ["--out", str(a)]) == 0
        assert cli(args + ["--out", str(b)]) == 0
        assert (a / "simulated.csv").read_bytes() == (b / "simulated.csv").read_bytes()
        assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()

    def test_different_seed_differs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        base = ["simulate", "--set", "sim.n_frames=30001"]
        assert cli(base + ["--seed", "1", "--out", str(a)]) == 0
        assert cli(base + ["--seed", "2", "--out", str(b)]) == 0
        assert (a / "simulated.csv").read_bytes() != (b / "simulated.csv").read_bytes()

    def test_stationary_flag(self, tmp_path, capsys):
        out = tmp_path / "s"
        assert cli(["simulate", "--stationary", "--out", str(out),
                    "--set", "sim.n_frames=2000"]) == 0
        text = capsys.readouterr().out
        assert "rest share 1.000" in text


class TestEvaluate:
    def test_table1_smoke(self, tmp_path, capsys):
        out = tmp_path / "ev"
        status = cli(["evaluate", "--table1", "--reps", "3", "--out", str(out),
                      "--set", "sim.n_frames=3000", "--set", "fps=25"])
        assert status == 0
        assert (out / "metrics.csv").exists()
        assert (out / "replications.csv").exists()
        text = capsys.readouterr().out
        for method in ("raw", "lowess", "rrm", "combined"):
            assert method in text

    def test_metrics_csv_layout(self, tmp_path):
        out = tmp_path / "ev2"
        cli(["evaluate", "--table1", "--reps", "2", "--out", str(out),
             "--set", "sim.n_frames=3000"])
        lines = (out / "metrics.csv").read_text().splitlines()
        assert lines[0].startswith("scenario,sigma,target_p,method")
        assert len(lines) == 1 + 4  # four methods, one scenario


class TestMseCommands:
    def test_mse_table(self, tmp_path, capsys):
        out = tmp_path / "mse"
        assert cli(["mse-table", "--reps", "2000", "--out", str(out)]) == 0
        text = capsys.readouterr().out
        assert "closed" in text and "ok" in text
        assert (out / "mse_table.csv").exists()

    def test_validate_mse_passes(self, tmp_path, capsys):
        out = tmp_path / "val"
        assert cli(["validate-mse", "--reps", "20000", "--out", str(out)]) == 0
        assert "0 failures" in capsys.readouterr().out
        assert (out / "validation.csv").exists()
