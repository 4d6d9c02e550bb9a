"""Tests for the paydiff command line."""

import json

import numpy as np
import pytest

from paydiff.cli import EXIT_CRITERIA, EXIT_FAILURE, EXIT_OK, EXIT_USAGE, build_parser, main
from paydiff.core.run_manager import RunManager
from paydiff.core.trajectory_io import save_trajectory
from paydiff.diffusion import save_diffusion_checkpoint


def summary_line(capsys):
    """The JSON summary printed as the last line of a run."""
    lines = [line for line in capsys.readouterr().out.splitlines() if line.startswith('{"command"')]
    assert lines, "no summary printed"
    return json.loads(lines[-1])


class TestParser:
    """Argument parsing and usage errors."""

    def test_subcommands(self):
        parser = build_parser()
        args = parser.parse_args(["sample", "--ckpt", "c.h5", "--payload", "6"])
        assert args.sampler == "ddim"
        assert args.steps == 5

    def test_unknown_flag(self):
        assert main(["model", "--bogus"]) == EXIT_USAGE

    def test_missing_subcommand(self):
        assert main([]) == EXIT_USAGE

    def test_version(self):
        assert main(["--version"]) == EXIT_OK

    def test_preset_and_model_exclusive(self):
        assert main(["model", "--preset", "planar2", "--model", "m.json"]) == EXIT_USAGE


class TestModelCommand:
    """``paydiff model``."""

    def test_info(self, capsys):
        assert main(["model", "--preset", "planar2", "--info"]) == EXIT_OK
        captured = capsys.readouterr().out
        assert "n_dof: 2" in captured
        summary = json.loads([line for line in captured.splitlines() if line.startswith('{"command"')][-1])
        assert summary["status"] == "ok"
        assert summary["model"] == "planar2"

    def test_export_writes_run_record(self, tmp_path, capsys):
        assert main(["model", "--preset", "planar3", "--out", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "model.json").exists()
        record = RunManager.load(tmp_path)
        assert record["status"] == "ok"
        assert record["config"].command == "model"
        assert record["config"].model == "planar3"
        assert str(tmp_path / "model.json") in record["artifacts"]
        assert str(tmp_path / "run.json") in summary_line(capsys)["artifacts"]

    def test_unknown_preset(self, capsys):
        assert main(["model", "--preset", "scara"]) == EXIT_FAILURE
        assert summary_line(capsys)["status"] == "failed"


class TestEvalCommand:
    """``paydiff eval`` on trajectory files."""

    def setup_method(self):
        self.traj = None

    @pytest.fixture(autouse=True)
    def _trajectory(self, tmp_path, rest_trajectory):
        self.traj = save_trajectory(rest_trajectory, tmp_path / "rest.bin")

    def test_valid_trajectory(self, tmp_path, capsys):
        out = tmp_path / "eval"
        code = main(["eval", "--traj", str(self.traj), "--preset", "planar2", "--payload", "0", "1",
                     "--out", str(out)])
        assert code == EXIT_OK
        summary = summary_line(capsys)
        assert summary["checks"] == 2
        assert summary["valid"] == 2
        assert (out / "eval.csv").exists()

    def test_criteria_violation(self, tmp_path, capsys):
        criteria = tmp_path / "criteria.json"
        criteria.write_text(json.dumps([{"planner": "rest", "payload": 0, "metric": "success_rate", "min": 2}]))
        code = main(["eval", "--traj", str(self.traj), "--preset", "planar2", "--criteria", str(criteria),
                     "--out", str(tmp_path / "eval")])
        assert code == EXIT_CRITERIA
        assert summary_line(capsys)["status"] == "criteria_violated"
        assert RunManager.load(tmp_path / "eval")["status"] == "criteria_violated"

    def test_criteria_met(self, tmp_path):
        criteria = tmp_path / "criteria.json"
        criteria.write_text(json.dumps([{"planner": "rest", "payload": 0, "metric": "success_rate", "min": 1}]))
        assert main(["eval", "--traj", str(self.traj), "--preset", "planar2", "--criteria", str(criteria)]) \
            == EXIT_OK

    def test_missing_scene_file(self, tmp_path, capsys):
        code = main(["eval", "--traj", str(self.traj), "--preset", "planar2",
                     "--scene", str(tmp_path / "absent.json")])
        assert code == EXIT_FAILURE
        assert "absent.json" in summary_line(capsys)["error"]

    def test_model_is_required(self):
        assert main(["eval", "--traj", str(self.traj)]) == EXIT_USAGE


class TestSampleCommand:
    """``paydiff sample`` from a saved checkpoint."""

    def test_sample_writes_trajectory(self, tiny_checkpoint, tmp_path, capsys):
        ckpt = save_diffusion_checkpoint(tiny_checkpoint, tmp_path / "checkpoint.h5")
        out = tmp_path / "sample"
        code = main(["sample", "--ckpt", str(ckpt), "--payload", "2", "--start", "0.1,-0.05",
                     "--goal", "-0.1,0.15", "--out", str(out)])
        assert code == EXIT_OK
        summary = summary_line(capsys)
        assert summary["start_error"] == 0.0
        assert summary["goal_error"] == 0.0
        assert (out / "trajectory.bin").exists()
        assert (out / "trajectory.json").exists()
        meta = json.loads((out / "trajectory.json").read_text())
        assert meta["metadata"]["payload"] == 2.0

    def test_encoding_must_match_checkpoint(self, tiny_checkpoint, tmp_path, capsys):
        ckpt = save_diffusion_checkpoint(tiny_checkpoint, tmp_path / "checkpoint.h5")
        code = main(["sample", "--ckpt", str(ckpt), "--payload", "2", "--encoding", "numeric"])
        assert code == EXIT_FAILURE
        assert "encoding" in summary_line(capsys)["error"]

    def test_start_without_goal(self, tiny_checkpoint, tmp_path):
        ckpt = save_diffusion_checkpoint(tiny_checkpoint, tmp_path / "checkpoint.h5")
        assert main(["sample", "--ckpt", str(ckpt), "--payload", "2", "--start", "0,0"]) == EXIT_FAILURE


class TestTrainCommand:
    """``paydiff train`` configuration handling."""

    def test_unknown_config_table(self, tiny_dataset, tmp_path, capsys):
        from paydiff.data.dataset import save_dataset

        dataset = save_dataset(tiny_dataset, tmp_path / "dataset.h5")
        config = tmp_path / "train.json"
        config.write_text(json.dumps({"optimizer": {"lr": 0.1}}))
        code = main(["train", "--dataset", str(dataset), "--config", str(config), "--out", str(tmp_path / "t")])
        assert code == EXIT_FAILURE
        assert "optimizer" in summary_line(capsys)["error"]

    def test_short_training_run(self, tiny_dataset, tmp_path, capsys):
        from paydiff.data.dataset import save_dataset

        dataset = save_dataset(tiny_dataset, tmp_path / "dataset.h5")
        config = tmp_path / "train.json"
        config.write_text(json.dumps({
            "denoiser": {"widths": [8, 16], "kernel_size": 3, "n_groups": 4, "time_embed_dim": 8,
                         "payload_embed_widths": [8, 4]},
            "schedule": {"n_steps": 10},
            "train": {"batch_size": 4, "log_every": 1},
        }))
        out = tmp_path / "train"
        code = main(["train", "--dataset", str(dataset), "--config", str(config), "--steps", "2",
                     "--encoding", "less_than", "--out", str(out)])
        assert code == EXIT_OK
        summary = summary_line(capsys)
        assert summary["steps"] == 2
        assert summary["encoding"] == "less_than"
        assert np.isfinite(summary["final_loss"])
        assert (out / "checkpoint.h5").exists()
