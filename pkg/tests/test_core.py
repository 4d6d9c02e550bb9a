"""Tests for run records of command-line invocations."""

import json
from unittest.mock import patch

import pytest

from paydiff.core.run_manager import RUN_FILE, RunConfig, RunManager
from paydiff.utils.error_handler import CorruptFileError, ModelValidationError


class TestRunConfig:
    """Test cases for RunConfig."""

    def test_presets_are_not_files(self):
        """A preset model name needs no file on disk."""
        config = RunConfig(command="model", model="planar2")
        assert config.input_paths() == {}
        config.check_paths()

    def test_missing_input_named(self, tmp_path):
        """The first missing input is named in the error."""
        config = RunConfig(command="train", dataset=str(tmp_path / "absent.h5"))
        with pytest.raises(FileNotFoundError, match="dataset"):
            config.check_paths()

    def test_model_file_checked(self, tmp_path):
        """A model that is not a preset must exist as a file."""
        config = RunConfig(command="bench", model=str(tmp_path / "arm.json"))
        assert "model" in config.input_paths()
        (tmp_path / "arm.json").write_text("{}")
        config.check_paths()

    def test_dict_roundtrip(self):
        """Options survive conversion to and from plain dicts."""
        config = RunConfig(command="sample", seed=4, options={"payload": 6.0, "sampler": "ddim"})
        restored = RunConfig.from_dict(json.loads(json.dumps(config.to_dict())))
        assert restored == config

    def test_unknown_key(self):
        """Unknown keys are rejected with their name."""
        with pytest.raises(ModelValidationError) as excinfo:
            RunConfig.from_dict({"command": "model", "colour": "red"})
        assert excinfo.value.field_path == "colour"


class TestRunManager:
    """Test cases for RunManager."""

    def setup_method(self):
        """Set up test fixtures."""
        self.run_manager = RunManager(version="9.9.9")

    def test_initialization(self):
        """A fresh manager has no record and no path."""
        assert self.run_manager.path is None
        assert self.run_manager.get_record() == {}

    def test_start_without_output(self):
        """Runs without an output directory write nothing."""
        with patch("paydiff.core.run_manager.json.dump") as mock_dump:
            assert self.run_manager.start(RunConfig(command="model"), ["model"]) is None
            self.run_manager.finish("ok")
        mock_dump.assert_not_called()
        assert self.run_manager.get_record()["status"] == "ok"

    def test_start_and_finish(self, tmp_path):
        """The record is written at start and updated at finish."""
        config = RunConfig(command="datagen", model="planar2", seed=7, out=str(tmp_path))
        path = self.run_manager.start(config, ["datagen", "--seed", "7"])
        assert path == tmp_path / RUN_FILE
        assert RunManager.load(tmp_path)["status"] == "running"

        self.run_manager.finish("ok", [tmp_path / "dataset.h5"], {"samples": 3})
        record = RunManager.load(tmp_path)
        assert record["status"] == "ok"
        assert record["seed"] == 7
        assert record["paydiff_version"] == "9.9.9"
        assert record["argv"] == ["datagen", "--seed", "7"]
        assert record["summary"] == {"samples": 3}
        assert record["config"] == config
        assert RunManager.list_artifacts(tmp_path) == [str(tmp_path / "dataset.h5")]

    def test_load_missing(self, tmp_path):
        """Loading from a directory without a record fails clearly."""
        with pytest.raises(FileNotFoundError):
            RunManager.load(tmp_path)

    def test_load_corrupt(self, tmp_path):
        """A truncated record is reported as corrupt."""
        (tmp_path / RUN_FILE).write_text('{"config": ')
        with pytest.raises(CorruptFileError):
            RunManager.load(tmp_path)


if __name__ == "__main__":
    pytest.main([__file__])
