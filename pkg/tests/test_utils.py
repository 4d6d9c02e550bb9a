"""Tests for configuration, logging and error handling helpers."""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple

import numpy as np
import pytest

from paydiff.utils.config import dataclass_from_dict, dataclass_to_dict, load_config
from paydiff.utils.error_handler import (
    ModelValidationError,
    critical_error_boundary,
    error_boundary,
    safe_execute,
)
from paydiff.utils.logger import LOG_ENV_VAR, get_logger, progress_enabled, set_verbosity, setup_file_logging


class Color(str, Enum):
    RED = "red"


@dataclass
class Inner:
    rate: float = 1.0


@dataclass
class Outer:
    name: str = ""
    widths: Tuple[int, ...] = (1, 2)
    inner: Inner = field(default_factory=Inner)


class TestLoadConfig:
    """JSON and TOML configuration files."""

    def test_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"train": {"steps": 10}}))
        assert load_config(path) == {"train": {"steps": 10}}

    def test_toml(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text("[train]\nsteps = 10\nlr = 0.001\n")
        assert load_config(path) == {"train": {"steps": 10, "lr": 0.001}}

    def test_missing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "absent.json")

    def test_unsupported_suffix(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("train: {}")
        with pytest.raises(ValueError):
            load_config(path)


class TestDataclassConversion:
    """Mapping <-> dataclass helpers."""

    def test_nested_and_tuples(self):
        obj = dataclass_from_dict(Outer, {"name": "a", "widths": [8, 16], "inner": {"rate": 0.5}})
        assert obj == Outer("a", (8, 16), Inner(0.5))

    def test_defaults_kept(self):
        assert dataclass_from_dict(Outer, {}) == Outer()

    def test_unknown_nested_key_path(self):
        with pytest.raises(ModelValidationError) as excinfo:
            dataclass_from_dict(Outer, {"inner": {"speed": 2}})
        assert excinfo.value.field_path == "inner.speed"

    def test_to_dict(self):
        @dataclass
        class Holder:
            color: Color = Color.RED
            values: np.ndarray = field(default_factory=lambda: np.array([1.0, 2.0]))
            inner: Inner = field(default_factory=Inner)

        assert dataclass_to_dict(Holder()) == {"color": "red", "values": [1.0, 2.0], "inner": {"rate": 1.0}}


class TestLogger:
    """Logger configuration."""

    @pytest.mark.parametrize("value,level", [("DEBUG", logging.DEBUG), ("warning", logging.WARNING),
                                             ("15", 15), ("loud", logging.INFO)])
    def test_level_from_environment(self, monkeypatch, value, level):
        monkeypatch.setenv(LOG_ENV_VAR, value)
        logger = get_logger(f"paydiff.test_env_{value}")
        assert logger.level == level

    def test_foreign_loggers_default_to_warning(self, monkeypatch):
        monkeypatch.delenv(LOG_ENV_VAR, raising=False)
        assert get_logger("elsewhere.test_default").level == logging.WARNING

    def test_handlers_not_duplicated(self):
        logger = get_logger("paydiff.test_once")
        get_logger("paydiff.test_once")
        assert len(logger.handlers) == 1

    def test_set_verbosity(self, monkeypatch):
        monkeypatch.delenv(LOG_ENV_VAR, raising=False)
        logger = get_logger("paydiff.test_verbosity")
        set_verbosity(logging.WARNING)
        try:
            assert logger.level == logging.WARNING
            assert not progress_enabled(logger)
        finally:
            set_verbosity(logging.INFO)
        assert progress_enabled(logger)

    def test_file_logging(self, tmp_path):
        path = setup_file_logging(tmp_path / "logs")
        package_logger = logging.getLogger("paydiff")
        handler = package_logger.handlers[-1]
        try:
            get_logger("paydiff.test_file").info("hello from the test")
            handler.flush()
            assert path.exists()
            assert "hello from the test" in path.read_text()
        finally:
            package_logger.removeHandler(handler)
            handler.close()


class TestErrorHandling:
    """Error boundaries around calls."""

    def test_safe_execute_returns_result(self):
        assert safe_execute(lambda a, b: a + b, 1, 2, module_name="test") == 3

    def test_safe_execute_swallows(self):
        def boom():
            raise RuntimeError("boom")

        assert safe_execute(boom, module_name="test", context="unit") is None

    def test_error_boundary_reraises(self):
        @error_boundary("test")
        def boom():
            raise KeyError("x")

        with pytest.raises(KeyError):
            boom()

    def test_error_boundary_swallows(self):
        @error_boundary("test", reraise=False)
        def boom():
            raise KeyError("x")

        assert boom() is None

    def test_critical_boundary_keeps_name_and_error(self):
        @critical_error_boundary
        def entry():
            raise ValueError("bad input")

        assert entry.__name__ == "entry"
        with pytest.raises(ValueError, match="bad input"):
            entry()

    def test_model_validation_message(self):
        err = ModelValidationError("joints[2].limits.v_max", "must be > 0")
        assert err.field_path == "joints[2].limits.v_max"
        assert str(err) == "joints[2].limits.v_max: must be > 0"
        assert isinstance(err, ValueError)
