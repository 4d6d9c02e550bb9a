"""Run records for command-line invocations.

Every subcommand that writes into an output directory leaves a
``run.json`` there holding the :class:`RunConfig`, the seed, the package
version and the command line, so the run can be repeated exactly.
"""

import json
import sys
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from ..utils.config import dataclass_from_dict, dataclass_to_dict
from ..utils.error_handler import CorruptFileError
from ..utils.logger import get_logger

logger = get_logger(__name__)

RUN_FILE = "run.json"


@dataclass
class RunConfig:
    """Inputs of one CLI invocation.

    ``model`` is a preset name or a model file; the other paths are files
    that must exist when the run starts. ``options`` keeps the remaining
    subcommand flags.
    """

    command: str = ""
    model: Optional[str] = None
    scene: Optional[str] = None
    dataset: Optional[str] = None
    checkpoint: Optional[str] = None
    seed: int = 0
    threads: Optional[int] = None
    out: Optional[str] = None
    criteria: Optional[str] = None
    options: Dict[str, Any] = field(default_factory=dict)

    def input_paths(self) -> Dict[str, str]:
        from ..robot.presets import preset_names

        paths = {name: getattr(self, name) for name in ("scene", "dataset", "checkpoint", "criteria")}
        if self.model is not None and self.model not in preset_names():
            paths["model"] = self.model
        return {k: v for k, v in paths.items() if v is not None}

    def check_paths(self) -> None:
        """Raise FileNotFoundError naming the first missing input file."""
        for name, path in self.input_paths().items():
            if not Path(path).exists():
                raise FileNotFoundError(f"{name} file not found: {path}")

    def to_dict(self) -> Dict[str, Any]:
        return dataclass_to_dict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        data = dict(data)
        options = data.pop("options", {})
        config = dataclass_from_dict(cls, data)
        config.options = dict(options)
        return config


class RunManager:
    """Writes and reads the ``run.json`` record of an output directory."""

    def __init__(self, version: Optional[str] = None) -> None:
        if version is None:
            from .. import __version__ as version
        self.version = version
        self._record: Dict[str, Any] = {}
        self._path: Optional[Path] = None

    @property
    def path(self) -> Optional[Path]:
        return self._path

    def start(self, config: RunConfig, argv: Optional[Sequence[str]] = None) -> Optional[Path]:
        """Record the start of a run; does nothing when the run has no output directory.

        Returns
        -------
        Path or None
            The written ``run.json``.
        """
        self._record = {
            "paydiff_version": self.version,
            "created_at": datetime.now().isoformat(),
            "argv": list(argv) if argv is not None else sys.argv[1:],
            "seed": config.seed,
            "config": config.to_dict(),
            "status": "running",
            "artifacts": [],
        }
        if config.out is None:
            return None
        self._path = Path(config.out) / RUN_FILE
        self._write()
        return self._path

    def finish(self, status: str = "ok", artifacts: Sequence[Any] = (),
               summary: Optional[Dict[str, Any]] = None) -> None:
        """Store the outcome, written artifacts and summary of the run."""
        self._record["status"] = status
        self._record["finished_at"] = datetime.now().isoformat()
        self._record["artifacts"] = [str(a) for a in artifacts]
        if summary is not None:
            self._record["summary"] = summary
        if self._path is not None:
            self._write()

    def _write(self) -> None:
        self._path.parent.mkdir(parents=True, exist_ok=True)
        with open(self._path, "w") as f:
            json.dump(self._record, f, indent=2, default=str)
        logger.debug(f"Run record written: {self._path}")

    def get_record(self) -> Dict[str, Any]:
        return dict(self._record)

    @staticmethod
    def load(out_dir: Path) -> Dict[str, Any]:
        """Read the record of an output directory.

        Raises
        ------
        FileNotFoundError
            If the directory has no ``run.json``.
        CorruptFileError
            If the record cannot be parsed.
        """
        path = Path(out_dir)
        if path.is_dir():
            path = path / RUN_FILE
        if not path.exists():
            raise FileNotFoundError(f"Run record not found: {path}")
        try:
            with open(path, "r") as f:
                record = json.load(f)
            record["config"] = RunConfig.from_dict(record["config"])
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise CorruptFileError(f"cannot read run record {path}: {e}") from e
        return record

    @staticmethod
    def list_artifacts(out_dir: Path) -> List[str]:
        return list(RunManager.load(out_dir).get("artifacts", []))
