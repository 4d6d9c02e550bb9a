"""HDF5 checkpoint container: named parameter blobs, optimizer state, JSON config."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import h5py
import numpy as np
from packaging.version import Version

from ..utils.error_handler import CorruptFileError, FormatVersionError
from ..utils.logger import get_logger

logger = get_logger(__name__)

CHECKPOINT_MAGIC = "paydiff-checkpoint"
CHECKPOINT_FORMAT_VERSION = "1.0"


@dataclass
class CheckpointData:
    params: Dict[str, np.ndarray]
    config: Dict[str, Any] = field(default_factory=dict)
    optimizer: Optional[Dict[str, np.ndarray]] = None
    metadata: Dict[str, Any] = field(default_factory=dict)


def save_checkpoint(path: Union[str, Path], params: Dict[str, np.ndarray], config: Dict[str, Any],
                    optimizer: Optional[Dict[str, np.ndarray]] = None,
                    metadata: Optional[Dict[str, Any]] = None) -> Path:
    """Write parameters (and optionally optimizer state) to ``path``.

    The file is written next to its destination and renamed into place, so
    an interrupted save never leaves a truncated checkpoint behind.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with h5py.File(tmp, "w") as f:
        f.attrs["magic"] = CHECKPOINT_MAGIC
        f.attrs["format_version"] = CHECKPOINT_FORMAT_VERSION
        f.attrs["config"] = json.dumps(config, sort_keys=True)
        f.attrs["metadata"] = json.dumps(metadata or {}, sort_keys=True, default=float)
        group = f.create_group("params")
        for name, value in params.items():
            group.create_dataset(name, data=np.asarray(value), track_times=False)
        if optimizer is not None:
            opt = f.create_group("optimizer")
            for name, value in optimizer.items():
                opt.create_dataset(name, data=np.asarray(value), track_times=False)
    tmp.replace(path)
    logger.debug(f"Saved checkpoint with {len(params)} tensors to {path}")
    return path


def _read_group(group: h5py.Group) -> Dict[str, np.ndarray]:
    out: Dict[str, np.ndarray] = {}

    def visit(name: str, obj: Any) -> None:
        if isinstance(obj, h5py.Dataset):
            out[name] = obj[()]

    group.visititems(visit)
    return out


def load_checkpoint(path: Union[str, Path], load_optimizer: bool = True) -> CheckpointData:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Raises
    ------
    CorruptFileError
        If the file is unreadable or not a checkpoint.
    FormatVersionError
        If its major format version differs.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint file not found: {path}")
    try:
        with h5py.File(path, "r") as f:
            if f.attrs.get("magic") != CHECKPOINT_MAGIC:
                raise CorruptFileError(f"{path} is not a paydiff checkpoint")
            version = str(f.attrs["format_version"])
            if Version(version).major != Version(CHECKPOINT_FORMAT_VERSION).major:
                raise FormatVersionError(f"checkpoint format version {version} is not supported")
            config = json.loads(f.attrs["config"])
            metadata = json.loads(f.attrs["metadata"])
            params = _read_group(f["params"])
            optimizer = _read_group(f["optimizer"]) if load_optimizer and "optimizer" in f else None
    except (OSError, KeyError, json.JSONDecodeError) as e:
        raise CorruptFileError(f"cannot read checkpoint {path}: {e}") from e
    return CheckpointData(params=params, config=config, optimizer=optimizer, metadata=metadata)
