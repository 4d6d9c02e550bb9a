"""Binary and JSON trajectory files.

Binary layout (little endian)::

    magic      8 bytes   b"PAYDTRJ\\x00"
    version    uint16
    n_dof      uint32
    horizon    uint32
    dt         float64
    states     horizon * 3 * n_dof float64, row-major
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from ..utils.error_handler import CorruptFileError, FormatVersionError
from ..utils.logger import get_logger
from .trajectory import Trajectory

logger = get_logger(__name__)

TRAJECTORY_MAGIC = b"PAYDTRJ\x00"
TRAJECTORY_VERSION = 1
_HEADER = struct.Struct("<8sHIId")


def trajectory_to_bytes(traj: Trajectory) -> bytes:
    header = _HEADER.pack(TRAJECTORY_MAGIC, TRAJECTORY_VERSION, traj.n_dof, traj.horizon, traj.dt)
    return header + np.ascontiguousarray(traj.states, dtype="<f8").tobytes()


def trajectory_from_bytes(blob: bytes) -> Trajectory:
    """Parse the binary layout.

    Raises
    ------
    CorruptFileError
        If the magic is wrong or the body is truncated.
    FormatVersionError
        If the file was written by a newer format version.
    """
    if len(blob) < _HEADER.size:
        raise CorruptFileError(f"trajectory data too short ({len(blob)} bytes)")
    magic, version, n_dof, horizon, dt = _HEADER.unpack_from(blob)
    if magic != TRAJECTORY_MAGIC:
        raise CorruptFileError("not a paydiff trajectory file (bad magic)")
    if version != TRAJECTORY_VERSION:
        raise FormatVersionError(f"trajectory format version {version} is not supported")
    expected = horizon * 3 * n_dof * 8
    body = blob[_HEADER.size:]
    if len(body) != expected:
        raise CorruptFileError(f"trajectory body has {len(body)} bytes, expected {expected}")
    states = np.frombuffer(body, dtype="<f8").reshape(horizon, 3 * n_dof).astype(float)
    return Trajectory(dt=dt, states=states)


def save_trajectory(traj: Trajectory, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(trajectory_to_bytes(traj))
    logger.debug(f"Saved trajectory ({traj.horizon}x{traj.n_dof}) to {path}")
    return path


def load_trajectory(path: Union[str, Path]) -> Trajectory:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trajectory file not found: {path}")
    return trajectory_from_bytes(path.read_bytes())


def trajectory_to_dict(traj: Trajectory, metadata: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """JSON debug form with named channels."""
    return {
        "format_version": TRAJECTORY_VERSION,
        "n_dof": traj.n_dof,
        "horizon": traj.horizon,
        "dt": traj.dt,
        "q": traj.q.tolist(),
        "qd": traj.qd.tolist(),
        "qdd": traj.qdd.tolist(),
        "metadata": metadata or {},
    }


def dump_trajectory_json(traj: Trajectory, path: Union[str, Path],
                         metadata: Optional[Dict[str, Any]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(trajectory_to_dict(traj, metadata), f, indent=2)
    return path


def load_trajectory_json(path: Union[str, Path]) -> Trajectory:
    with open(path, "r") as f:
        data = json.load(f)
    try:
        return Trajectory.from_components(
            np.asarray(data["q"]), np.asarray(data["qd"]), np.asarray(data["qdd"]), data["dt"])
    except KeyError as e:
        raise CorruptFileError(f"trajectory JSON is missing {e.args[0]!r}")
