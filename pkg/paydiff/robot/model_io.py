"""JSON model files.

Layout::

    {
      "format": "paydiff-model",
      "name": "planar2",
      "gravity": [0, -9.81, 0],
      "nominal_payload": 1.0,
      "ee_offset": {"xyz": [1, 0, 0], "rpy": [0, 0, 0]},
      "joints": [
        {"name": "joint1", "type": "revolute",
         "origin": {"xyz": [...], "rpy": [...]}, "axis": [0, 0, 1],
         "limits": {"q_min": ..., "q_max": ..., "v_max": ..., "a_max": ...,
                    "j_max": ..., "tau_max": ...},
         "friction": {"viscous": 0, "coulomb": 0, "smoothing_eps": 0.05},
         "link": {"mass": 1.0, "com": [1, 0, 0], "inertia": [[...], [...], [...]]}}
      ]
    }
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Union

from ..utils.error_handler import ModelValidationError
from ..utils.logger import get_logger
from .arm_model import FrictionParams, Joint, JointLimits, LinkInertia, RobotModel
from .presets import get_preset, preset_names

logger = get_logger(__name__)

MODEL_FORMAT = "paydiff-model"


def model_to_dict(model: RobotModel) -> Dict[str, Any]:
    """Serialize a model to JSON-compatible primitives."""
    joints = []
    for joint, link, lim, fr in zip(model.joints, model.links, model.limits, model.friction):
        joints.append({
            "name": joint.name,
            "type": "revolute",
            "origin": {"xyz": list(joint.origin_xyz), "rpy": list(joint.origin_rpy)},
            "axis": list(joint.axis),
            "limits": {
                "q_min": lim.q_min, "q_max": lim.q_max, "v_max": lim.v_max,
                "a_max": lim.a_max, "j_max": lim.j_max, "tau_max": lim.tau_max,
            },
            "friction": {
                "viscous": fr.viscous, "coulomb": fr.coulomb,
                "smoothing_eps": fr.smoothing_eps,
            },
            "link": {
                "mass": link.mass,
                "com": list(link.com),
                "inertia": [list(row) for row in link.inertia],
            },
        })
    return {
        "format": MODEL_FORMAT,
        "name": model.name,
        "description": model.description,
        "gravity": list(model.gravity),
        "nominal_payload": model.nominal_payload,
        "ee_offset": {"xyz": list(model.ee_xyz), "rpy": list(model.ee_rpy)},
        "joints": joints,
    }


def _vec3(data: Any, path: str) -> tuple:
    try:
        values = tuple(float(v) for v in data)
    except (TypeError, ValueError):
        raise ModelValidationError(path, "must be a list of three numbers")
    if len(values) != 3:
        raise ModelValidationError(path, f"must have 3 entries, got {len(values)}")
    return values


def _require(data: Dict[str, Any], key: str, path: str) -> Any:
    if not isinstance(data, dict) or key not in data:
        raise ModelValidationError(f"{path}.{key}" if path else key, "missing field")
    return data[key]


def _number(data: Dict[str, Any], key: str, path: str, default: Any = None) -> float:
    if key not in data:
        if default is None:
            raise ModelValidationError(f"{path}.{key}", "missing field")
        return float(default)
    try:
        return float(data[key])
    except (TypeError, ValueError):
        raise ModelValidationError(f"{path}.{key}", "must be a number")


def model_from_dict(data: Dict[str, Any]) -> RobotModel:
    """Build and validate a model from parsed JSON.

    Raises
    ------
    ModelValidationError
        With the field path of the first problem found.
    """
    if not isinstance(data, dict):
        raise ModelValidationError("<root>", "model must be a JSON object")
    if data.get("format", MODEL_FORMAT) != MODEL_FORMAT:
        raise ModelValidationError("format", f"expected {MODEL_FORMAT!r}")

    raw_joints = _require(data, "joints", "")
    if not isinstance(raw_joints, list) or not raw_joints:
        raise ModelValidationError("joints", "must be a non-empty list")

    joints, links, limits, friction = [], [], [], []
    for i, entry in enumerate(raw_joints):
        path = f"joints[{i}]"
        if not isinstance(entry, dict):
            raise ModelValidationError(path, "must be an object")
        joint_type = entry.get("type", "revolute")
        if joint_type != "revolute":
            raise ModelValidationError(f"{path}.type", f"only revolute joints are supported, got {joint_type!r}")

        origin = entry.get("origin", {})
        joints.append(Joint(
            name=str(entry.get("name", f"joint{i + 1}")),
            origin_xyz=_vec3(origin.get("xyz", (0, 0, 0)), f"{path}.origin.xyz"),
            origin_rpy=_vec3(origin.get("rpy", (0, 0, 0)), f"{path}.origin.rpy"),
            axis=_vec3(entry.get("axis", (0, 0, 1)), f"{path}.axis"),
        ))

        lim = _require(entry, "limits", path)
        lim_path = f"{path}.limits"
        limits.append(JointLimits(**{
            key: _number(lim, key, lim_path)
            for key in ("q_min", "q_max", "v_max", "a_max", "j_max", "tau_max")
        }))

        fr = entry.get("friction", {})
        fr_path = f"{path}.friction"
        friction.append(FrictionParams(
            viscous=_number(fr, "viscous", fr_path, 0.0),
            coulomb=_number(fr, "coulomb", fr_path, 0.0),
            smoothing_eps=_number(fr, "smoothing_eps", fr_path, 0.05),
        ))

        link = _require(entry, "link", path)
        link_path = f"{path}.link"
        inertia = link.get("inertia", [[0, 0, 0], [0, 0, 0], [0, 0, 0]])
        if not isinstance(inertia, list) or len(inertia) != 3:
            raise ModelValidationError(f"{link_path}.inertia", "must be a 3x3 list")
        links.append(LinkInertia(
            mass=_number(link, "mass", link_path),
            com=_vec3(link.get("com", (0, 0, 0)), f"{link_path}.com"),
            inertia=tuple(_vec3(row, f"{link_path}.inertia[{r}]") for r, row in enumerate(inertia)),
        ))

    ee = data.get("ee_offset", {})
    return RobotModel(
        name=str(data.get("name", "custom")),
        joints=tuple(joints),
        links=tuple(links),
        limits=tuple(limits),
        friction=tuple(friction),
        ee_xyz=_vec3(ee.get("xyz", (0, 0, 0)), "ee_offset.xyz"),
        ee_rpy=_vec3(ee.get("rpy", (0, 0, 0)), "ee_offset.rpy"),
        gravity=_vec3(data.get("gravity", (0.0, 0.0, -9.81)), "gravity"),
        nominal_payload=_number(data, "nominal_payload", "", 0.0),
        description=str(data.get("description", "")),
    )


def load_model(path: Union[str, Path]) -> RobotModel:
    """Load and validate a JSON model file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Model file not found: {path}")
    with open(path, "r") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelValidationError("<root>", f"invalid JSON: {e}")
    model = model_from_dict(data)
    logger.info(f"Loaded model {model.name} ({model.n_dof} DoF) from {path}")
    return model


def save_model(model: RobotModel, path: Union[str, Path]) -> Path:
    """Write a model as indented JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(model_to_dict(model), f, indent=2)
    return path


def resolve_model(spec: Union[str, Path]) -> RobotModel:
    """Return a preset if ``spec`` names one, otherwise load it as a file."""
    if isinstance(spec, str) and spec in preset_names():
        return get_preset(spec)
    return load_model(spec)


def model_hash(model: RobotModel) -> str:
    """SHA-256 of the canonical JSON form of the model (description excluded)."""
    data = model_to_dict(model)
    data.pop("description", None)
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
