"""Serial-arm models, presets, model files and rigid-body dynamics."""

from .arm_model import RobotModel, forward_kinematics, jacobian, solve_position_ik, validate_model
from .dynamics import (
    PAYLOAD_CAP,
    inverse_dynamics,
    max_supported_payload,
    payload_torque,
    payload_wrench,
    validate_torques,
)
from .model_io import load_model, model_hash, resolve_model, save_model
from .presets import arm7, get_preset, is_planar, planar2, planar3, preset_names

__all__ = [
    "PAYLOAD_CAP",
    "RobotModel",
    "arm7",
    "forward_kinematics",
    "get_preset",
    "inverse_dynamics",
    "is_planar",
    "jacobian",
    "load_model",
    "max_supported_payload",
    "model_hash",
    "payload_torque",
    "payload_wrench",
    "planar2",
    "planar3",
    "preset_names",
    "resolve_model",
    "save_model",
    "solve_position_ik",
    "validate_model",
    "validate_torques",
]
