"""Affine per-channel normalization of trajectory states to [-1, 1]."""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from ..robot.arm_model import RobotModel
from ..utils.error_handler import DimensionError


@dataclass
class NormalizationStats:
    """Map ``x -> (x - center) / half_range`` for each of the ``3 n_dof`` channels.

    Built from joint, velocity and acceleration limits rather than data, so
    states inside the limits land in ``[-1, 1]`` and clamping in normalized
    space is clamping to the limits.
    """

    center: np.ndarray
    half_range: np.ndarray

    def __post_init__(self) -> None:
        self.center = np.asarray(self.center, dtype=float)
        self.half_range = np.asarray(self.half_range, dtype=float)
        if self.center.shape != self.half_range.shape or self.center.ndim != 1:
            raise DimensionError("center and half_range must be equal-length vectors")
        if np.any(self.half_range <= 0):
            raise ValueError("half_range must be positive")

    @classmethod
    def from_model(cls, model: RobotModel) -> "NormalizationStats":
        lower, upper = model.state_lower, model.state_upper
        return cls(center=0.5 * (upper + lower), half_range=0.5 * (upper - lower))

    @property
    def state_dim(self) -> int:
        return int(self.center.size)

    def normalize(self, states: np.ndarray) -> np.ndarray:
        return (np.asarray(states, dtype=float) - self.center) / self.half_range

    def denormalize(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) * self.half_range + self.center

    def to_dict(self) -> Dict[str, Any]:
        return {"center": self.center.tolist(), "half_range": self.half_range.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NormalizationStats":
        return cls(center=np.asarray(data["center"]), half_range=np.asarray(data["half_range"]))
