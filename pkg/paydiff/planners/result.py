"""Planner outcomes and shared planner configuration."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from ..core.trajectory import DEFAULT_DT, DEFAULT_HORIZON, Trajectory
from ..core.trajectory_io import trajectory_to_dict
from ..utils.config import dataclass_from_dict, dataclass_to_dict


class PlannerStatus(str, Enum):
    SUCCESS = "success"
    TIMEOUT = "timeout"
    INFEASIBLE = "infeasible"


@dataclass
class PlannerResult:
    """Outcome of one planner call.

    ``trajectory`` is set iff ``status`` is ``SUCCESS``. ``candidates`` holds
    extra trajectories produced by samplers that draw several at once.
    """

    status: PlannerStatus
    trajectory: Optional[Trajectory] = None
    planning_time: float = 0.0
    iterations: int = 0
    message: str = ""
    candidates: List[Trajectory] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.status = PlannerStatus(self.status)
        if (self.trajectory is not None) != (self.status == PlannerStatus.SUCCESS):
            raise ValueError("trajectory must be present iff status is success")

    @property
    def success(self) -> bool:
        return self.status == PlannerStatus.SUCCESS

    def to_dict(self, include_trajectory: bool = False) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "status": self.status.value,
            "planning_time": self.planning_time,
            "iterations": self.iterations,
            "message": self.message,
        }
        if include_trajectory and self.trajectory is not None:
            data["trajectory"] = trajectory_to_dict(self.trajectory)
        return data


@dataclass
class PlannerConfig:
    """Hyperparameters shared by the classical planners."""

    horizon: int = DEFAULT_HORIZON
    dt: float = DEFAULT_DT
    # RRT-Connect
    sampler: str = "halton"
    step_size: float = 0.3
    edge_resolution: float = 0.02
    rrt_timeout: Optional[float] = None
    rrt_max_iterations: int = 4000
    shortcut_iterations: int = 60
    # Plan-and-filter
    max_attempts: int = 20
    # Kinodynamic RRT
    kino_timeout: float = 120.0
    kino_max_iterations: int = 2000
    extension_time: float = 0.6
    goal_bias: float = 0.1
    goal_tolerance: float = 1e-6
    velocity_weight: float = 0.3
    acceleration_weight: float = 0.05
    # SQP
    sqp_max_iter: int = 60
    trust_region: float = 0.1

    @property
    def duration(self) -> float:
        return (self.horizon - 1) * self.dt

    def to_dict(self) -> Dict[str, Any]:
        return dataclass_to_dict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PlannerConfig":
        return dataclass_from_dict(cls, data)
