"""paydiff: payload-conditioned trajectory generation for robot arms.

A diffusion model trained on zero-payload pick-and-place trajectories,
each labeled with the largest payload it can carry within the joint torque
limits, generates trajectories for a requested payload. Classical planners,
a validity gate and benchmark tools compare it against sampling-based and
optimization-based baselines.
"""

try:
    from ._version import version as __version__
except ImportError:
    __version__ = "0.1.0"

from .core.run_manager import RunConfig, RunManager
from .core.trajectory import Problem, Trajectory
from .eval.validity import ValidityReport, validate
from .robot.arm_model import RobotModel
from .robot.presets import get_preset
from .utils import logger

__all__ = [
    "__version__",
    "Problem",
    "RobotModel",
    "RunConfig",
    "RunManager",
    "Trajectory",
    "ValidityReport",
    "get_preset",
    "logger",
    "validate",
]
