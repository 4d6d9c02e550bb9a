"""Classical planners: RRT-Connect, plan-and-filter, kinodynamic RRT and SQP."""

from .kinodynamic import kinodynamic_rrt
from .plan_and_filter import plan_and_filter
from .result import PlannerConfig, PlannerResult, PlannerStatus
from .rrt_connect import rrt_connect, shortcut_path
from .sqp import sqp_optimize

__all__ = [
    "PlannerConfig",
    "PlannerResult",
    "PlannerStatus",
    "kinodynamic_rrt",
    "plan_and_filter",
    "rrt_connect",
    "shortcut_path",
    "sqp_optimize",
]
