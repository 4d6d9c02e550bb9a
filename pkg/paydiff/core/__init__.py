"""Trajectories, time parameterization, trajectory files and run records."""

from .jerk_profile import KinematicLimits, jerk_limited_profile, parameterize_path, time_parameterize
from .run_manager import RunConfig, RunManager
from .trajectory import DEFAULT_DT, DEFAULT_HORIZON, Problem, Trajectory, check_consistency, time_scale
from .trajectory_io import dump_trajectory_json, load_trajectory, load_trajectory_json, save_trajectory

__all__ = [
    "DEFAULT_DT",
    "DEFAULT_HORIZON",
    "KinematicLimits",
    "Problem",
    "RunConfig",
    "RunManager",
    "Trajectory",
    "check_consistency",
    "dump_trajectory_json",
    "jerk_limited_profile",
    "load_trajectory",
    "load_trajectory_json",
    "parameterize_path",
    "save_trajectory",
    "time_parameterize",
    "time_scale",
]
