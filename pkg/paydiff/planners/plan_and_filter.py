"""Plan a geometric path, time-parameterize it, keep it only if valid at the payload."""

import time
from typing import Optional

import numpy as np

from ..core.jerk_profile import KinematicLimits, time_parameterize
from ..core.trajectory import Problem, Trajectory
from ..eval.validity import validate
from ..robot.arm_model import RobotModel
from ..utils.error_handler import DegeneratePathError, InfeasibleDurationError, NegativeMassError, PlannerTimeoutError
from ..utils.logger import get_logger
from ..world.collision import CollisionChecker, CollisionProxySet, proxies_for
from .result import PlannerConfig, PlannerResult, PlannerStatus
from .rrt_connect import rrt_connect, shortcut_path

logger = get_logger(__name__)


def plan_and_filter(model: RobotModel, problem: Problem, payload: float, max_attempts: Optional[int] = None,
                    rng_seed: int = 0, proxies: Optional[CollisionProxySet] = None,
                    config: Optional[PlannerConfig] = None, sampler: Optional[str] = None) -> PlannerResult:
    """Repeat RRT-Connect, shortcutting and time parameterization until a candidate passes.

    Every attempt uses its own sampler offset. A candidate is accepted only
    if the full validity gate passes at ``payload``.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    problem : Problem
        Start, goal and scene.
    payload : float
        Payload the trajectory must support, kg.
    max_attempts : int, optional
        Defaults to ``config.max_attempts``.
    rng_seed : int
        Base seed; attempt ``k`` uses ``rng_seed + k``.
    proxies : CollisionProxySet, optional
        Robot collision spheres.
    config : PlannerConfig, optional
        Horizon, dt and RRT settings.
    sampler : {"halton", "uniform"}, optional
        Defaults to ``config.sampler``.

    Returns
    -------
    PlannerResult
        ``SUCCESS`` with the first valid trajectory, else ``INFEASIBLE``.
    """
    if payload < 0:
        raise NegativeMassError(f"payload must be >= 0, got {payload}")
    config = config or PlannerConfig()
    max_attempts = config.max_attempts if max_attempts is None else max_attempts
    sampler = sampler or config.sampler
    proxies = proxies if proxies is not None else proxies_for(model)
    limits = KinematicLimits.from_model(model)
    checker = CollisionChecker(model, problem.scene, proxies, resolution=config.edge_resolution)

    t0 = time.perf_counter()
    reasons = []
    for attempt in range(max_attempts):
        seed = rng_seed + attempt
        try:
            if np.max(np.abs(problem.goal - problem.start)) < 1e-9:
                traj = Trajectory.constant(problem.start, config.horizon, config.dt)
            else:
                path = rrt_connect(model, problem, sampler=sampler, rng_seed=seed,
                                   timeout=config.rrt_timeout, proxies=proxies, config=config)
                path = shortcut_path(path, checker, np.random.default_rng(seed), config.shortcut_iterations)
                traj = time_parameterize(path, limits, config.dt, duration=config.duration,
                                         horizon=config.horizon)
        except (PlannerTimeoutError, InfeasibleDurationError, DegeneratePathError) as e:
            reasons.append(type(e).__name__)
            logger.debug(f"Attempt {attempt + 1}: {e}")
            continue

        report = validate(model, proxies, problem.scene, traj, payload, start=problem.start, goal=problem.goal)
        if report.valid:
            return PlannerResult(
                status=PlannerStatus.SUCCESS,
                trajectory=traj,
                planning_time=time.perf_counter() - t0,
                iterations=attempt + 1,
                diagnostics={"rejections": reasons},
            )
        reasons.append("+".join(report.failed))

    return PlannerResult(
        status=PlannerStatus.INFEASIBLE,
        planning_time=time.perf_counter() - t0,
        iterations=max_attempts,
        message=f"no valid trajectory in {max_attempts} attempts",
        diagnostics={"rejections": reasons},
    )
