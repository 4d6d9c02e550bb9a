"""Tabletop pick-and-place problem sampling."""

from typing import List, Optional

import numpy as np

from ..core.trajectory import Problem
from ..robot.arm_model import RobotModel, ee_positions, solve_position_ik
from ..robot.presets import is_planar
from ..utils.error_handler import RejectionBudgetError
from ..utils.logger import get_logger
from ..world.collision import CollisionProxySet, in_collision, proxies_for
from ..world.scene import Scene, WorkspaceSpec, default_workspace, tabletop_scene

logger = get_logger(__name__)

DEFAULT_MAX_TRIES = 5000


def _region_bounds(spec: WorkspaceSpec, region: str):
    return np.asarray(getattr(spec, f"{region}_min"), float), np.asarray(getattr(spec, f"{region}_max"), float)


def _sample_joint_space(model: RobotModel, spec: WorkspaceSpec, region: str, scene: Scene,
                        proxies: CollisionProxySet, rng: np.random.Generator, max_tries: int) -> np.ndarray:
    """Uniform joint samples, kept when the end-effector lands in ``region`` without collision."""
    for _ in range(max_tries):
        q = rng.uniform(model.q_min, model.q_max)
        if spec.contains(region, ee_positions(model, q)[0]) and not in_collision(model, proxies, scene, q):
            return q
    raise RejectionBudgetError(f"no collision-free {region} configuration in {max_tries} joint samples")


def _sample_task_space(model: RobotModel, spec: WorkspaceSpec, region: str, scene: Scene,
                       proxies: CollisionProxySet, rng: np.random.Generator, max_tries: int) -> np.ndarray:
    """Uniform end-effector targets in ``region`` solved by position IK."""
    lo, hi = _region_bounds(spec, region)
    for _ in range(max_tries):
        target = rng.uniform(lo, hi)
        q = solve_position_ik(model, target, rng=rng, restarts=3)
        if q is None or not spec.contains(region, ee_positions(model, q)[0], tol=1e-3):
            continue
        if not in_collision(model, proxies, scene, q):
            return q
    raise RejectionBudgetError(f"no collision-free {region} configuration in {max_tries} IK targets")


def sample_problem(rng: np.random.Generator, workspace_spec: Optional[WorkspaceSpec] = None,
                   model: Optional[RobotModel] = None, proxies: Optional[CollisionProxySet] = None,
                   problem_id: int = 0, max_tries: int = DEFAULT_MAX_TRIES) -> Problem:
    """Draw a pick configuration and a place configuration on the tabletop.

    Planar models sample joints directly and keep configurations whose
    end-effector lies in the region; spatial models sample the region and
    solve inverse kinematics.

    Parameters
    ----------
    rng : numpy.random.Generator
        Source of randomness; the same state gives the same problem.
    workspace_spec : WorkspaceSpec, optional
        Table, block and regions. Defaults to the layout matching ``model``.
    model : RobotModel
        Manipulator.
    proxies : CollisionProxySet, optional
        Robot collision spheres.
    problem_id : int
        Identifier stored on the problem.
    max_tries : int
        Rejection budget per endpoint.

    Returns
    -------
    Problem
        Collision-free start (pick) and goal (place) within limits.

    Raises
    ------
    RejectionBudgetError
        If an endpoint cannot be found within ``max_tries`` draws.
    """
    if model is None:
        raise ValueError("sample_problem needs a robot model")
    planar = is_planar(model)
    spec = workspace_spec or default_workspace(planar)
    scene = tabletop_scene(spec)
    proxies = proxies if proxies is not None else proxies_for(model)
    draw = _sample_joint_space if planar else _sample_task_space

    start = draw(model, spec, "pick", scene, proxies, rng, max_tries)
    goal = draw(model, spec, "place", scene, proxies, rng, max_tries)
    return Problem(start=start, goal=goal, scene=scene, problem_id=problem_id)


def problem_suite(model: RobotModel, n: int, seed: int = 0, workspace_spec: Optional[WorkspaceSpec] = None,
                  proxies: Optional[CollisionProxySet] = None) -> List[Problem]:
    """``n`` problems, problem ``i`` drawn from the ``i``-th child of ``SeedSequence(seed)``.

    The suite is the same whichever subset of indices is drawn, so
    benchmarks with different problem counts share their leading problems.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    proxies = proxies if proxies is not None else proxies_for(model)
    problems = []
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        problems.append(sample_problem(rng, workspace_spec, model, proxies=proxies, problem_id=i))
    logger.debug(f"Drew {n} problems from seed {seed}")
    return problems
