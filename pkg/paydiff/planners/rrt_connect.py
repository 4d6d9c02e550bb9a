"""Bidirectional RRT (RRT-Connect) in joint space.

Samples come from a Halton sequence (deterministic, low dispersion) or from a
seeded uniform generator. Edges are collision-checked at a fixed joint-space
resolution.
"""

import time
from typing import List, Optional

import numpy as np
from scipy.stats import qmc

from ..core.trajectory import Problem
from ..robot.arm_model import RobotModel
from ..utils.error_handler import PlannerTimeoutError
from ..utils.logger import get_logger
from ..world.collision import CollisionChecker, CollisionProxySet
from .result import PlannerConfig

logger = get_logger(__name__)

SAMPLERS = ("halton", "uniform")

_TRAPPED, _ADVANCED, _REACHED = 0, 1, 2


class JointSampler:
    """Configuration sampler over the joint box.

    Parameters
    ----------
    lower, upper : ndarray
        Joint limits.
    kind : {"halton", "uniform"}
        Sequence type.
    seed : int
        Uniform seed, or the number of Halton points skipped.
    """

    def __init__(self, lower: np.ndarray, upper: np.ndarray, kind: str = "halton", seed: int = 0) -> None:
        if kind not in SAMPLERS:
            raise ValueError(f"unknown sampler {kind!r}, choose from {SAMPLERS}")
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.kind = kind
        if kind == "halton":
            self._halton = qmc.Halton(d=self.lower.size, scramble=False)
            # The first unscrambled point is the origin of the unit cube
            self._halton.fast_forward(1 + int(seed))
        else:
            self._rng = np.random.default_rng(seed)

    def sample(self) -> np.ndarray:
        if self.kind == "halton":
            unit = self._halton.random(1)[0]
        else:
            unit = self._rng.random(self.lower.size)
        return self.lower + unit * (self.upper - self.lower)


class _Tree:
    def __init__(self, root: np.ndarray) -> None:
        self.nodes = np.empty((256, root.size))
        self.nodes[0] = root
        self.parents = [-1]
        self.size = 1

    def add(self, q: np.ndarray, parent: int) -> int:
        if self.size == self.nodes.shape[0]:
            self.nodes = np.concatenate([self.nodes, np.empty_like(self.nodes)])
        self.nodes[self.size] = q
        self.parents.append(parent)
        self.size += 1
        return self.size - 1

    def nearest(self, q: np.ndarray) -> int:
        diff = self.nodes[:self.size] - q
        return int(np.argmin(np.einsum("ij,ij->i", diff, diff)))

    def branch(self, index: int) -> List[np.ndarray]:
        """Nodes from the root to ``index``."""
        out = []
        while index >= 0:
            out.append(self.nodes[index].copy())
            index = self.parents[index]
        return out[::-1]


class RRTConnectPlanner:
    """RRT-Connect over a collision checker.

    Parameters
    ----------
    checker : CollisionChecker
        State and edge validity.
    step_size : float
        Maximum joint-space extension per step (inf-norm), rad.
    """

    def __init__(self, checker: CollisionChecker, step_size: float = 0.3) -> None:
        self.checker = checker
        self.step_size = step_size
        self.iterations = 0

    def _steer(self, q_from: np.ndarray, q_to: np.ndarray) -> np.ndarray:
        delta = q_to - q_from
        dist = np.max(np.abs(delta))
        if dist <= self.step_size:
            return q_to.copy()
        return q_from + delta * (self.step_size / dist)

    def _extend(self, tree: _Tree, q: np.ndarray):
        near = tree.nearest(q)
        q_near = tree.nodes[near]
        q_new = self._steer(q_near, q)
        if not self.checker.edge_valid(q_near, q_new):
            return _TRAPPED, -1
        index = tree.add(q_new, near)
        reached = np.max(np.abs(q_new - q)) < 1e-12
        return (_REACHED if reached else _ADVANCED), index

    def _connect(self, tree: _Tree, q: np.ndarray):
        while True:
            status, index = self._extend(tree, q)
            if status != _ADVANCED:
                return status, index

    def solve(self, start: np.ndarray, goal: np.ndarray, sampler: JointSampler,
              max_iters: int = 4000, time_limit: Optional[float] = None) -> Optional[List[np.ndarray]]:
        """Search for a collision-free path; None when the budget runs out.

        Only ``max_iters`` bounds the search unless ``time_limit`` is given; a wall-clock
        limit makes the outcome depend on machine load.
        """
        start = np.asarray(start, dtype=float)
        goal = np.asarray(goal, dtype=float)
        if np.max(np.abs(goal - start)) < 1e-12 or self.checker.edge_valid(start, goal):
            return [start.copy(), goal.copy()]

        tree_a, tree_b = _Tree(start), _Tree(goal)
        a_is_start = True
        t0 = time.perf_counter()
        for self.iterations in range(1, max_iters + 1):
            if time_limit is not None and time.perf_counter() - t0 > time_limit:
                break
            q_rand = sampler.sample()
            status, index = self._extend(tree_a, q_rand)
            if status != _TRAPPED:
                q_new = tree_a.nodes[index]
                status_b, index_b = self._connect(tree_b, q_new)
                if status_b == _REACHED:
                    branch_a = tree_a.branch(index)
                    branch_b = tree_b.branch(index_b)[::-1][1:]
                    path = branch_a + branch_b
                    return path if a_is_start else path[::-1]
            tree_a, tree_b = tree_b, tree_a
            a_is_start = not a_is_start
        return None


def shortcut_path(path: List[np.ndarray], checker: CollisionChecker, rng: np.random.Generator,
                  iterations: int = 60) -> List[np.ndarray]:
    """Drop intermediate waypoints whenever the direct edge is free."""
    path = [np.asarray(q, dtype=float) for q in path]
    for _ in range(iterations):
        if len(path) <= 2:
            break
        i, j = sorted(rng.choice(len(path), size=2, replace=False))
        if j - i < 2:
            continue
        if checker.edge_valid(path[i], path[j]):
            path = path[:i + 1] + path[j:]
    return path


def rrt_connect(model: RobotModel, problem: Problem, sampler: str = "halton", rng_seed: int = 0,
                timeout: Optional[float] = None, proxies: Optional[CollisionProxySet] = None,
                config: Optional[PlannerConfig] = None) -> List[np.ndarray]:
    """Collision-free joint-space path from ``problem.start`` to ``problem.goal``.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    problem : Problem
        Start, goal and scene.
    sampler : {"halton", "uniform"}
        Deterministic low-dispersion or seeded uniform sampling.
    rng_seed : int
        Seed of the uniform sampler, or Halton offset.
    timeout : float, optional
        Wall-clock budget, s. None (default) leaves the iteration budget as the only cutoff,
        which keeps the result a function of the sampler and seed.
    proxies : CollisionProxySet, optional
        Defaults to the standard proxies of ``model``.
    config : PlannerConfig, optional
        Step size, edge resolution and iteration budget.

    Returns
    -------
    list of ndarray
        Waypoints, first ``start``, last ``goal``.

    Raises
    ------
    PlannerTimeoutError
        If no path was found within the iteration or time budget.
    """
    config = config or PlannerConfig()
    checker = CollisionChecker(model, problem.scene, proxies, resolution=config.edge_resolution)
    joint_sampler = JointSampler(model.q_min, model.q_max, sampler, rng_seed)
    planner = RRTConnectPlanner(checker, step_size=config.step_size)
    path = planner.solve(problem.start, problem.goal, joint_sampler,
                         max_iters=config.rrt_max_iterations, time_limit=timeout)
    if path is None:
        raise PlannerTimeoutError(f"RRT-Connect found no path in {planner.iterations} iterations")
    logger.debug(f"RRT-Connect path with {len(path)} waypoints after {planner.iterations} iterations")
    return path
