"""Steering-based kinodynamic RRT in (q, q̇, q̈) space.

Extensions run the jerk-limited profile from a tree node toward a sampled
rest configuration and stop after a fixed extension time, so nodes carry
non-zero velocities and accelerations. Every edge is checked densely for
joint limits, collisions, torque limits at the target payload and jerk
bounds before it enters the tree.
"""

import time
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..core.jerk_profile import JerkProfile, KinematicLimits, jerk_limited_profile
from ..core.trajectory import Problem, Trajectory
from ..eval.validity import validate
from ..robot.arm_model import RobotModel
from ..robot.dynamics import TORQUE_ATOL, payload_torque, rnea_batch
from ..utils.error_handler import InfeasibleDurationError, NegativeMassError
from ..utils.logger import get_logger
from ..world.collision import CollisionProxySet, collision_mask, proxies_for
from .result import PlannerConfig, PlannerResult, PlannerStatus
from .rrt_connect import JointSampler

logger = get_logger(__name__)

_CHECK_DT = 0.02


@dataclass
class _Edge:
    """Profile from the parent node, followed for ``duration`` seconds."""

    profile: JerkProfile
    duration: float


class EdgeValidator:
    """Dense validity checks along one steering edge.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    proxies : CollisionProxySet
        Robot collision spheres.
    scene : Scene
        Obstacles.
    payload : float
        Payload, kg.
    resolution : float
        Largest joint motion between two checked samples, rad.
    """

    def __init__(self, model: RobotModel, proxies: CollisionProxySet, scene, payload: float,
                 resolution: float = 0.02) -> None:
        self.model = model
        self.proxies = proxies
        self.scene = scene
        self.payload = float(payload)
        self.resolution = resolution
        self.n_checked = 0

    def sample_times(self, profile: JerkProfile, duration: float) -> np.ndarray:
        q_a = profile.evaluate([0.0])[0][0]
        q_b = profile.evaluate([duration])[0][0]
        steps = max(int(np.ceil(duration / _CHECK_DT)),
                    int(np.ceil(np.max(np.abs(q_b - q_a)) / self.resolution)), 1)
        return np.linspace(0.0, duration, steps + 1)

    def __call__(self, profile: JerkProfile, duration: float) -> bool:
        self.n_checked += 1
        model = self.model
        t = self.sample_times(profile, duration)
        q, qd, qdd = profile.evaluate(t)
        atol = 1e-9

        if np.any(q < model.q_min - atol) or np.any(q > model.q_max + atol):
            return False
        if np.any(np.abs(qd) > model.v_max + atol) or np.any(np.abs(qdd) > model.a_max + atol):
            return False
        # Smoothness: jerk between samples stays inside the jerk box
        if t.size > 1:
            jerk = np.abs(np.diff(qdd, axis=0)) / np.diff(t)[:, None]
            if np.any(jerk > model.j_max * (1.0 + 1e-6) + atol):
                return False
        if np.any(collision_mask(model, self.proxies, self.scene, q)):
            return False
        tau = rnea_batch(model, q, qd, qdd) + payload_torque(model, q, self.payload)
        return bool(np.all(np.abs(tau) <= model.tau_max + TORQUE_ATOL))


class _StateTree:
    def __init__(self, root: np.ndarray) -> None:
        self.states = [root]
        self.parents = [-1]
        self.edges: List[Optional[_Edge]] = [None]

    def add(self, state: np.ndarray, parent: int, edge: _Edge) -> int:
        self.states.append(state)
        self.parents.append(parent)
        self.edges.append(edge)
        return len(self.states) - 1

    def nearest(self, target: np.ndarray, weights: np.ndarray) -> int:
        diff = np.asarray(self.states) - target
        return int(np.argmin((diff ** 2) @ weights))

    def edge_chain(self, index: int) -> List[_Edge]:
        chain = []
        while self.parents[index] >= 0:
            chain.append(self.edges[index])
            index = self.parents[index]
        return chain[::-1]


def _sample_chain(chain: List[_Edge], dt: float) -> Trajectory:
    """Sample concatenated edges at ``k * dt``; the last sample is the final rest state."""
    starts = np.concatenate([[0.0], np.cumsum([e.duration for e in chain])])
    total = starts[-1]
    horizon = max(int(np.ceil(total / dt - 1e-9)) + 1, 2)
    t = np.minimum(np.arange(horizon) * dt, total)
    n = chain[0].profile.n_dof
    q, qd, qdd = np.empty((horizon, n)), np.empty((horizon, n)), np.empty((horizon, n))
    k = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(chain) - 1)
    for i, edge in enumerate(chain):
        mask = k == i
        if np.any(mask):
            q[mask], qd[mask], qdd[mask] = edge.profile.evaluate(t[mask] - starts[i])
    return Trajectory.from_components(q, qd, qdd, dt)


def kinodynamic_rrt(model: RobotModel, problem: Problem, payload: float, rng_seed: int = 0,
                    timeout: Optional[float] = None, proxies: Optional[CollisionProxySet] = None,
                    config: Optional[PlannerConfig] = None) -> PlannerResult:
    """Grow a tree of jerk-limited edges from the start rest state to the goal.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    problem : Problem
        Start, goal and scene.
    payload : float
        Payload every edge must support, kg.
    rng_seed : int
        Seed of the configuration sampler and goal-bias draws.
    timeout : float, optional
        Wall-clock budget, s. Defaults to ``config.kino_timeout``.
    proxies : CollisionProxySet, optional
        Robot collision spheres.
    config : PlannerConfig, optional
        Extension time, goal bias, metric weights and budgets.

    Returns
    -------
    PlannerResult
        ``SUCCESS`` with a trajectory sampled at ``config.dt`` that ends at
        rest on the goal, or ``TIMEOUT`` when the budget runs out.
    """
    if payload < 0:
        raise NegativeMassError(f"payload must be >= 0, got {payload}")
    config = config or PlannerConfig()
    timeout = config.kino_timeout if timeout is None else timeout
    proxies = proxies if proxies is not None else proxies_for(model)
    limits = KinematicLimits.from_model(model)
    n = model.n_dof
    t0 = time.perf_counter()

    if np.max(np.abs(problem.goal - problem.start)) <= config.goal_tolerance:
        traj = Trajectory.constant(problem.start, config.horizon, config.dt)
        return PlannerResult(PlannerStatus.SUCCESS, traj, time.perf_counter() - t0, 0)

    rng = np.random.default_rng(rng_seed)
    sampler = JointSampler(model.q_min, model.q_max, "uniform", int(rng.integers(2 ** 31)))
    edge_ok = EdgeValidator(model, proxies, problem.scene, payload, config.edge_resolution)
    weights = np.concatenate([np.ones(n), np.full(n, config.velocity_weight),
                              np.full(n, config.acceleration_weight)])
    tree = _StateTree(problem.start_state)
    zeros = np.zeros(n)

    def steer(state: np.ndarray, target: np.ndarray) -> Optional[JerkProfile]:
        try:
            return jerk_limited_profile(state[:n], state[n:2 * n], state[2 * n:], target, limits)
        except InfeasibleDurationError:
            return None

    def try_goal(index: int) -> Optional[Trajectory]:
        profile = steer(tree.states[index], problem.goal)
        if profile is None or not edge_ok(profile, profile.duration):
            return None
        chain = tree.edge_chain(index) + [_Edge(profile, profile.duration)]
        traj = _sample_chain(chain, config.dt)
        report = validate(model, proxies, problem.scene, traj, payload, start=problem.start, goal=problem.goal)
        if not report.valid:
            logger.debug(f"Goal connection rejected by the validity gate: {report.failed}")
            return None
        return traj

    traj = try_goal(0)
    iteration = 0
    while traj is None:
        if iteration >= config.kino_max_iterations or time.perf_counter() - t0 > timeout:
            break
        iteration += 1
        target = problem.goal if rng.random() < config.goal_bias else sampler.sample()
        near = tree.nearest(np.concatenate([target, zeros, zeros]), weights)
        profile = steer(tree.states[near], target)
        if profile is None or profile.duration <= 0.0:
            continue
        duration = min(config.extension_time, profile.duration)
        if not edge_ok(profile, duration):
            continue
        q, qd, qdd = profile.evaluate([duration])
        new = tree.add(np.concatenate([q[0], qd[0], qdd[0]]), near, _Edge(profile, duration))
        traj = try_goal(new)

    elapsed = time.perf_counter() - t0
    if traj is not None:
        logger.debug(f"Kinodynamic RRT solved in {iteration} iterations ({len(tree.states)} nodes)")
        return PlannerResult(PlannerStatus.SUCCESS, traj, elapsed, iteration,
                             diagnostics={"nodes": len(tree.states), "edges_checked": edge_ok.n_checked})
    return PlannerResult(PlannerStatus.TIMEOUT, None, elapsed, iteration,
                         message=f"no solution after {iteration} iterations",
                         diagnostics={"nodes": len(tree.states), "edges_checked": edge_ok.n_checked})
