"""Reverse diffusion: DDPM and DDIM samplers with inpainting, guidance and clamping.

Sampling runs in normalized state space, where the joint, velocity and
acceleration limits map to ``[-1, 1]``. At every denoising step the update
is followed by optional collision-gradient guidance on the position
channels, clamping to the limits, and inpainting of the start and goal
states (velocity and acceleration zero). The returned trajectory is
denormalized with its endpoints written exactly.
"""

import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.trajectory import Problem, Trajectory
from ..eval.validity import validate
from ..planners.result import PlannerResult, PlannerStatus
from ..robot.arm_model import RobotModel
from ..utils.config import dataclass_from_dict, dataclass_to_dict
from ..utils.error_handler import DimensionError
from ..utils.logger import get_logger
from ..world.collision import CollisionProxySet, collision_cost_gradient, proxies_for
from ..world.scene import Scene
from .encoding import Phase
from .trainer import DiffusionCheckpoint

logger = get_logger(__name__)


@dataclass
class SamplerConfig:
    """Sampler choice and its knobs.

    ``steps`` is the number of DDIM steps; DDPM always runs all ``K``
    schedule steps.
    """

    method: str = "ddim"
    steps: int = 5
    eta: float = 0.0
    guidance_weight: float = 0.1
    n_candidates: int = 1

    def __post_init__(self) -> None:
        if self.method not in ("ddpm", "ddim"):
            raise ValueError(f"method must be 'ddpm' or 'ddim', got {self.method!r}")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")

    def to_dict(self) -> Dict[str, Any]:
        return dataclass_to_dict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SamplerConfig":
        return dataclass_from_dict(cls, data)


class _Guidance:
    """Collision-cost gradient on normalized position channels."""

    def __init__(self, ckpt: DiffusionCheckpoint, scene: Optional[Scene], weight: float,
                 model: Optional[RobotModel], proxies: Optional[CollisionProxySet]) -> None:
        self.active = weight > 0 and scene is not None and bool(scene.obstacles)
        self.weight = weight
        self.scene = scene
        self.model = model
        self.n = ckpt.n_dof
        self.stats = ckpt.normalization
        if self.active:
            if model is None:
                raise ValueError("guidance on a scene needs the robot model")
            ckpt.check_model(model)
            self.proxies = proxies if proxies is not None else proxies_for(model)

    def apply(self, x: np.ndarray, scale: float) -> np.ndarray:
        if not self.active or scale <= 0:
            return x
        n = self.n
        half = self.stats.half_range[:n]
        for b in range(x.shape[0]):
            q = self.stats.denormalize(x[b])[:, :n]
            grad = collision_cost_gradient(self.model, self.proxies, self.scene, q)
            x[b, :, :n] -= self.weight * scale * grad * half
        return x


def _endpoint_states(ckpt: DiffusionCheckpoint, start: np.ndarray, goal: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n = ckpt.n_dof
    lower = ckpt.normalization.center - ckpt.normalization.half_range
    upper = ckpt.normalization.center + ckpt.normalization.half_range
    out = []
    for name, value in (("start", start), ("goal", goal)):
        value = np.asarray(value, dtype=float).reshape(-1)
        if value.size not in (n, 3 * n):
            raise DimensionError(f"{name} must have {n} positions or {3 * n} state entries, got {value.size}")
        state = np.zeros(3 * n)
        state[:n] = value[:n]
        if np.any(state[:n] < lower[:n] - 1e-12) or np.any(state[:n] > upper[:n] + 1e-12):
            raise ValueError(f"{name} configuration lies outside the joint limits")
        out.append(state)
    return out[0], out[1]


def _inpaint(x: np.ndarray, start_n: np.ndarray, goal_n: np.ndarray) -> np.ndarray:
    x[:, 0, :] = start_n
    x[:, -1, :] = goal_n
    return x


def _finish(ckpt: DiffusionCheckpoint, x: np.ndarray, start: np.ndarray, goal: np.ndarray) -> List[Trajectory]:
    lower = ckpt.normalization.center - ckpt.normalization.half_range
    upper = ckpt.normalization.center + ckpt.normalization.half_range
    trajectories = []
    for b in range(x.shape[0]):
        states = np.clip(ckpt.normalization.denormalize(x[b]), lower, upper)
        states[0] = start
        states[-1] = goal
        trajectories.append(Trajectory(dt=ckpt.dt, states=states))
    return trajectories


def _step_plan(ckpt: DiffusionCheckpoint, method: str, steps: int) -> Sequence[Tuple[int, int]]:
    if method == "ddpm":
        return [(k, k - 1) for k in range(ckpt.schedule.n_steps, 0, -1)]
    timesteps = ckpt.schedule.ddim_timesteps(steps)
    return list(zip(timesteps[:-1], timesteps[1:]))


def sample_trajectories(
    ckpt: DiffusionCheckpoint,
    payload: float,
    start: np.ndarray,
    goal: np.ndarray,
    config: Optional[SamplerConfig] = None,
    rng: Optional[np.random.Generator] = None,
    scene: Optional[Scene] = None,
    model: Optional[RobotModel] = None,
    proxies: Optional[CollisionProxySet] = None,
    n_samples: int = 1,
) -> List[Trajectory]:
    """Draw ``n_samples`` trajectories from ``start`` to ``goal`` conditioned on ``payload``.

    Parameters
    ----------
    ckpt : DiffusionCheckpoint
        Trained denoiser.
    payload : float
        Target payload, kg, in ``[0, 18]``.
    start, goal : array-like
        Joint positions (or full rest states) of the endpoints.
    config : SamplerConfig, optional
        DDPM or DDIM, step count, ``eta`` and guidance weight.
    rng : numpy.random.Generator, optional
        Source of the initial noise and of the stochastic updates.
    scene : Scene, optional
        Obstacles for gradient guidance.
    model : RobotModel, optional
        Needed when guidance is active.
    proxies : CollisionProxySet, optional
        Collision spheres; built from ``model`` when omitted.
    n_samples : int
        Batch size.

    Returns
    -------
    list of Trajectory
    """
    config = config or SamplerConfig()
    rng = rng or np.random.default_rng()
    schedule = ckpt.schedule
    start_state, goal_state = _endpoint_states(ckpt, start, goal)
    start_n = ckpt.normalization.normalize(start_state)
    goal_n = ckpt.normalization.normalize(goal_state)
    cond = np.repeat(ckpt.encoding.encode(payload, Phase.INFER)[None, :], n_samples, axis=0)
    guidance = _Guidance(ckpt, scene, config.guidance_weight, model, proxies)
    sigma_top = schedule.posterior_std(schedule.n_steps)

    shape = (n_samples, ckpt.horizon, 3 * ckpt.n_dof)
    x = _inpaint(rng.standard_normal(shape), start_n, goal_n)
    for k, k_prev in _step_plan(ckpt, config.method, config.steps):
        eps = ckpt.network.predict(x, np.full(n_samples, k), cond).astype(float)
        if config.method == "ddpm":
            alpha, gamma, sigma = schedule.update_coefficients(k)
            noise = rng.standard_normal(shape) if k > 1 else 0.0
            x = alpha * (x - gamma * eps + sigma * noise)
        else:
            ab, ab_prev = schedule.alpha_bar(k), schedule.alpha_bar(k_prev)
            sigma = schedule.ddim_sigma(k, k_prev, config.eta)
            x0 = (x - np.sqrt(1.0 - ab) * eps) / np.sqrt(ab)
            x = np.sqrt(ab_prev) * x0 + np.sqrt(max(1.0 - ab_prev - sigma ** 2, 0.0)) * eps
            if sigma > 0:
                x = x + sigma * rng.standard_normal(shape)
        x = guidance.apply(x, schedule.posterior_std(k) / sigma_top)
        x = _inpaint(np.clip(x, -1.0, 1.0), start_n, goal_n)
    return _finish(ckpt, x, start_state, goal_state)


def ddpm_sample(ckpt: DiffusionCheckpoint, payload: float, start: np.ndarray, goal: np.ndarray,
                scene: Optional[Scene] = None, guidance_weight: float = 0.1,
                rng: Optional[np.random.Generator] = None, model: Optional[RobotModel] = None,
                proxies: Optional[CollisionProxySet] = None) -> Trajectory:
    """Ancestral sampling over all schedule steps."""
    config = SamplerConfig(method="ddpm", guidance_weight=guidance_weight)
    return sample_trajectories(ckpt, payload, start, goal, config, rng, scene, model, proxies)[0]


def ddim_sample(ckpt: DiffusionCheckpoint, payload: float, start: np.ndarray, goal: np.ndarray,
                scene: Optional[Scene] = None, guidance_weight: float = 0.1, steps: int = 5, eta: float = 0.0,
                rng: Optional[np.random.Generator] = None, model: Optional[RobotModel] = None,
                proxies: Optional[CollisionProxySet] = None) -> Trajectory:
    """Implicit sampling over ``steps`` evenly spaced schedule steps; deterministic for ``eta = 0``."""
    config = SamplerConfig(method="ddim", steps=steps, eta=eta, guidance_weight=guidance_weight)
    return sample_trajectories(ckpt, payload, start, goal, config, rng, scene, model, proxies)[0]


def diffusion_plan(ckpt: DiffusionCheckpoint, model: RobotModel, problem: Problem, payload: float,
                   config: Optional[SamplerConfig] = None, rng_seed: int = 0,
                   proxies: Optional[CollisionProxySet] = None) -> PlannerResult:
    """Sample candidates for ``problem`` and judge them with the validity gate.

    The first candidate decides the status; every candidate is kept in
    ``candidates`` and ``diagnostics["best_of_n"]`` records whether any of
    them is valid. ``planning_time`` covers sampling only.
    """
    config = config or SamplerConfig()
    proxies = proxies if proxies is not None else proxies_for(model)
    rng = np.random.default_rng(rng_seed)
    t0 = time.perf_counter()
    candidates = sample_trajectories(ckpt, payload, problem.start, problem.goal, config, rng,
                                     problem.scene, model, proxies, n_samples=config.n_candidates)
    elapsed = time.perf_counter() - t0

    reports = [validate(model, proxies, problem.scene, traj, payload, start=problem.start, goal=problem.goal)
               for traj in candidates]
    first = reports[0]
    diagnostics = {
        "best_of_n": any(r.valid for r in reports),
        "n_valid": sum(r.valid for r in reports),
        "failed_checks": first.failed,
        "sampler": config.method,
    }
    if first.valid:
        return PlannerResult(PlannerStatus.SUCCESS, candidates[0], elapsed, len(candidates),
                             candidates=candidates, diagnostics=diagnostics)
    return PlannerResult(PlannerStatus.INFEASIBLE, None, elapsed, len(candidates),
                         message=f"invalid sample ({', '.join(first.failed)})", candidates=candidates,
                         diagnostics=diagnostics)
