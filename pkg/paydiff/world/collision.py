"""Sphere-proxy collision checks and the differentiable collision cost.

Each link carries a few spheres placed along the segment to the next joint
(or to the end-effector for the last link). A proxy collides when its
clearance to an obstacle, ``sdf(center) - radius``, is below the scene
margin. The cost of a trajectory is

    sum_t sum_proxies sum_obstacles max(0, radius + margin - sdf)^2

and its gradient flows to the joint positions through the proxy Jacobians.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..robot.arm_model import RobotModel, chain_batch, check_joint_array
from ..utils.error_handler import ModelValidationError
from ..utils.logger import get_logger
from .scene import Scene

logger = get_logger(__name__)


@dataclass(frozen=True)
class CollisionProxySet:
    """Spheres rigidly attached to links.

    Attributes
    ----------
    link_index : ndarray of int, shape (k,)
        Joint frame each sphere moves with.
    local_offset : ndarray, shape (k, 3)
        Sphere centers in the joint frame.
    radius : ndarray, shape (k,)
        Sphere radii, m.
    """

    link_index: np.ndarray
    local_offset: np.ndarray
    radius: np.ndarray

    def __len__(self) -> int:
        return int(self.link_index.shape[0])

    def validate(self, model: RobotModel) -> None:
        if np.any(self.link_index < 0) or np.any(self.link_index >= model.n_dof):
            raise ModelValidationError("proxies.link_index", f"must be in [0, {model.n_dof})")
        if np.any(self.radius <= 0):
            raise ModelValidationError("proxies.radius", "must be > 0")


def proxies_for(model: RobotModel, radius: float = 0.04, per_link: int = 3) -> CollisionProxySet:
    """Place ``per_link`` spheres along every link, ending at the next joint.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    radius : float
        Sphere radius, m.
    per_link : int
        Spheres per link, at fractions ``1/per_link, ..., 1`` of the link.

    Returns
    -------
    CollisionProxySet
    """
    index, offsets = [], []
    for i in range(model.n_dof):
        if i + 1 < model.n_dof:
            # Next joint origin expressed in frame i
            tip = np.asarray(model.joints[i + 1].origin_xyz, dtype=float)
        else:
            tip = np.asarray(model.ee_xyz, dtype=float)
        if np.linalg.norm(tip) < 1e-9:
            continue
        for k in range(per_link):
            index.append(i)
            offsets.append(tip * (k + 1) / per_link)
    proxies = CollisionProxySet(
        link_index=np.asarray(index, dtype=int),
        local_offset=np.asarray(offsets, dtype=float).reshape(-1, 3),
        radius=np.full(len(index), float(radius)),
    )
    proxies.validate(model)
    return proxies


def proxy_centers(model: RobotModel, proxies: CollisionProxySet, Q: np.ndarray) -> Tuple[np.ndarray, tuple]:
    """World sphere centers for a (T, n_dof) batch, shape (T, k, 3), plus the chain."""
    Q = np.atleast_2d(Q)
    chain = chain_batch(model, Q)
    R, p = chain[0], chain[1]
    li = proxies.link_index
    centers = p[:, li] + np.einsum("tkab,kb->tka", R[:, li], proxies.local_offset)
    return centers, chain


def _penetration(model: RobotModel, proxies: CollisionProxySet, scene: Scene, Q: np.ndarray):
    centers, chain = proxy_centers(model, proxies, Q)
    dist, grad = scene.signed_distances(centers)
    slack = proxies.radius[None, :, None] + scene.margin - dist
    return centers, chain, slack, grad


def clearance(model: RobotModel, proxies: CollisionProxySet, scene: Scene, Q: np.ndarray) -> np.ndarray:
    """Smallest ``sdf - radius`` over proxies and obstacles per configuration, shape (T,)."""
    Q = check_joint_array(model, Q)
    if not scene.obstacles or len(proxies) == 0:
        return np.full(np.atleast_2d(Q).shape[0], np.inf)
    centers, _ = proxy_centers(model, proxies, Q)
    dist, _ = scene.signed_distances(centers)
    return (dist - proxies.radius[None, :, None]).min(axis=(1, 2))


def in_collision(model: RobotModel, proxies: CollisionProxySet, scene: Scene, q: np.ndarray) -> bool:
    """True iff any proxy sphere comes closer than the margin to any obstacle."""
    return bool(np.any(collision_mask(model, proxies, scene, np.atleast_2d(q))))


def collision_mask(model: RobotModel, proxies: CollisionProxySet, scene: Scene, Q: np.ndarray) -> np.ndarray:
    """Per-configuration collision flags for a (T, n_dof) batch."""
    return clearance(model, proxies, scene, Q) < scene.margin


def _states_positions(traj) -> np.ndarray:
    return traj.q if hasattr(traj, "q") else np.atleast_2d(traj)


def waypoint_collision_costs(model: RobotModel, proxies: CollisionProxySet, scene: Scene, traj) -> np.ndarray:
    """Squared-hinge penetration cost of each waypoint, shape (T,)."""
    Q = np.atleast_2d(check_joint_array(model, _states_positions(traj)))
    if not scene.obstacles or len(proxies) == 0:
        return np.zeros(Q.shape[0])
    _, _, slack, _ = _penetration(model, proxies, scene, Q)
    return np.sum(np.maximum(slack, 0.0) ** 2, axis=(1, 2))


def collision_cost(model: RobotModel, proxies: CollisionProxySet, scene: Scene, traj) -> float:
    """Squared-hinge penetration cost of a trajectory (or a (T, n_dof) array of positions).

    Zero iff every proxy keeps at least ``margin`` clearance at every waypoint.
    """
    return float(np.sum(waypoint_collision_costs(model, proxies, scene, traj)))


def collision_cost_gradient(model: RobotModel, proxies: CollisionProxySet, scene: Scene,
                            traj) -> np.ndarray:
    """Gradient of :func:`collision_cost` with respect to joint positions.

    Returns
    -------
    ndarray, shape (horizon, n_dof)
        Position gradient per waypoint; velocity and acceleration channels
        do not enter the cost, so their gradient is zero.
    """
    Q = np.atleast_2d(check_joint_array(model, _states_positions(traj)))
    T, n = Q.shape
    if not scene.obstacles or len(proxies) == 0:
        return np.zeros((T, n))
    centers, chain, slack, grad = _penetration(model, proxies, scene, Q)
    _, p, z, _ = chain

    hinge = np.maximum(slack, 0.0)
    # d cost / d center = sum_obstacles -2 * hinge * grad_sdf
    dc = -2.0 * np.einsum("tko,tkoa->tka", hinge, grad)

    out = np.zeros((T, n))
    li = proxies.link_index
    for j in range(n):
        affected = li >= j
        if not np.any(affected):
            continue
        lever = centers[:, affected] - p[:, j, None, :]
        dcenter_dq = np.cross(z[:, j, None, :], lever)
        out[:, j] = np.einsum("tka,tka->t", dc[:, affected], dcenter_dq)
    return out


def path_in_collision(model: RobotModel, proxies: CollisionProxySet, scene: Scene,
                      q_a: np.ndarray, q_b: np.ndarray, resolution: float = 0.02) -> bool:
    """Check a straight joint-space edge at a fixed joint-space resolution (rad)."""
    q_a = np.asarray(q_a, dtype=float)
    q_b = np.asarray(q_b, dtype=float)
    steps = max(1, int(np.ceil(np.max(np.abs(q_b - q_a)) / resolution)))
    s = np.linspace(0.0, 1.0, steps + 1)[:, None]
    return bool(np.any(collision_mask(model, proxies, scene, q_a + s * (q_b - q_a))))


class CollisionChecker:
    """Bundles a model, proxies and scene for repeated planner queries."""

    def __init__(self, model: RobotModel, scene: Scene, proxies: Optional[CollisionProxySet] = None,
                 resolution: float = 0.02) -> None:
        self.model = model
        self.scene = scene
        self.proxies = proxies if proxies is not None else proxies_for(model)
        self.resolution = resolution
        self.n_checks = 0

    def state_valid(self, q: np.ndarray) -> bool:
        self.n_checks += 1
        return self.model.within_joint_limits(q, 1e-12) and not in_collision(
            self.model, self.proxies, self.scene, q)

    def states_valid(self, Q: np.ndarray) -> np.ndarray:
        Q = np.atleast_2d(Q)
        self.n_checks += Q.shape[0]
        within = np.all((Q >= self.model.q_min - 1e-12) & (Q <= self.model.q_max + 1e-12), axis=1)
        return within & ~collision_mask(self.model, self.proxies, self.scene, Q)

    def edge_valid(self, q_a: np.ndarray, q_b: np.ndarray) -> bool:
        self.n_checks += 1
        return not path_in_collision(self.model, self.proxies, self.scene, q_a, q_b, self.resolution)
