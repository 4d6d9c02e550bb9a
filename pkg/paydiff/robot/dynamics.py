"""Rigid-body inverse dynamics and payload torque limits.

Torques follow

    tau = M(q) q̈ + C(q, q̇) q̇ + g(q) + f(q̇) - J(q)^T F_ext

evaluated with recursive Newton-Euler in the world frame, vectorized over
waypoints. ``F_ext`` is the wrench acting on the end-effector; the torque
returned is what the actuators must supply. A payload of mass ``m`` is a point
mass at the end-effector whose weight ``m * g`` enters as ``F_ext``.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..utils.error_handler import (
    DimensionError,
    InfeasibleAtZeroPayloadError,
    NegativeMassError,
    NonFiniteError,
)
from ..utils.logger import get_logger
from .arm_model import RobotModel, chain_batch, check_joint_array, jacobian_batch

logger = get_logger(__name__)

PAYLOAD_CAP = 18.0
TORQUE_ATOL = 1e-9


@dataclass(frozen=True)
class PayloadWrench:
    """Gravity wrench of a point-mass payload, ``[F; M]`` in the world frame."""

    mass: float
    wrench_world: np.ndarray


@dataclass
class TorqueProfile:
    """Joint torques along a trajectory and their distance to the limits.

    Attributes
    ----------
    tau : ndarray, shape (horizon, n_dof)
        Required joint torques, N·m.
    margin : ndarray, shape (horizon, n_dof)
        ``tau_max - |tau|``; negative entries are violations.
    feasible : bool
        True iff no margin is below ``-atol``.
    """

    tau: np.ndarray
    margin: np.ndarray
    feasible: bool

    @property
    def min_margin(self) -> float:
        return float(self.margin.min())


def payload_wrench(mass: float, gravity: Sequence[float] = (0.0, 0.0, -9.81)) -> PayloadWrench:
    """Gravity wrench ``m * [g; 0, 0, 0]`` of a point mass.

    Raises
    ------
    NegativeMassError
        If ``mass < 0``.
    """
    if mass < 0:
        raise NegativeMassError(f"payload mass must be >= 0, got {mass}")
    wrench = np.zeros(6)
    wrench[:3] = float(mass) * np.asarray(gravity, dtype=float)
    return PayloadWrench(mass=float(mass), wrench_world=wrench)


def friction_torque(model: RobotModel, qd: np.ndarray) -> np.ndarray:
    """Viscous plus tanh-smoothed Coulomb friction, odd in ``qd``."""
    qd = np.asarray(qd, dtype=float)
    return model.viscous * qd + model.coulomb * np.tanh(qd / model.smoothing_eps)


def _as_batch(model: RobotModel, value: Optional[np.ndarray], name: str, T: int) -> np.ndarray:
    if value is None:
        return np.zeros((T, model.n_dof))
    arr = check_joint_array(model, value, name)
    return np.broadcast_to(np.atleast_2d(arr), (T, model.n_dof))


def rnea_batch(
    model: RobotModel,
    Q: np.ndarray,
    QD: np.ndarray,
    QDD: np.ndarray,
    F_ext: Optional[np.ndarray] = None,
    gravity: Optional[np.ndarray] = None,
    friction: bool = True,
) -> np.ndarray:
    """Recursive Newton-Euler over a batch of states.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    Q, QD, QDD : ndarray, shape (T, n_dof)
        Positions, velocities and accelerations.
    F_ext : ndarray, shape (T, 6) or (6,), optional
        Wrench acting on the end-effector, world frame.
    gravity : ndarray, shape (3,), optional
        Overrides the model gravity (zeros gives pure inertial torques).
    friction : bool
        Include joint friction.

    Returns
    -------
    ndarray, shape (T, n_dof)
    """
    T, n = Q.shape
    g = model.gravity_vector if gravity is None else np.asarray(gravity, dtype=float)
    R, p, z, ee = chain_batch(model, Q)

    # Link COMs and world inertia tensors
    r_com = np.einsum("tiab,ib->tia", R, model.coms)
    I_world = np.einsum("tiab,ibc,tidc->tiad", R, model.inertias, R)

    omega = np.zeros((T, 3))
    alpha = np.zeros((T, 3))
    acc = np.broadcast_to(-g, (T, 3)).copy()
    p_prev = np.zeros((T, 3))

    forces = np.empty((T, n, 3))
    moments = np.empty((T, n, 3))
    for i in range(n):
        d = p[:, i] - p_prev
        acc = acc + np.cross(alpha, d) + np.cross(omega, np.cross(omega, d))
        zq = z[:, i] * QD[:, i, None]
        alpha = alpha + z[:, i] * QDD[:, i, None] + np.cross(omega, zq)
        omega = omega + zq
        r = r_com[:, i]
        a_com = acc + np.cross(alpha, r) + np.cross(omega, np.cross(omega, r))
        F = model.masses[i] * a_com
        Iw = np.einsum("tab,tb->ta", I_world[:, i], omega)
        N = np.einsum("tab,tb->ta", I_world[:, i], alpha) + np.cross(omega, Iw)
        forces[:, i] = F
        moments[:, i] = N + np.cross(r, F)
        p_prev = p[:, i]

    # The environment pushes on the end-effector with F_ext; the chain supplies -F_ext
    if F_ext is None:
        f_next = np.zeros((T, 3))
        n_next = np.zeros((T, 3))
    else:
        F_ext = np.broadcast_to(np.atleast_2d(F_ext), (T, 6))
        f_next = -F_ext[:, :3]
        n_next = -F_ext[:, 3:]
    p_next = ee[:, :3, 3]

    tau = np.empty((T, n))
    for i in reversed(range(n)):
        f_i = forces[:, i] + f_next
        n_i = moments[:, i] + n_next + np.cross(p_next - p[:, i], f_next)
        tau[:, i] = np.einsum("ta,ta->t", n_i, z[:, i])
        f_next, n_next, p_next = f_i, n_i, p[:, i]

    if friction:
        tau = tau + friction_torque(model, QD)
    return tau


def inverse_dynamics(
    model: RobotModel,
    q: np.ndarray,
    qd: np.ndarray,
    qdd: np.ndarray,
    f_ext: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Joint torques for one state or a batch of states.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    q, qd, qdd : array-like, shape (n_dof,) or (T, n_dof)
        Joint positions, velocities, accelerations.
    f_ext : array-like, shape (6,) or (T, 6), optional
        Wrench ``[Fx, Fy, Fz, Tx, Ty, Tz]`` acting on the end-effector,
        world frame.

    Returns
    -------
    ndarray
        Torques with the leading shape of ``q``.

    Raises
    ------
    DimensionError
        If shapes do not match ``n_dof``.
    NonFiniteError
        If any input is NaN or Inf.
    """
    q = check_joint_array(model, q, "q")
    single = q.ndim == 1
    Q = np.atleast_2d(q)
    T = Q.shape[0]
    QD = _as_batch(model, qd, "qd", T)
    QDD = _as_batch(model, qdd, "qdd", T)
    if f_ext is not None:
        f_ext = np.asarray(f_ext, dtype=float)
        if f_ext.shape[-1] != 6 or f_ext.ndim > 2:
            raise DimensionError(f"f_ext must have trailing dimension 6, got shape {f_ext.shape}")
        if not np.all(np.isfinite(f_ext)):
            raise NonFiniteError("f_ext contains non-finite values")
    tau = rnea_batch(model, Q, QD, QDD, f_ext)
    return tau[0] if single else tau


def gravity_torque(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """Static holding torque ``g(q)`` (no payload, no friction)."""
    q = check_joint_array(model, q)
    Q = np.atleast_2d(q)
    zeros = np.zeros_like(Q)
    tau = rnea_batch(model, Q, zeros, zeros, friction=False)
    return tau[0] if q.ndim == 1 else tau


def mass_matrix(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """Joint-space inertia matrix ``M(q)``.

    Column ``j`` is the torque for unit acceleration of joint ``j`` at rest
    with gravity removed, i.e. ``ID(q, 0, e_j) - g(q)``.
    """
    q = check_joint_array(model, q)
    if q.ndim != 1:
        raise DimensionError(f"q must be a single configuration, got shape {q.shape}")
    n = model.n_dof
    Q = np.tile(q, (n, 1))
    tau = rnea_batch(model, Q, np.zeros((n, n)), np.eye(n), gravity=np.zeros(3), friction=False)
    return tau.T


def kinetic_energy(model: RobotModel, q: np.ndarray, qd: np.ndarray) -> float:
    """``0.5 * qd^T M(q) qd``."""
    qd = check_joint_array(model, qd, "qd")
    return float(0.5 * qd @ mass_matrix(model, q) @ qd)


def potential_energy(model: RobotModel, q: np.ndarray) -> float:
    """Gravitational potential of the links, zero at the world origin."""
    q = check_joint_array(model, q)
    R, p, _, _ = chain_batch(model, q[None, :])
    com_world = p[0] + np.einsum("iab,ib->ia", R[0], model.coms)
    return float(-np.sum(model.masses * (com_world @ model.gravity_vector)))


def payload_torque(model: RobotModel, q: np.ndarray, mass: float) -> np.ndarray:
    """Joint torque needed to hold a point-mass payload at the end-effector.

    Equal to ``-J(q)^T F_g`` with ``F_g = payload_wrench(mass)``, linear in
    ``mass``. Accepts a single configuration or a (T, n_dof) batch.

    Raises
    ------
    NegativeMassError
        If ``mass < 0``.
    """
    wrench = payload_wrench(mass, model.gravity_vector).wrench_world
    q = check_joint_array(model, q)
    J = jacobian_batch(model, np.atleast_2d(q))
    tau = -np.einsum("tij,i->tj", J, wrench)
    return tau[0] if q.ndim == 1 else tau


def _trajectory_torques(model: RobotModel, traj) -> Tuple[np.ndarray, np.ndarray]:
    """Torques at zero payload and per-kilogram payload torques along a trajectory."""
    if traj.horizon == 0:
        raise DimensionError("trajectory has no waypoints")
    if traj.n_dof != model.n_dof:
        raise DimensionError(f"trajectory has {traj.n_dof} joints, model has {model.n_dof}")
    tau0 = rnea_batch(model, traj.q, traj.qd, traj.qdd)
    per_kg = payload_torque(model, traj.q, 1.0)
    return tau0, np.atleast_2d(per_kg)


def validate_torques(model: RobotModel, traj, mass: float, atol: float = TORQUE_ATOL) -> TorqueProfile:
    """Check ``|tau| <= tau_max`` at every waypoint for a payload ``mass``.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    traj : Trajectory
        Trajectory with consistent states.
    mass : float
        Payload, kg.
    atol : float
        Absolute slack on the limit, N·m, absorbing rounding at the boundary.

    Returns
    -------
    TorqueProfile
    """
    if mass < 0:
        raise NegativeMassError(f"payload mass must be >= 0, got {mass}")
    tau0, per_kg = _trajectory_torques(model, traj)
    tau = tau0 + mass * per_kg
    margin = model.tau_max - np.abs(tau)
    return TorqueProfile(tau=tau, margin=margin, feasible=bool(np.all(margin >= -atol)))


def max_supported_payload(model: RobotModel, traj, cap: float = PAYLOAD_CAP,
                          atol: float = TORQUE_ATOL) -> float:
    """Largest payload for which the trajectory stays within torque limits.

    Torque is affine in the payload, ``tau(m) = tau(0) + m * u``, so each joint
    and waypoint bounds ``m`` by an interval containing 0 whenever the
    trajectory is feasible without payload. The result is the smallest upper
    bound, clamped to ``[0, cap]``.

    Raises
    ------
    InfeasibleAtZeroPayloadError
        If the trajectory already violates a limit without payload.
    """
    tau0, u = _trajectory_torques(model, traj)
    tau_max = model.tau_max
    if np.any(np.abs(tau0) > tau_max + atol):
        worst = float((np.abs(tau0) - tau_max).max())
        raise InfeasibleAtZeroPayloadError(f"torque limit exceeded by {worst:.4g} N·m at zero payload")

    with np.errstate(divide="ignore", invalid="ignore"):
        upper = np.where(u > 0, (tau_max - tau0) / u, np.where(u < 0, (-tau_max - tau0) / u, np.inf))
    bound = float(np.min(upper)) if upper.size else np.inf
    return float(np.clip(bound, 0.0, cap))


def max_supported_payload_grid(model: RobotModel, traj, step: float = 1e-4,
                               cap: float = PAYLOAD_CAP, atol: float = TORQUE_ATOL,
                               chunk: int = 4096) -> float:
    """Brute-force counterpart of :func:`max_supported_payload` on a mass grid.

    Returns the largest grid mass such that every grid mass up to it passes
    the torque check.
    """
    tau0, u = _trajectory_torques(model, traj)
    if np.any(np.abs(tau0) > model.tau_max + atol):
        raise InfeasibleAtZeroPayloadError("torque limit exceeded at zero payload")
    grid = np.arange(0.0, cap + 0.5 * step, step)
    best = 0.0
    for start in range(0, grid.size, chunk):
        masses = grid[start:start + chunk]
        tau = tau0[None] + masses[:, None, None] * u[None]
        ok = np.all(np.abs(tau) <= model.tau_max + atol, axis=(1, 2))
        if not ok.all():
            first_bad = int(np.argmin(ok))
            return float(masses[first_bad - 1]) if first_bad > 0 else best
        best = float(masses[-1])
    return min(best, cap)
