"""Kinematic description of serial revolute-joint manipulators.

A model is a chain of joints, each given by a fixed parent-to-joint transform
(translation + roll/pitch/yaw) followed by a rotation about a unit axis. The
world transform of joint ``i`` is

    T_i = T_{i-1} @ origin_i @ Rot(axis_i, q_i)

and the end-effector pose is ``T_n @ ee_offset``.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from ..utils.error_handler import DimensionError, ModelValidationError, NonFiniteError
from ..utils.logger import get_logger

logger = get_logger(__name__)

Vec3 = Tuple[float, float, float]


def rpy_matrix(rpy: Sequence[float]) -> np.ndarray:
    """Rotation matrix for fixed-axis roll/pitch/yaw, ``R = Rz @ Ry @ Rx``."""
    return Rotation.from_euler("xyz", np.asarray(rpy, dtype=float)).as_matrix()


def make_transform(xyz: Sequence[float], rpy: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
    """Homogeneous 4x4 transform from a translation and roll/pitch/yaw."""
    T = np.eye(4)
    T[:3, :3] = rpy_matrix(rpy)
    T[:3, 3] = np.asarray(xyz, dtype=float)
    return T


def axis_rotations(axis: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Rotation matrices about ``axis`` for a batch of angles, shape (T, 3, 3)."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    return Rotation.from_rotvec(np.outer(angles, axis)).as_matrix().reshape(-1, 3, 3)


@dataclass(frozen=True)
class LinkInertia:
    """Inertial parameters of one link, expressed in the joint frame."""

    mass: float
    com: Vec3 = (0.0, 0.0, 0.0)
    inertia: Tuple[Vec3, Vec3, Vec3] = ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))


@dataclass(frozen=True)
class JointLimits:
    """Kinematic and torque limits of one joint (rad, rad/s, rad/s², rad/s³, N·m)."""

    q_min: float
    q_max: float
    v_max: float
    a_max: float
    j_max: float
    tau_max: float


@dataclass(frozen=True)
class FrictionParams:
    """Viscous plus tanh-smoothed Coulomb friction of one joint."""

    viscous: float = 0.0
    coulomb: float = 0.0
    smoothing_eps: float = 0.05


@dataclass(frozen=True)
class Joint:
    """Revolute joint: fixed origin relative to the parent frame and a rotation axis."""

    name: str
    origin_xyz: Vec3 = (0.0, 0.0, 0.0)
    origin_rpy: Vec3 = (0.0, 0.0, 0.0)
    axis: Vec3 = (0.0, 0.0, 1.0)


@dataclass(frozen=True)
class Frames:
    """Result of forward kinematics for one configuration.

    Attributes
    ----------
    transforms : ndarray, shape (n_dof, 4, 4)
        World transform of every joint frame (after the joint rotation).
    ee_pose : ndarray, shape (4, 4)
        World transform of the end-effector.
    axes : ndarray, shape (n_dof, 3)
        World-frame joint axes.
    """

    transforms: np.ndarray
    ee_pose: np.ndarray
    axes: np.ndarray

    @property
    def positions(self) -> np.ndarray:
        """World positions of the joint origins, shape (n_dof, 3)."""
        return self.transforms[:, :3, 3]

    @property
    def ee_position(self) -> np.ndarray:
        return self.ee_pose[:3, 3]


@dataclass(frozen=True)
class RobotModel:
    """Immutable serial manipulator description.

    Parameters
    ----------
    name : str
        Model identifier.
    joints : tuple of Joint
        Chain from base to tip.
    links : tuple of LinkInertia
        Link ``i`` moves with joint ``i``.
    limits : tuple of JointLimits
        Per-joint limits.
    friction : tuple of FrictionParams
        Per-joint friction.
    ee_xyz, ee_rpy : tuple of float
        Fixed offset of the end-effector from the last joint frame.
    gravity : tuple of float
        Gravity vector in the world frame, m/s².
    nominal_payload : float
        Manufacturer-style payload rating, kg.

    Raises
    ------
    ModelValidationError
        If any invariant is violated; the error names the offending field.
    """

    name: str
    joints: Tuple[Joint, ...]
    links: Tuple[LinkInertia, ...]
    limits: Tuple[JointLimits, ...]
    friction: Tuple[FrictionParams, ...]
    ee_xyz: Vec3 = (0.0, 0.0, 0.0)
    ee_rpy: Vec3 = (0.0, 0.0, 0.0)
    gravity: Vec3 = (0.0, 0.0, -9.81)
    nominal_payload: float = 0.0
    description: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        validate_model(self)

    @property
    def n_dof(self) -> int:
        return len(self.joints)

    @property
    def state_dim(self) -> int:
        """Dimension of the full state (q, q̇, q̈)."""
        return 3 * self.n_dof

    # Cached array views used by the vectorized kinematics and dynamics.

    @cached_property
    def origins(self) -> np.ndarray:
        return np.stack([make_transform(j.origin_xyz, j.origin_rpy) for j in self.joints])

    @cached_property
    def axes(self) -> np.ndarray:
        return np.array([j.axis for j in self.joints], dtype=float)

    @cached_property
    def ee_offset(self) -> np.ndarray:
        return make_transform(self.ee_xyz, self.ee_rpy)

    @cached_property
    def gravity_vector(self) -> np.ndarray:
        return np.asarray(self.gravity, dtype=float)

    @cached_property
    def masses(self) -> np.ndarray:
        return np.array([link.mass for link in self.links], dtype=float)

    @cached_property
    def coms(self) -> np.ndarray:
        return np.array([link.com for link in self.links], dtype=float)

    @cached_property
    def inertias(self) -> np.ndarray:
        return np.array([link.inertia for link in self.links], dtype=float)

    def _limit_array(self, attr: str) -> np.ndarray:
        return np.array([getattr(lim, attr) for lim in self.limits], dtype=float)

    @cached_property
    def q_min(self) -> np.ndarray:
        return self._limit_array("q_min")

    @cached_property
    def q_max(self) -> np.ndarray:
        return self._limit_array("q_max")

    @cached_property
    def v_max(self) -> np.ndarray:
        return self._limit_array("v_max")

    @cached_property
    def a_max(self) -> np.ndarray:
        return self._limit_array("a_max")

    @cached_property
    def j_max(self) -> np.ndarray:
        return self._limit_array("j_max")

    @cached_property
    def tau_max(self) -> np.ndarray:
        return self._limit_array("tau_max")

    @cached_property
    def viscous(self) -> np.ndarray:
        return np.array([f.viscous for f in self.friction], dtype=float)

    @cached_property
    def coulomb(self) -> np.ndarray:
        return np.array([f.coulomb for f in self.friction], dtype=float)

    @cached_property
    def smoothing_eps(self) -> np.ndarray:
        return np.array([f.smoothing_eps for f in self.friction], dtype=float)

    @cached_property
    def state_lower(self) -> np.ndarray:
        """Lower bounds of the full state (q, q̇, q̈)."""
        return np.concatenate([self.q_min, -self.v_max, -self.a_max])

    @cached_property
    def state_upper(self) -> np.ndarray:
        """Upper bounds of the full state (q, q̇, q̈)."""
        return np.concatenate([self.q_max, self.v_max, self.a_max])

    def within_joint_limits(self, q: np.ndarray, tol: float = 0.0) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.q_min - tol) and np.all(q <= self.q_max + tol))

    def clip_to_limits(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.q_min, self.q_max)


def validate_model(model: RobotModel) -> None:
    """Check every RobotModel invariant.

    Raises
    ------
    ModelValidationError
        With the dotted path of the first offending field.
    """
    n = len(model.joints)
    if n < 1:
        raise ModelValidationError("joints", "model needs at least one joint")
    for name, seq in (("links", model.links), ("limits", model.limits), ("friction", model.friction)):
        if len(seq) != n:
            raise ModelValidationError(name, f"expected {n} entries, got {len(seq)}")

    for i, joint in enumerate(model.joints):
        axis = np.asarray(joint.axis, dtype=float)
        if axis.shape != (3,) or not np.all(np.isfinite(axis)):
            raise ModelValidationError(f"joints[{i}].axis", "must be a finite 3-vector")
        if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise ModelValidationError(f"joints[{i}].axis", "must be unit norm")
        for attr in ("origin_xyz", "origin_rpy"):
            vec = np.asarray(getattr(joint, attr), dtype=float)
            if vec.shape != (3,) or not np.all(np.isfinite(vec)):
                raise ModelValidationError(f"joints[{i}].{attr}", "must be a finite 3-vector")

    for i, link in enumerate(model.links):
        path = f"links[{i}]"
        if not np.isfinite(link.mass) or link.mass < 0:
            raise ModelValidationError(f"{path}.mass", "must be finite and >= 0")
        if np.asarray(link.com, dtype=float).shape != (3,):
            raise ModelValidationError(f"{path}.com", "must be a 3-vector")
        inertia = np.asarray(link.inertia, dtype=float)
        if inertia.shape != (3, 3) or not np.all(np.isfinite(inertia)):
            raise ModelValidationError(f"{path}.inertia", "must be a finite 3x3 matrix")
        if not np.allclose(inertia, inertia.T, atol=1e-12):
            raise ModelValidationError(f"{path}.inertia", "must be symmetric")
        eig = np.linalg.eigvalsh(inertia)
        if eig[0] < -1e-12:
            raise ModelValidationError(f"{path}.inertia", "must be positive semidefinite")
        if link.mass > 0 and eig[0] + eig[1] < eig[2] - 1e-9:
            raise ModelValidationError(f"{path}.inertia", "principal moments violate the triangle inequality")

    for i, lim in enumerate(model.limits):
        path = f"limits[{i}]"
        if not lim.q_min < lim.q_max:
            raise ModelValidationError(f"{path}.q_min", "q_min must be < q_max")
        for attr in ("v_max", "a_max", "j_max", "tau_max"):
            value = getattr(lim, attr)
            if not np.isfinite(value) or value <= 0:
                raise ModelValidationError(f"{path}.{attr}", "must be finite and > 0")

    for i, fr in enumerate(model.friction):
        path = f"friction[{i}]"
        if fr.viscous < 0:
            raise ModelValidationError(f"{path}.viscous", "must be >= 0")
        if fr.coulomb < 0:
            raise ModelValidationError(f"{path}.coulomb", "must be >= 0")
        if fr.smoothing_eps <= 0:
            raise ModelValidationError(f"{path}.smoothing_eps", "must be > 0")

    gravity = np.asarray(model.gravity, dtype=float)
    if gravity.shape != (3,) or not np.all(np.isfinite(gravity)):
        raise ModelValidationError("gravity", "must be a finite 3-vector")
    if model.nominal_payload < 0:
        raise ModelValidationError("nominal_payload", "must be >= 0")


def check_joint_array(model: RobotModel, q: np.ndarray, name: str = "q") -> np.ndarray:
    """Validate a joint vector or a (T, n_dof) batch and return it as float array.

    Raises
    ------
    DimensionError
        If the trailing dimension is not ``n_dof``.
    NonFiniteError
        If it contains NaN or Inf.
    """
    arr = np.asarray(q, dtype=float)
    if arr.ndim not in (1, 2) or arr.shape[-1] != model.n_dof:
        raise DimensionError(f"{name} must have trailing dimension {model.n_dof}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite values")
    return arr


def chain_batch(model: RobotModel, Q: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized forward kinematics over a batch of configurations.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    Q : ndarray, shape (T, n_dof)
        Joint configurations.

    Returns
    -------
    R : ndarray, shape (T, n_dof, 3, 3)
        Joint frame orientations.
    p : ndarray, shape (T, n_dof, 3)
        Joint origin positions.
    z : ndarray, shape (T, n_dof, 3)
        World joint axes.
    ee : ndarray, shape (T, 4, 4)
        End-effector poses.
    """
    Q = np.atleast_2d(Q)
    T, n = Q.shape
    R = np.empty((T, n, 3, 3))
    p = np.empty((T, n, 3))
    z = np.empty((T, n, 3))

    R_prev = np.broadcast_to(np.eye(3), (T, 3, 3))
    p_prev = np.zeros((T, 3))
    for i in range(n):
        origin = model.origins[i]
        p_i = p_prev + R_prev @ origin[:3, 3]
        R_fixed = R_prev @ origin[:3, :3]
        R_i = R_fixed @ axis_rotations(model.axes[i], Q[:, i])
        R[:, i] = R_i
        p[:, i] = p_i
        # Rotation about the axis leaves the axis itself unchanged
        z[:, i] = R_fixed @ model.axes[i]
        R_prev, p_prev = R_i, p_i

    ee = np.empty((T, 4, 4))
    ee[:] = np.eye(4)
    ee[:, :3, :3] = R_prev @ model.ee_offset[:3, :3]
    ee[:, :3, 3] = p_prev + R_prev @ model.ee_offset[:3, 3]
    return R, p, z, ee


def forward_kinematics(model: RobotModel, q: np.ndarray) -> Frames:
    """World transforms of every joint frame and of the end-effector.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    q : array-like, shape (n_dof,)
        Joint angles in rad.

    Returns
    -------
    Frames
        Per-joint transforms, joint axes and the end-effector pose.
    """
    q = check_joint_array(model, q)
    if q.ndim != 1:
        raise DimensionError(f"q must be a single configuration, got shape {q.shape}")
    R, p, z, ee = chain_batch(model, q[None, :])
    transforms = np.zeros((model.n_dof, 4, 4))
    transforms[:, :3, :3] = R[0]
    transforms[:, :3, 3] = p[0]
    transforms[:, 3, 3] = 1.0
    return Frames(transforms=transforms, ee_pose=ee[0], axes=z[0])


def ee_positions(model: RobotModel, Q: np.ndarray) -> np.ndarray:
    """End-effector positions for a batch of configurations, shape (T, 3)."""
    Q = check_joint_array(model, Q)
    return chain_batch(model, np.atleast_2d(Q))[3][:, :3, 3]


def jacobian_batch(model: RobotModel, Q: np.ndarray) -> np.ndarray:
    """Geometric end-effector Jacobians for a batch, shape (T, 6, n_dof)."""
    Q = np.atleast_2d(Q)
    _, p, z, ee = chain_batch(model, Q)
    p_ee = ee[:, None, :3, 3]
    J = np.empty((Q.shape[0], 6, model.n_dof))
    J[:, :3, :] = np.cross(z, p_ee - p).transpose(0, 2, 1)
    J[:, 3:, :] = z.transpose(0, 2, 1)
    return J


def jacobian(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """Geometric Jacobian at the end-effector, linear rows then angular rows.

    Column ``i`` is ``[z_i x (p_ee - p_i); z_i]``.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    q : array-like, shape (n_dof,)
        Joint angles.

    Returns
    -------
    ndarray, shape (6, n_dof)
    """
    q = check_joint_array(model, q)
    if q.ndim != 1:
        raise DimensionError(f"q must be a single configuration, got shape {q.shape}")
    return jacobian_batch(model, q[None, :])[0]


def solve_position_ik(
    model: RobotModel,
    target: np.ndarray,
    q0: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
    max_iter: int = 200,
    tol: float = 1e-4,
    damping: float = 0.05,
    restarts: int = 10,
) -> Optional[np.ndarray]:
    """Damped least-squares inverse kinematics on the end-effector position.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    target : array-like, shape (3,)
        Desired end-effector position.
    q0 : array-like, optional
        Initial guess. Defaults to the middle of the joint range.
    rng : numpy.random.Generator, optional
        Source of random restarts. Without one only ``q0`` is tried.
    max_iter : int
        Iterations per attempt.
    tol : float
        Position error tolerance, m.
    damping : float
        Damping factor of the least-squares step.
    restarts : int
        Number of random restarts after the first attempt.

    Returns
    -------
    ndarray or None
        Joint configuration within limits, or None if no attempt converged.
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (3,):
        raise DimensionError(f"target must be a 3-vector, got shape {target.shape}")

    guesses = [np.asarray(q0, dtype=float) if q0 is not None else 0.5 * (model.q_min + model.q_max)]
    if rng is not None:
        guesses += [rng.uniform(model.q_min, model.q_max) for _ in range(restarts)]

    lam2 = damping ** 2
    for guess in guesses:
        q = model.clip_to_limits(guess.copy())
        for _ in range(max_iter):
            J = jacobian_batch(model, q[None, :])[0, :3, :]
            err = target - ee_positions(model, q)[0]
            if np.linalg.norm(err) < tol:
                return q
            step = J.T @ np.linalg.solve(J @ J.T + lam2 * np.eye(3), err)
            q = model.clip_to_limits(q + step)
        if np.linalg.norm(target - ee_positions(model, q)[0]) < tol:
            return q
    logger.debug(f"IK did not converge for target {target}")
    return None
