"""Trajectory container, finite-difference consistency and time scaling."""

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..utils.error_handler import DimensionError, NonFiniteError
from ..utils.logger import get_logger
from ..world.scene import Scene

logger = get_logger(__name__)

DEFAULT_HORIZON = 64
DEFAULT_DT = 0.08


@dataclass(eq=False)
class Trajectory:
    """Fixed-step sequence of full states ``X_t = (q_t, q̇_t, q̈_t)``.

    Parameters
    ----------
    dt : float
        Time step, s.
    states : ndarray, shape (horizon, 3 * n_dof)
        Row ``t`` holds positions, then velocities, then accelerations.
    """

    dt: float
    states: np.ndarray

    def __post_init__(self) -> None:
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or self.states.shape[1] % 3 != 0 or self.states.shape[1] == 0:
            raise DimensionError(f"states must have shape (horizon, 3*n_dof), got {self.states.shape}")
        if self.states.shape[0] < 2:
            raise DimensionError(f"horizon must be >= 2, got {self.states.shape[0]}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not np.all(np.isfinite(self.states)):
            raise NonFiniteError("trajectory states contain non-finite values")
        self.dt = float(self.dt)

    @classmethod
    def from_components(cls, q: np.ndarray, qd: np.ndarray, qdd: np.ndarray, dt: float) -> "Trajectory":
        return cls(dt=dt, states=np.concatenate([q, qd, qdd], axis=1))

    @classmethod
    def constant(cls, q: np.ndarray, horizon: int = DEFAULT_HORIZON, dt: float = DEFAULT_DT) -> "Trajectory":
        """Trajectory resting at ``q`` for ``horizon`` waypoints."""
        q = np.asarray(q, dtype=float)
        n = q.shape[0]
        states = np.zeros((horizon, 3 * n))
        states[:, :n] = q
        return cls(dt=dt, states=states)

    @property
    def n_dof(self) -> int:
        return self.states.shape[1] // 3

    @property
    def horizon(self) -> int:
        return self.states.shape[0]

    @property
    def duration(self) -> float:
        return (self.horizon - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.horizon) * self.dt

    @property
    def q(self) -> np.ndarray:
        return self.states[:, :self.n_dof]

    @property
    def qd(self) -> np.ndarray:
        return self.states[:, self.n_dof:2 * self.n_dof]

    @property
    def qdd(self) -> np.ndarray:
        return self.states[:, 2 * self.n_dof:]

    @property
    def start(self) -> np.ndarray:
        return self.states[0]

    @property
    def goal(self) -> np.ndarray:
        return self.states[-1]

    def copy(self) -> "Trajectory":
        return Trajectory(dt=self.dt, states=self.states.copy())

    def allclose(self, other: "Trajectory", atol: float = 0.0) -> bool:
        return (self.states.shape == other.states.shape and self.dt == other.dt
                and bool(np.allclose(self.states, other.states, rtol=0.0, atol=atol)))

    def is_rest_to_rest(self, atol: float = 0.0) -> bool:
        """Zero velocity and acceleration at both ends."""
        n = self.n_dof
        ends = self.states[[0, -1], n:]
        return bool(np.all(np.abs(ends) <= atol))

    def jerk(self) -> np.ndarray:
        """Forward differences of accelerations, shape (horizon - 1, n_dof)."""
        return np.diff(self.qdd, axis=0) / self.dt


@dataclass
class Problem:
    """Pick-and-place task: rest-to-rest motion between two configurations."""

    start: np.ndarray
    goal: np.ndarray
    scene: Scene = field(default_factory=Scene)
    payload: float = 0.0
    problem_id: int = 0

    def __post_init__(self) -> None:
        self.start = np.asarray(self.start, dtype=float)
        self.goal = np.asarray(self.goal, dtype=float)
        if self.start.shape != self.goal.shape or self.start.ndim != 1:
            raise DimensionError(f"start {self.start.shape} and goal {self.goal.shape} must be equal-length vectors")

    @property
    def start_state(self) -> np.ndarray:
        """Full rest state at the start, ``(q, 0, 0)``."""
        return np.concatenate([self.start, np.zeros(2 * self.start.size)])

    @property
    def goal_state(self) -> np.ndarray:
        return np.concatenate([self.goal, np.zeros(2 * self.goal.size)])


@dataclass
class ConsistencyReport:
    """Deviation between stored derivatives and central differences.

    Only interior waypoints are compared.
    """

    velocity_error: float
    acceleration_error: float
    velocity_ratio: float
    acceleration_ratio: float
    passed: bool

    @property
    def max_ratio(self) -> float:
        """Largest error relative to its tolerance (pass iff <= 1)."""
        return max(self.velocity_ratio, self.acceleration_ratio)


Tolerance = Union[float, np.ndarray]


def consistency_tolerances(j_max: np.ndarray, dt: float, safety: float = 1.5):
    """Worst-case central-difference errors of a trajectory with jerk bounded by ``j_max``.

    Returns
    -------
    v_tol, a_tol : ndarray
        ``safety * j_max * dt^2 / 6`` and ``safety * j_max * dt / 2``.
    """
    j_max = np.asarray(j_max, dtype=float)
    return safety * j_max * dt ** 2 / 6.0, safety * j_max * dt / 2.0


def check_consistency(traj: Trajectory, tol: Tolerance = 1e-3,
                      acc_tol: Optional[Tolerance] = None) -> ConsistencyReport:
    """Compare stored q̇, q̈ with central differences of stored q, q̇.

    Parameters
    ----------
    traj : Trajectory
        Trajectory to check.
    tol : float or ndarray of shape (n_dof,)
        Velocity tolerance; also used for accelerations unless ``acc_tol``
        is given.
    acc_tol : float or ndarray, optional
        Acceleration tolerance.

    Returns
    -------
    ConsistencyReport
    """
    acc_tol = tol if acc_tol is None else acc_tol
    if traj.horizon < 3:
        return ConsistencyReport(0.0, 0.0, 0.0, 0.0, True)
    h2 = 2.0 * traj.dt
    dv = np.abs((traj.q[2:] - traj.q[:-2]) / h2 - traj.qd[1:-1])
    da = np.abs((traj.qd[2:] - traj.qd[:-2]) / h2 - traj.qdd[1:-1])
    v_ratio = float(np.max(dv / np.asarray(tol, dtype=float)))
    a_ratio = float(np.max(da / np.asarray(acc_tol, dtype=float)))
    return ConsistencyReport(
        velocity_error=float(dv.max()),
        acceleration_error=float(da.max()),
        velocity_ratio=v_ratio,
        acceleration_ratio=a_ratio,
        passed=v_ratio <= 1.0 and a_ratio <= 1.0,
    )


def time_scale(traj: Trajectory, s: float) -> Trajectory:
    """Stretch time by ``s``: ``dt' = s dt``, ``q̇' = q̇ / s``, ``q̈' = q̈ / s^2``."""
    if not s > 0:
        raise ValueError(f"time scale factor must be > 0, got {s}")
    return Trajectory.from_components(traj.q.copy(), traj.qd / s, traj.qdd / s ** 2, traj.dt * s)
