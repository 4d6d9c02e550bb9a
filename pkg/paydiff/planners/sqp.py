"""Fixed-duration trajectory optimization minimizing squared jerk.

Decision variables are full states ``(q_t, q̇_t, q̈_t)`` at every waypoint.
Consecutive states are tied by exact constant-jerk integration, so the jerk
of the piece between waypoints ``t`` and ``t + 1`` is ``(q̈_{t+1} - q̈_t) / dt``
and the objective is ``sum_t ||jerk_t||^2 dt``.

Joint, velocity, acceleration and jerk boxes, torque limits at the payload
and collision clearance are inequality constraints handled by an augmented
Lagrangian. Each inner step linearizes the constraints (Gauss-Newton), solves
the equality-constrained quadratic model through a dense KKT system, clips
the position part of the step to a trust region and backtracks on the merit
function.
"""

import dataclasses
import time
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..core.trajectory import Problem, Trajectory
from ..eval.validity import validate
from ..robot.arm_model import RobotModel
from ..robot.dynamics import payload_torque, rnea_batch
from ..utils.error_handler import DimensionError, NegativeMassError
from ..utils.logger import get_logger
from ..world.collision import CollisionProxySet, collision_cost_gradient, proxies_for, waypoint_collision_costs
from .result import PlannerConfig, PlannerResult, PlannerStatus

logger = get_logger(__name__)

KKT_TOL = 1e-6
STEP_TOL = 1e-9
FEASIBILITY_TOL = 1e-6

# Internal bounds sit slightly inside the true limits.
_BACKOFF = 1e-4
_CLEARANCE_BACKOFF = 1e-3

_RHO_INIT = 10.0
_RHO_MAX = 1e8
_INNER_ITERS = 8
_FD_EPS = 1e-6


def minimum_jerk_objective(delta: np.ndarray, duration: float) -> float:
    """Squared-jerk integral of the quintic rest-to-rest interpolant, ``720 D^2 / T^5`` per joint."""
    delta = np.asarray(delta, dtype=float)
    return float(720.0 * np.sum(delta ** 2) / duration ** 5)


class _TrajectoryProgram:
    """Constraint and objective assembly over the flattened state vector.

    The variable vector stacks ``horizon`` rows of ``[q, q̇, q̈]``.
    """

    def __init__(self, model: RobotModel, problem: Problem, payload: float, proxies: CollisionProxySet,
                 horizon: int, dt: float) -> None:
        self.model = model
        self.payload = float(payload)
        self.proxies = proxies
        self.scene = dataclasses.replace(problem.scene, margin=problem.scene.margin + _CLEARANCE_BACKOFF)
        self.H, self.n, self.dt = horizon, model.n_dof, dt
        self.width = 3 * self.n
        self.size = self.H * self.width
        self.A, self.b = self._equalities(problem)
        self.P = self._jerk_quadratic()
        self.G_lin, self.h_lin = self._boxes()

    def index(self, block: int) -> np.ndarray:
        """Variable indices of one channel (0 = q, 1 = q̇, 2 = q̈), shape (H, n)."""
        t = np.arange(self.H)[:, None]
        return t * self.width + block * self.n + np.arange(self.n)[None, :]

    def _equalities(self, problem: Problem) -> Tuple[np.ndarray, np.ndarray]:
        H, n, dt = self.H, self.n, self.dt
        iq, iv, ia = self.index(0), self.index(1), self.index(2)
        pairs = n * (H - 1)
        A = np.zeros((2 * pairs + 6 * n, self.size))
        rows = np.arange(pairs)
        t0 = (slice(0, H - 1), slice(None))
        t1 = (slice(1, H), slice(None))

        # q̇_{t+1} = q̇_t + dt (q̈_t + q̈_{t+1}) / 2
        A[rows, iv[t1].ravel()] = 1.0
        A[rows, iv[t0].ravel()] = -1.0
        A[rows, ia[t0].ravel()] = -dt / 2.0
        A[rows, ia[t1].ravel()] = -dt / 2.0
        # q_{t+1} = q_t + dt q̇_t + dt^2 q̈_t / 3 + dt^2 q̈_{t+1} / 6
        rows = rows + pairs
        A[rows, iq[t1].ravel()] = 1.0
        A[rows, iq[t0].ravel()] = -1.0
        A[rows, iv[t0].ravel()] = -dt
        A[rows, ia[t0].ravel()] = -dt ** 2 / 3.0
        A[rows, ia[t1].ravel()] = -dt ** 2 / 6.0

        pins = np.concatenate([np.arange(self.width), (H - 1) * self.width + np.arange(self.width)])
        A[2 * pairs + np.arange(pins.size), pins] = 1.0
        b = np.zeros(A.shape[0])
        b[2 * pairs:] = np.concatenate([problem.start_state, problem.goal_state])
        return A, b

    def jerk_operator(self) -> np.ndarray:
        """Rows ``(q̈_{t+1} - q̈_t) / dt``, shape (n (H - 1), size)."""
        ia = self.index(2)
        D = np.zeros((self.n * (self.H - 1), self.size))
        rows = np.arange(D.shape[0])
        D[rows, ia[1:].ravel()] = 1.0 / self.dt
        D[rows, ia[:-1].ravel()] = -1.0 / self.dt
        return D

    def _jerk_quadratic(self) -> np.ndarray:
        D = self.jerk_operator()
        return self.dt * D.T @ D

    def _boxes(self) -> Tuple[np.ndarray, np.ndarray]:
        model, H = self.model, self.H
        shrink = 1.0 - _BACKOFF
        blocks, bounds = [], []
        for block, scale in ((1, model.v_max), (2, model.a_max)):
            S = np.zeros((H * self.n, self.size))
            S[np.arange(H * self.n), self.index(block).ravel()] = 1.0
            S /= np.tile(scale, H)[:, None]
            blocks += [S, -S]
            bounds += [np.full(H * self.n, shrink)] * 2

        S = np.zeros((H * self.n, self.size))
        S[np.arange(H * self.n), self.index(0).ravel()] = 1.0
        slack = _BACKOFF * (model.q_max - model.q_min)
        blocks += [S, -S]
        bounds += [np.tile(model.q_max - slack, H), np.tile(-(model.q_min + slack), H)]

        D = self.jerk_operator() / np.tile(model.j_max, H - 1)[:, None]
        blocks += [D, -D]
        bounds += [np.full(D.shape[0], shrink)] * 2
        return np.vstack(blocks), np.concatenate(bounds)

    def split(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        states = z.reshape(self.H, self.width)
        n = self.n
        return states[:, :n], states[:, n:2 * n], states[:, 2 * n:]

    def objective(self, z: np.ndarray) -> float:
        return float(z @ self.P @ z)

    def _torque(self, Q: np.ndarray, V: np.ndarray, A: np.ndarray) -> np.ndarray:
        tau = rnea_batch(self.model, Q, V, A)
        if self.payload > 0:
            tau = tau + payload_torque(self.model, Q, self.payload)
        return tau

    def _torque_jacobian(self, Q: np.ndarray, V: np.ndarray, A: np.ndarray, tau: np.ndarray) -> np.ndarray:
        """d tau_t / d (q_t, q̇_t, q̈_t), shape (H, n, 3n)."""
        n = self.n
        J = np.zeros((self.H, n, self.width))
        for j in range(n):
            e = np.zeros(n)
            e[j] = _FD_EPS
            J[:, :, j] = (self._torque(Q + e, V, A) - self._torque(Q - e, V, A)) / (2.0 * _FD_EPS)
            J[:, :, n + j] = (self._torque(Q, V + e, A) - self._torque(Q, V - e, A)) / (2.0 * _FD_EPS)
            # Torque is affine in acceleration: a unit step gives the mass-matrix column
            e[j] = 1.0
            J[:, :, 2 * n + j] = self._torque(Q, V, A + e) - tau
        return J

    def constraints(self, z: np.ndarray, jacobian: bool = True) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """Inequality values ``c(z) <= 0`` and their Jacobian."""
        Q, V, A = self.split(z)
        tau_max = self.model.tau_max * (1.0 - _BACKOFF)
        tau = self._torque(Q, V, A)
        c_tau = np.concatenate([((tau - tau_max) / tau_max).ravel(), ((-tau - tau_max) / tau_max).ravel()])

        costs = waypoint_collision_costs(self.model, self.proxies, self.scene, Q)
        c_col = np.sqrt(costs)
        c = np.concatenate([self.G_lin @ z - self.h_lin, c_tau, c_col])
        if not jacobian:
            return c, None

        J = self._torque_jacobian(Q, V, A, tau) / tau_max[None, :, None]
        G_tau = np.zeros((self.H, self.n, self.H, self.width))
        steps = np.arange(self.H)
        G_tau[steps, :, steps, :] = J
        G_tau = G_tau.reshape(self.H * self.n, self.size)

        G_col = np.zeros((self.H, self.H, self.width))
        grad = collision_cost_gradient(self.model, self.proxies, self.scene, Q)
        touching = c_col > 1e-12
        scale = np.where(touching, 0.5 / np.where(touching, c_col, 1.0), 0.0)
        G_col[steps, steps, :self.n] = grad * scale[:, None]
        G_col = G_col.reshape(self.H, self.size)
        return c, np.vstack([self.G_lin, G_tau, -G_tau, G_col])

    def project(self, z: np.ndarray) -> np.ndarray:
        """Closest point satisfying the integration and endpoint equalities."""
        residual = self.A @ z - self.b
        return z - self.A.T @ np.linalg.solve(self.A @ self.A.T, residual)


def _merit(program: _TrajectoryProgram, z: np.ndarray, c: np.ndarray, lam: np.ndarray, rho: float) -> float:
    shifted = np.maximum(c + lam / rho, 0.0)
    return program.objective(z) + 0.5 * rho * float(shifted @ shifted) - float(lam @ lam) / (2.0 * rho)


def _violation(c: np.ndarray) -> float:
    return float(max(c.max(initial=0.0), 0.0))


def _solve_kkt(H: np.ndarray, g: np.ndarray, A: np.ndarray) -> np.ndarray:
    n, m = H.shape[0], A.shape[0]
    K = np.zeros((n + m, n + m))
    K[:n, :n] = H + 1e-10 * np.eye(n)
    K[:n, n:] = A.T
    K[n:, :n] = A
    rhs = np.concatenate([-g, np.zeros(m)])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[:n]


def straight_line_initialization(problem: Problem, horizon: int, duration: float) -> Trajectory:
    """Constant-velocity joint-space line from start to goal (not rest-to-rest)."""
    s = np.linspace(0.0, 1.0, horizon)[:, None]
    q = problem.start + s * (problem.goal - problem.start)
    qd = np.broadcast_to((problem.goal - problem.start) / duration, q.shape).copy()
    return Trajectory.from_components(q, qd, np.zeros_like(q), duration / (horizon - 1))


def sqp_optimize(model: RobotModel, problem: Problem, payload: float, duration: Optional[float] = None,
                 init: Optional[Trajectory] = None, max_iter: Optional[int] = None,
                 proxies: Optional[CollisionProxySet] = None, config: Optional[PlannerConfig] = None,
                 horizon: Optional[int] = None) -> PlannerResult:
    """Minimize squared jerk over a fixed duration subject to limits, torque and clearance.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    problem : Problem
        Start, goal and scene.
    payload : float
        Payload the torque constraints are evaluated at, kg.
    duration : float, optional
        Total duration, s. Defaults to ``config.duration``.
    init : Trajectory, optional
        Initial guess with ``horizon`` waypoints. Defaults to the straight
        joint-space line.
    max_iter : int, optional
        Iteration budget. Defaults to ``config.sqp_max_iter``.
    proxies : CollisionProxySet, optional
        Robot collision spheres.
    config : PlannerConfig, optional
        Horizon, trust region and budgets.
    horizon : int, optional
        Number of waypoints. Defaults to ``init.horizon`` or ``config.horizon``.

    Returns
    -------
    PlannerResult
        ``SUCCESS`` if the final iterate passes the validity gate, else
        ``INFEASIBLE``. ``diagnostics`` holds the termination reason, the
        final objective and violation, and the per-iteration history.
    """
    if payload < 0:
        raise NegativeMassError(f"payload must be >= 0, got {payload}")
    config = config or PlannerConfig()
    max_iter = config.sqp_max_iter if max_iter is None else max_iter
    horizon = horizon or (init.horizon if init is not None else config.horizon)
    duration = config.duration if duration is None else float(duration)
    if horizon < 3:
        raise DimensionError(f"horizon must be >= 3, got {horizon}")
    proxies = proxies if proxies is not None else proxies_for(model)
    t_start = time.perf_counter()

    init = init if init is not None else straight_line_initialization(problem, horizon, duration)
    if init.horizon != horizon or init.n_dof != model.n_dof:
        raise DimensionError(f"init has shape ({init.horizon}, {init.n_dof}), expected ({horizon}, {model.n_dof})")

    program = _TrajectoryProgram(model, problem, payload, proxies, horizon, duration / (horizon - 1))
    z = program.project(init.states.ravel().copy())
    c, G = program.constraints(z)
    lam = np.zeros_like(c)
    rho = _RHO_INIT
    previous_violation = _violation(c)
    history: List[Dict[str, Any]] = []
    reason = "max_iter"
    inner = 0
    iteration = 0

    for iteration in range(1, max_iter + 1):
        shifted = c + lam / rho
        active = shifted > 0
        Ga = G[active]
        grad = 2.0 * program.P @ z + rho * Ga.T @ shifted[active]
        hess = 2.0 * program.P + rho * Ga.T @ Ga
        delta = _solve_kkt(hess, grad, program.A)
        residual = float(np.abs(hess @ delta).max())
        violation = _violation(c)
        if residual < KKT_TOL and violation <= FEASIBILITY_TOL:
            reason = "kkt"
            break

        q_step = np.abs(program.split(delta)[0]).max()
        step = delta * min(1.0, config.trust_region / q_step) if q_step > 0 else delta
        merit0 = _merit(program, z, c, lam, rho)
        slope = float(grad @ step)
        alpha, moved = 1.0, 0.0
        for _ in range(30):
            z_try = z + alpha * step
            c_try, _ = program.constraints(z_try, jacobian=False)
            merit = _merit(program, z_try, c_try, lam, rho)
            if merit <= merit0 + 1e-4 * alpha * min(slope, 0.0):
                z = z_try
                c, G = program.constraints(z)
                moved = alpha * float(np.abs(step).max())
                history.append({"iteration": iteration, "objective": program.objective(z), "merit": merit,
                                "violation": _violation(c), "rho": rho, "step": moved})
                break
            alpha *= 0.5

        inner += 1
        if moved < STEP_TOL and (_violation(c) <= FEASIBILITY_TOL or rho >= _RHO_MAX):
            reason = "step"
            break
        if moved < 1e-6 or residual < 1e-4 or inner >= _INNER_ITERS:
            lam = np.maximum(0.0, lam + rho * c)
            current = _violation(c)
            if current > 0.25 * previous_violation:
                rho = min(rho * 10.0, _RHO_MAX)
            previous_violation = current
            inner = 0

    states = z.reshape(horizon, 3 * model.n_dof).copy()
    states[0] = problem.start_state
    states[-1] = problem.goal_state
    traj = Trajectory(dt=program.dt, states=states)
    violation = _violation(program.constraints(z, jacobian=False)[0])
    diagnostics = {"reason": reason, "objective": program.objective(z), "violation": violation,
                   "history": history}
    elapsed = time.perf_counter() - t_start

    report = validate(model, proxies, problem.scene, traj, payload, start=problem.start, goal=problem.goal)
    if report.valid:
        logger.debug(f"SQP converged ({reason}) after {iteration} iterations, objective {diagnostics['objective']:.4g}")
        return PlannerResult(PlannerStatus.SUCCESS, traj, elapsed, iteration, diagnostics=diagnostics)
    diagnostics["failed_checks"] = report.failed
    return PlannerResult(PlannerStatus.INFEASIBLE, None, elapsed, iteration,
                         message=f"converged-infeasible ({reason}): {', '.join(report.failed)}",
                         diagnostics=diagnostics)
