"""Full validity gate for one trajectory at one payload."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..core.trajectory import Trajectory, check_consistency, consistency_tolerances
from ..robot.arm_model import RobotModel
from ..robot.dynamics import TORQUE_ATOL, validate_torques
from ..utils.logger import get_logger
from ..world.collision import CollisionProxySet, clearance
from ..world.scene import Scene

logger = get_logger(__name__)

CHECK_NAMES = (
    "endpoints",
    "position_limits",
    "velocity_limits",
    "acceleration_limits",
    "consistency",
    "collision",
    "torque",
)


@dataclass
class ValidityTolerances:
    """Tolerances of the validity gate.

    ``velocity_consistency`` / ``acceleration_consistency`` default to the
    worst-case central-difference error of a jerk-limited trajectory
    (``consistency_safety`` times the bound).
    """

    endpoint_atol: float = 1e-6
    limit_atol: float = 1e-9
    torque_atol: float = TORQUE_ATOL
    consistency_safety: float = 1.5
    velocity_consistency: Optional[float] = None
    acceleration_consistency: Optional[float] = None


@dataclass
class CheckResult:
    """Outcome of one check; ``margin`` is negative when violated."""

    name: str
    passed: bool
    margin: float


@dataclass
class ValidityReport:
    payload: float
    checks: Dict[str, CheckResult] = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return all(c.passed for c in self.checks.values())

    @property
    def failed(self) -> List[str]:
        return [name for name, c in self.checks.items() if not c.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "payload": self.payload,
            "valid": self.valid,
            "checks": {n: {"passed": c.passed, "margin": c.margin} for n, c in self.checks.items()},
        }


def _limit_check(name: str, values: np.ndarray, lower: np.ndarray, upper: np.ndarray, atol: float) -> CheckResult:
    slack = np.minimum(values - lower, upper - values)
    margin = float(slack.min())
    return CheckResult(name, margin >= -atol, margin)


def validate(
    model: RobotModel,
    proxies: CollisionProxySet,
    scene: Scene,
    traj: Trajectory,
    payload: float,
    tolerances: Optional[ValidityTolerances] = None,
    start: Optional[np.ndarray] = None,
    goal: Optional[np.ndarray] = None,
) -> ValidityReport:
    """Run every validity check on ``traj`` at ``payload``.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    proxies : CollisionProxySet
        Robot collision spheres.
    scene : Scene
        Obstacles.
    traj : Trajectory
        Trajectory to check.
    payload : float
        Payload mass, kg.
    tolerances : ValidityTolerances, optional
        Defaults to :class:`ValidityTolerances`.
    start, goal : array-like, optional
        Required end positions. Without them only rest conditions at both
        ends are checked.

    Returns
    -------
    ValidityReport
        One :class:`CheckResult` per check; ``valid`` is their conjunction.
    """
    tol = tolerances or ValidityTolerances()
    report = ValidityReport(payload=float(payload))
    n = model.n_dof

    deviation = float(np.abs(traj.states[[0, -1], n:]).max())
    if start is not None:
        deviation = max(deviation, float(np.abs(traj.q[0] - np.asarray(start)).max()))
    if goal is not None:
        deviation = max(deviation, float(np.abs(traj.q[-1] - np.asarray(goal)).max()))
    report.checks["endpoints"] = CheckResult("endpoints", deviation <= tol.endpoint_atol,
                                             tol.endpoint_atol - deviation)

    report.checks["position_limits"] = _limit_check(
        "position_limits", traj.q, model.q_min, model.q_max, tol.limit_atol)
    report.checks["velocity_limits"] = _limit_check(
        "velocity_limits", traj.qd, -model.v_max, model.v_max, tol.limit_atol)
    report.checks["acceleration_limits"] = _limit_check(
        "acceleration_limits", traj.qdd, -model.a_max, model.a_max, tol.limit_atol)

    v_tol, a_tol = consistency_tolerances(model.j_max, traj.dt, tol.consistency_safety)
    if tol.velocity_consistency is not None:
        v_tol = tol.velocity_consistency
    if tol.acceleration_consistency is not None:
        a_tol = tol.acceleration_consistency
    consistency = check_consistency(traj, v_tol, a_tol)
    report.checks["consistency"] = CheckResult("consistency", consistency.passed, 1.0 - consistency.max_ratio)

    gap = float(clearance(model, proxies, scene, traj.q).min()) - scene.margin
    report.checks["collision"] = CheckResult("collision", gap >= 0.0, gap if np.isfinite(gap) else 1e9)

    torques = validate_torques(model, traj, payload, atol=tol.torque_atol)
    report.checks["torque"] = CheckResult("torque", torques.feasible, torques.min_margin)

    if not report.valid:
        logger.debug(f"Trajectory invalid at {payload} kg: {report.failed}")
    return report
