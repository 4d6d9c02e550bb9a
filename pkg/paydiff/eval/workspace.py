"""Workspace accessibility: the share of tabletop cells a planner still reaches at a payload.

Grid cells are end-effector positions. A cell counts when inverse
kinematics gives a collision-free goal configuration for it; it is
accessible at a payload when at least one of ``attempts_per_cell`` planner
calls from the home configuration returns a trajectory that passes the
validity gate at that payload. Accessibility is normalized by the cells
accessible at zero payload.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from ..core.trajectory import Problem
from ..robot.arm_model import RobotModel, ee_positions, solve_position_ik
from ..robot.presets import is_planar
from ..utils.config import dataclass_from_dict, dataclass_to_dict
from ..utils.error_handler import safe_execute
from ..utils.logger import get_logger, progress_enabled
from ..world.collision import CollisionProxySet, in_collision, proxies_for
from ..world.scene import Scene, WorkspaceSpec, default_workspace, tabletop_scene
from .benchmark import PlannerFn
from .validity import validate

logger = get_logger(__name__)

Vec3 = Tuple[float, float, float]


@dataclass
class GridSpec:
    """Axis-aligned grid of cell centers between ``lower`` and ``upper``."""

    lower: Vec3 = (-1.0, 0.0, 0.0)
    upper: Vec3 = (1.0, 0.6, 0.0)
    shape: Tuple[int, int, int] = (9, 4, 1)
    ik_tolerance: float = 1e-3

    def __post_init__(self) -> None:
        self.lower = tuple(float(v) for v in self.lower)
        self.upper = tuple(float(v) for v in self.upper)
        self.shape = tuple(int(v) for v in self.shape)
        if len(self.lower) != 3 or len(self.upper) != 3 or len(self.shape) != 3:
            raise ValueError("lower, upper and shape must have three entries")
        if any(s < 1 for s in self.shape):
            raise ValueError(f"grid shape must be positive, got {self.shape}")

    def points(self) -> np.ndarray:
        """Cell centers, shape (n_cells, 3), x varying slowest."""
        axes = [np.linspace(lo, hi, n) for lo, hi, n in zip(self.lower, self.upper, self.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    def to_dict(self) -> Dict[str, Any]:
        return dataclass_to_dict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridSpec":
        return dataclass_from_dict(cls, data)


PLANAR_GRID = GridSpec()
SPATIAL_GRID = GridSpec(lower=(0.3, -0.5, 0.1), upper=(0.7, 0.5, 0.4), shape=(4, 6, 2))


def default_grid(model: RobotModel) -> GridSpec:
    return PLANAR_GRID if is_planar(model) else SPATIAL_GRID


def home_configuration(model: RobotModel, scene: Scene, proxies: Optional[CollisionProxySet] = None) -> np.ndarray:
    """Canonical start: the middle of the joint range, or an arm-up pose for planar arms.

    Raises
    ------
    ValueError
        If the chosen configuration collides with the scene.
    """
    proxies = proxies if proxies is not None else proxies_for(model)
    q = 0.5 * (model.q_min + model.q_max)
    if is_planar(model) and in_collision(model, proxies, scene, q):
        reach = float(np.sum(np.linalg.norm(model.origins[1:], axis=1)) + np.linalg.norm(model.ee_offset))
        solved = solve_position_ik(model, np.array([0.0, 0.75 * reach, 0.0]), q0=q)
        q = solved if solved is not None else q
    if in_collision(model, proxies, scene, q):
        raise ValueError("home configuration collides with the scene; pass one explicitly")
    return q


@dataclass
class WorkspaceMap:
    """Per-cell result of one accessibility sweep at one payload."""

    payload: float
    points: np.ndarray
    reachable: np.ndarray
    accessible: np.ndarray
    baseline: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def fraction(self) -> float:
        """Cells accessible here and at zero payload over cells accessible at zero payload.

        NaN when nothing is accessible at zero payload.
        """
        base = self.baseline if self.baseline is not None else self.accessible
        count = int(base.sum())
        if count == 0:
            return float("nan")
        return float(np.sum(self.accessible & base)) / count

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.points, columns=["x", "y", "z"])
        frame["reachable"] = self.reachable
        frame["accessible"] = self.accessible
        frame["payload"] = self.payload
        return frame


def _cell_goal(model: RobotModel, point: np.ndarray, scene: Scene, proxies: CollisionProxySet,
               tol: float, seed: int) -> Optional[np.ndarray]:
    rng = np.random.default_rng(seed)
    q = solve_position_ik(model, point, rng=rng, restarts=5)
    if q is None or np.linalg.norm(ee_positions(model, q)[0] - point) > tol:
        return None
    if in_collision(model, proxies, scene, q):
        return None
    return q


def cell_goals(model: RobotModel, grid: GridSpec, scene: Scene, proxies: Optional[CollisionProxySet] = None,
               seed: int = 0) -> List[Optional[np.ndarray]]:
    """Goal configuration per grid cell, None where unreachable or in collision."""
    proxies = proxies if proxies is not None else proxies_for(model)
    seq = np.random.SeedSequence(seed)
    return [_cell_goal(model, p, scene, proxies, grid.ik_tolerance, int(child.generate_state(1)[0]))
            for p, child in zip(grid.points(), seq.spawn(grid.n_cells))]


def _cell_accessible(planner: PlannerFn, model: RobotModel, proxies: CollisionProxySet, problem: Problem,
                     payload: float, seeds: Sequence[int]) -> bool:
    for seed in seeds:
        result = planner(problem, payload, seed)
        if result.trajectory is None:
            continue
        if validate(model, proxies, problem.scene, result.trajectory, payload,
                    start=problem.start, goal=problem.goal).valid:
            return True
    return False


def workspace_accessibility(model: RobotModel, planner: PlannerFn, payload: float, grid: Optional[GridSpec] = None,
                            attempts_per_cell: int = 5, seed: int = 0, home: Optional[np.ndarray] = None,
                            workspace_spec: Optional[WorkspaceSpec] = None,
                            proxies: Optional[CollisionProxySet] = None,
                            baseline: Optional[WorkspaceMap] = None, parallelism: int = 1) -> WorkspaceMap:
    """Map which grid cells the planner reaches with a valid trajectory at ``payload``.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    planner : callable
        ``(problem, payload, seed) -> PlannerResult``.
    payload : float
        Payload mass, kg.
    grid : GridSpec, optional
        Defaults to the grid matching ``model``.
    attempts_per_cell : int
        Planner calls per cell; one valid trajectory makes the cell accessible.
    seed : int
        Root seed for IK restarts and planner seeds.
    home : array-like, optional
        Start configuration; defaults to :func:`home_configuration`.
    workspace_spec : WorkspaceSpec, optional
        Tabletop layout giving the scene.
    proxies : CollisionProxySet, optional
        Collision spheres of ``model``.
    baseline : WorkspaceMap, optional
        Zero-payload map to normalize by. Computed here when omitted and
        ``payload > 0``.
    parallelism : int
        Worker processes over cells.

    Returns
    -------
    WorkspaceMap

    Raises
    ------
    ValueError
        If no grid cell has a collision-free IK solution.
    """
    grid = grid or default_grid(model)
    spec = workspace_spec or default_workspace(is_planar(model))
    scene = tabletop_scene(spec)
    proxies = proxies if proxies is not None else proxies_for(model)
    home = np.asarray(home, dtype=float) if home is not None else home_configuration(model, scene, proxies)
    goals = cell_goals(model, grid, scene, proxies, seed)
    reachable = np.array([g is not None for g in goals])
    if not reachable.any():
        raise ValueError("workspace grid has no reachable collision-free cell")

    cells = np.flatnonzero(reachable)
    seeds = [[seed + 1000 * int(c) + a for a in range(attempts_per_cell)] for c in cells]
    problems = [Problem(start=home, goal=goals[c], scene=scene, payload=payload, problem_id=int(c)) for c in cells]
    calls = (delayed(safe_execute)(_cell_accessible, planner, model, proxies, problem, payload, s,
                                   module_name="workspace", context=f"cell {problem.problem_id}")
             for problem, s in zip(problems, seeds))
    if parallelism == 1:
        flags = [fn(*args, **kwargs) for fn, args, kwargs in
                 tqdm(calls, total=len(cells), desc=f"Workspace {payload:g} kg",
                      disable=not progress_enabled(logger))]
    else:
        flags = Parallel(n_jobs=parallelism)(calls)

    accessible = np.zeros(grid.n_cells, dtype=bool)
    accessible[cells] = [bool(f) for f in flags]
    result = WorkspaceMap(payload=float(payload), points=grid.points(), reachable=reachable, accessible=accessible,
                          metadata={"attempts_per_cell": attempts_per_cell, "seed": seed, "home": home.tolist()})
    if payload > 0:
        if baseline is None:
            baseline = workspace_accessibility(model, planner, 0.0, grid, attempts_per_cell, seed, home, spec,
                                               proxies, parallelism=parallelism)
        result.baseline = baseline.accessible
    logger.info(f"Workspace at {payload:g} kg: {int(accessible.sum())} of {int(reachable.sum())} reachable cells "
                f"accessible, fraction {result.fraction:.3f}")
    return result


def workspace_sweep(model: RobotModel, planner: PlannerFn, payloads: Sequence[float],
                    grid: Optional[GridSpec] = None, attempts_per_cell: int = 5, seed: int = 0,
                    parallelism: int = 1, **kwargs) -> Tuple[pd.DataFrame, List[WorkspaceMap]]:
    """Accessibility fraction for each payload, sharing one zero-payload baseline.

    Returns
    -------
    pandas.DataFrame
        Columns ``payload, accessible, baseline, fraction``.
    list of WorkspaceMap
        One map per payload, in the order given.
    """
    base = workspace_accessibility(model, planner, 0.0, grid, attempts_per_cell, seed, parallelism=parallelism,
                                   **kwargs)
    if not base.accessible.any():
        logger.warning("No cell is accessible at zero payload; accessibility fractions are undefined")
    maps = []
    for payload in payloads:
        if payload == 0:
            maps.append(base)
        else:
            maps.append(workspace_accessibility(model, planner, payload, grid, attempts_per_cell, seed,
                                                baseline=base, parallelism=parallelism, **kwargs))
    frame = pd.DataFrame({
        "payload": [m.payload for m in maps],
        "accessible": [int(m.accessible.sum()) for m in maps],
        "baseline": [int(base.accessible.sum())] * len(maps),
        "fraction": [m.fraction for m in maps],
    })
    return frame, maps
