"""Training corpus: trajectories labeled with their maximum supported payload.

Each sample is planned at zero payload with plan-and-filter and labeled with
the closed-form maximum payload. Generation runs problems in parallel with
one seed sequence per problem index, so the result does not depend on the
number of workers. Datasets are stored as HDF5 files without timestamps,
which makes regenerated files byte-identical.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import h5py
import numpy as np
import psutil
from joblib import Parallel, delayed
from packaging.version import Version
from tqdm import tqdm

from ..core.trajectory import Trajectory
from ..planners.plan_and_filter import plan_and_filter
from ..planners.result import PlannerConfig
from ..robot.arm_model import RobotModel
from ..robot.dynamics import PAYLOAD_CAP, max_supported_payload, max_supported_payload_grid
from ..robot.model_io import model_hash
from ..utils.error_handler import (
    CorruptFileError,
    DatasetGenerationError,
    FormatVersionError,
    ModelMismatchError,
    safe_execute,
)
from ..utils.logger import get_logger, progress_enabled
from ..world.collision import proxies_for
from ..world.scene import WorkspaceSpec
from .normalization import NormalizationStats
from .problems import sample_problem

logger = get_logger(__name__)

DATASET_MAGIC = "paydiff-dataset"
DATASET_FORMAT_VERSION = "1.0"
AUDIT_TOLERANCE = 1e-3
LABEL_TOLERANCE = 1e-6


@dataclass
class Sample:
    """One trajectory and the heaviest payload it supports."""

    trajectory: Trajectory
    m_max: float
    problem_id: int = 0
    planner_tag: str = "plan_and_filter"


@dataclass
class Dataset:
    """Samples sharing one robot model, horizon and time step."""

    samples: List[Sample]
    normalization: NormalizationStats
    model_hash: str
    model_name: str = ""
    seed: Optional[int] = None
    dt: float = 0.0
    horizon: int = 0
    n_dof: int = 0
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.samples:
            first = self.samples[0].trajectory
            self.dt = self.dt or first.dt
            self.horizon = self.horizon or first.horizon
            self.n_dof = self.n_dof or first.n_dof
            for s in self.samples:
                if (s.trajectory.horizon, s.trajectory.n_dof) != (self.horizon, self.n_dof):
                    raise CorruptFileError("samples must share horizon and joint count")

    def __len__(self) -> int:
        return len(self.samples)

    def states(self) -> np.ndarray:
        """Stacked states, shape (N, horizon, 3 n_dof)."""
        if not self.samples:
            return np.zeros((0, self.horizon, 3 * self.n_dof))
        return np.stack([s.trajectory.states for s in self.samples])

    def labels(self) -> np.ndarray:
        return np.array([s.m_max for s in self.samples], dtype=float)

    def equals(self, other: "Dataset") -> bool:
        """Same header, labels, tags and states."""
        return (
            self.model_hash == other.model_hash
            and (self.horizon, self.n_dof, self.dt) == (other.horizon, other.n_dof, other.dt)
            and len(self) == len(other)
            and np.array_equal(self.states(), other.states())
            and np.array_equal(self.labels(), other.labels())
            and [s.problem_id for s in self.samples] == [s.problem_id for s in other.samples]
            and [s.planner_tag for s in self.samples] == [s.planner_tag for s in other.samples]
            and np.array_equal(self.normalization.center, other.normalization.center)
            and np.array_equal(self.normalization.half_range, other.normalization.half_range)
        )


def label_trajectory(model: RobotModel, traj: Trajectory, cap: float = PAYLOAD_CAP) -> float:
    return max_supported_payload(model, traj, cap=cap)


def _generate_one(model: RobotModel, workspace_spec: Optional[WorkspaceSpec], config: PlannerConfig,
                  seed: int, index: int, audit: bool) -> Tuple[Sample, Optional[float]]:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    proxies = proxies_for(model)
    problem = sample_problem(rng, workspace_spec, model, proxies=proxies, problem_id=index)
    result = plan_and_filter(model, problem, 0.0, rng_seed=int(rng.integers(2 ** 31)),
                             proxies=proxies, config=config)
    if not result.success:
        raise DatasetGenerationError(f"problem {index}: {result.message}")
    m_max = label_trajectory(model, result.trajectory)
    grid = max_supported_payload_grid(model, result.trajectory) if audit else None
    return Sample(result.trajectory, m_max, index, "plan_and_filter"), grid


def generate_dataset(model: RobotModel, n: int, planner_config: Optional[PlannerConfig] = None,
                     parallelism: Optional[int] = None, seed: int = 0,
                     workspace_spec: Optional[WorkspaceSpec] = None, max_failure_rate: float = 0.5,
                     audit_every: int = 100) -> Dataset:
    """Plan ``n`` problems at zero payload and label them.

    Parameters
    ----------
    model : RobotModel
        Manipulator.
    n : int
        Number of samples, at least 1.
    planner_config : PlannerConfig, optional
        Horizon, dt and plan-and-filter settings.
    parallelism : int, optional
        Worker processes. Defaults to the logical CPU count.
    seed : int
        Root seed; problem ``i`` uses the ``i``-th child seed sequence.
    workspace_spec : WorkspaceSpec, optional
        Tabletop layout; defaults to the layout matching ``model``.
    max_failure_rate : float
        Abort when more than this fraction of problems fails.
    audit_every : int
        Every ``audit_every``-th problem index is also labeled with the
        grid oracle and compared with the closed form.

    Returns
    -------
    Dataset

    Raises
    ------
    DatasetGenerationError
        If too many problems fail or a label audit disagrees.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    # Iteration budget is the only planner cutoff here.
    config = replace(planner_config or PlannerConfig(), rrt_timeout=None)
    workers = parallelism or psutil.cpu_count(logical=True) or 1
    chunk = max(4 * workers, 16)

    samples: Dict[int, Sample] = {}
    failures: List[str] = []
    next_index = 0
    with tqdm(total=n, desc="Generating dataset", disable=not progress_enabled(logger)) as bar:
        while len(samples) < n:
            attempted = next_index
            if attempted >= 8 and len(failures) > max_failure_rate * attempted:
                raise DatasetGenerationError(
                    f"{len(failures)} of {attempted} problems failed; first failures: {failures[:5]}")
            batch = list(range(next_index, next_index + min(chunk, n - len(samples))))
            next_index += len(batch)
            results = Parallel(n_jobs=workers)(
                delayed(safe_execute)(_generate_one, model, workspace_spec, config, seed, i,
                                      i % audit_every == 0, module_name="dataset", context=f"problem {i}")
                for i in batch
            )
            for i, res in zip(batch, results):
                if res is None:
                    failures.append(f"problem {i}")
                    continue
                sample, grid = res
                if grid is not None and abs(grid - sample.m_max) > AUDIT_TOLERANCE:
                    raise DatasetGenerationError(
                        f"label audit failed for problem {i}: closed form {sample.m_max:.6f}, grid {grid:.6f}")
                if len(samples) < n:
                    samples[i] = sample
                    bar.update(1)

    ordered = [samples[i] for i in sorted(samples)]
    logger.info(f"Generated {len(ordered)} samples ({len(failures)} planner failures)")
    return Dataset(
        samples=ordered,
        normalization=NormalizationStats.from_model(model),
        model_hash=model_hash(model),
        model_name=model.name,
        seed=seed,
        dt=config.dt,
        horizon=config.horizon,
        n_dof=model.n_dof,
        metadata={"failures": len(failures), "attempted": next_index},
    )


def payload_histogram(dataset: Dataset, bin_width: float = 1.0,
                      cap: float = PAYLOAD_CAP) -> Tuple[np.ndarray, np.ndarray]:
    """Counts of ``m_max`` labels per payload bin and the bin edges."""
    edges = np.arange(0.0, cap + bin_width, bin_width)
    counts, edges = np.histogram(np.clip(dataset.labels(), 0.0, cap), bins=edges)
    return counts, edges


def save_dataset(dataset: Dataset, path: Union[str, Path]) -> Path:
    """Write ``dataset`` to an HDF5 file (no timestamps, deterministic layout)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with h5py.File(path, "w") as f:
        f.attrs["magic"] = DATASET_MAGIC
        f.attrs["format_version"] = DATASET_FORMAT_VERSION
        f.attrs["n_dof"] = dataset.n_dof
        f.attrs["horizon"] = dataset.horizon
        f.attrs["dt"] = dataset.dt
        f.attrs["model_hash"] = dataset.model_hash
        f.attrs["model_name"] = dataset.model_name
        f.attrs["seed"] = -1 if dataset.seed is None else int(dataset.seed)
        f.attrs["norm_center"] = dataset.normalization.center
        f.attrs["norm_half_range"] = dataset.normalization.half_range
        f.create_dataset("states", data=dataset.states(), track_times=False)
        f.create_dataset("m_max", data=dataset.labels(), track_times=False)
        f.create_dataset("problem_id", data=np.array([s.problem_id for s in dataset.samples], dtype=np.int64),
                         track_times=False)
        f.create_dataset("planner_tag", data=[s.planner_tag for s in dataset.samples],
                         dtype=h5py.string_dtype(), track_times=False)
    logger.info(f"Saved {len(dataset)} samples to {path}")
    return path


def _check_version(found: str, what: str) -> None:
    if Version(found).major != Version(DATASET_FORMAT_VERSION).major:
        raise FormatVersionError(f"{what} format version {found} is not supported "
                                 f"(expected {DATASET_FORMAT_VERSION})")


def load_dataset(path: Union[str, Path], model: Optional[RobotModel] = None,
                 verify_labels: bool = False) -> Dataset:
    """Read a dataset written by :func:`save_dataset`.

    Parameters
    ----------
    path : str or Path
        HDF5 file.
    model : RobotModel, optional
        When given, the stored model hash must match it.
    verify_labels : bool
        Recompute every label with ``model`` and compare within 1e-6 kg.

    Raises
    ------
    CorruptFileError
        If the file is unreadable, truncated or not a dataset.
    FormatVersionError
        If the format major version differs.
    ModelMismatchError
        If ``model`` does not match the stored hash.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Dataset file not found: {path}")
    try:
        with h5py.File(path, "r") as f:
            if f.attrs.get("magic") != DATASET_MAGIC:
                raise CorruptFileError(f"{path} is not a paydiff dataset")
            _check_version(str(f.attrs["format_version"]), "dataset")
            header = {key: f.attrs[key] for key in ("n_dof", "horizon", "dt", "model_hash", "model_name", "seed")}
            stats = NormalizationStats(center=f.attrs["norm_center"], half_range=f.attrs["norm_half_range"])
            states = f["states"][()]
            m_max = f["m_max"][()]
            problem_ids = f["problem_id"][()]
            tags = [t.decode() if isinstance(t, bytes) else str(t) for t in f["planner_tag"][()]]
    except (OSError, KeyError) as e:
        raise CorruptFileError(f"cannot read dataset {path}: {e}") from e

    if model is not None and model_hash(model) != header["model_hash"]:
        raise ModelMismatchError(
            f"dataset {path} was generated for model {header['model_name']!r} "
            f"(hash {str(header['model_hash'])[:12]}), not {model.name!r} (hash {model_hash(model)[:12]})")

    dt = float(header["dt"])
    samples = [
        Sample(Trajectory(dt=dt, states=states[i]), float(m_max[i]), int(problem_ids[i]), tags[i])
        for i in range(states.shape[0])
    ]
    if verify_labels and model is not None:
        for s in samples:
            recomputed = label_trajectory(model, s.trajectory)
            if abs(recomputed - s.m_max) > LABEL_TOLERANCE:
                raise CorruptFileError(
                    f"label of problem {s.problem_id} is {s.m_max:.6f}, recomputed {recomputed:.6f}")
    seed = int(header["seed"])
    return Dataset(
        samples=samples,
        normalization=stats,
        model_hash=str(header["model_hash"]),
        model_name=str(header["model_name"]),
        seed=None if seed < 0 else seed,
        dt=dt,
        horizon=int(header["horizon"]),
        n_dof=int(header["n_dof"]),
    )
