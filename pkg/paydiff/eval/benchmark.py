"""Success-rate and planning-time benchmarks across planners and payloads.

A run is one (planner, problem, payload, seed) tuple. It succeeds when the
planner returns a trajectory that passes the validity gate at that payload;
the gate is re-run here on every returned trajectory. Per planner and
payload the summary reports success rate, best-of-N rate, mean and standard
deviation of planning time, and two comparisons against a reference
planner (DDIM by default): the planning time factor
``mean time of planner / mean time of reference`` and the relative change
of the success rate.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from ..core.trajectory import Problem
from ..diffusion.sampler import SamplerConfig, diffusion_plan
from ..diffusion.trainer import DiffusionCheckpoint
from ..planners.kinodynamic import kinodynamic_rrt
from ..planners.plan_and_filter import plan_and_filter
from ..planners.result import PlannerConfig, PlannerResult
from ..planners.sqp import sqp_optimize
from ..robot.arm_model import RobotModel
from ..utils.error_handler import safe_execute
from ..utils.logger import get_logger, progress_enabled
from ..world.collision import CollisionProxySet, proxies_for
from .validity import validate

logger = get_logger(__name__)

PlannerFn = Callable[[Problem, float, int], PlannerResult]

PLANNER_NAMES = ("plan_and_filter", "kinodynamic_rrt", "sqp", "ddpm", "ddim")
RUN_COLUMNS = ["planner", "payload", "problem_id", "seed", "status", "success", "best_of_n",
               "planning_time", "failed_checks"]
SUMMARY_COLUMNS = ["planner", "payload", "runs", "success_rate", "best_of_n_rate", "time_mean", "time_std",
                   "time_factor", "success_change"]


@dataclass
class PlannerCall:
    """Picklable ``(problem, payload, seed) -> PlannerResult`` for one named planner."""

    name: str
    model: RobotModel
    proxies: CollisionProxySet
    config: PlannerConfig = field(default_factory=PlannerConfig)
    checkpoint: Optional[DiffusionCheckpoint] = None
    sampler_config: Optional[SamplerConfig] = None

    def __call__(self, problem: Problem, payload: float, seed: int) -> PlannerResult:
        if self.name == "plan_and_filter":
            return plan_and_filter(self.model, problem, payload, rng_seed=seed, proxies=self.proxies,
                                   config=self.config)
        if self.name == "kinodynamic_rrt":
            return kinodynamic_rrt(self.model, problem, payload, rng_seed=seed, proxies=self.proxies,
                                   config=self.config)
        if self.name == "sqp":
            return sqp_optimize(self.model, problem, payload, proxies=self.proxies, config=self.config)
        sampler = self.sampler_config or SamplerConfig(method=self.name)
        return diffusion_plan(self.checkpoint, self.model, problem, payload, config=sampler, rng_seed=seed,
                              proxies=self.proxies)


def make_planner(name: str, model: RobotModel, proxies: Optional[CollisionProxySet] = None,
                 config: Optional[PlannerConfig] = None, checkpoint: Optional[DiffusionCheckpoint] = None,
                 sampler_config: Optional[SamplerConfig] = None) -> PlannerCall:
    """Build a planner callable by name.

    ``ddpm`` and ``ddim`` need a trained ``checkpoint``; for them
    ``sampler_config`` defaults to the method's standard step count.
    """
    if name not in PLANNER_NAMES:
        raise ValueError(f"unknown planner {name!r}, choose from {PLANNER_NAMES}")
    if name in ("ddpm", "ddim"):
        if checkpoint is None:
            raise ValueError(f"planner {name!r} needs a diffusion checkpoint")
        checkpoint.check_model(model)
        if sampler_config is not None and sampler_config.method != name:
            raise ValueError(f"sampler config method {sampler_config.method!r} does not match planner {name!r}")
    return PlannerCall(name, model, proxies if proxies is not None else proxies_for(model),
                       config or PlannerConfig(), checkpoint, sampler_config)


@dataclass
class BenchReport:
    """Per-run records and the per-planner, per-payload summary."""

    runs: pd.DataFrame
    summary: pd.DataFrame
    reference: str = "ddim"

    def rate(self, planner: str, payload: float) -> float:
        row = self.summary[(self.summary.planner == planner) & np.isclose(self.summary.payload, payload)]
        if row.empty:
            raise KeyError(f"no summary row for {planner!r} at {payload} kg")
        return float(row.success_rate.iloc[0])


def _run_one(planner: PlannerFn, name: str, model: RobotModel, proxies: CollisionProxySet, problem: Problem,
             payload: float, seed: int) -> Dict:
    result = planner(problem, payload, seed)
    success, failed = False, []
    if result.trajectory is not None:
        report = validate(model, proxies, problem.scene, result.trajectory, payload,
                          start=problem.start, goal=problem.goal)
        success, failed = report.valid, report.failed
    elif result.diagnostics.get("failed_checks"):
        failed = list(result.diagnostics["failed_checks"])
    best = bool(result.diagnostics.get("best_of_n", success))
    return {
        "planner": name,
        "payload": float(payload),
        "problem_id": int(problem.problem_id),
        "seed": int(seed),
        "status": result.status.value,
        "success": bool(success),
        "best_of_n": best or success,
        "planning_time": float(result.planning_time),
        "failed_checks": ";".join(failed),
    }


def summarize(runs: pd.DataFrame, reference: str = "ddim") -> pd.DataFrame:
    """Aggregate run records per planner and payload.

    ``time_factor`` and ``success_change`` are NaN when the reference
    planner is absent for a payload (or its success rate is zero).
    """
    if runs.empty:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    grouped = runs.groupby(["planner", "payload"], sort=False)
    summary = grouped.agg(
        runs=("success", "size"),
        success_rate=("success", "mean"),
        best_of_n_rate=("best_of_n", "mean"),
        time_mean=("planning_time", "mean"),
        time_std=("planning_time", lambda t: float(np.std(t))),
    ).reset_index()

    ref = summary[summary.planner == reference].set_index("payload")
    factors, changes = [], []
    for row in summary.itertuples():
        if row.payload in ref.index:
            ref_time = float(ref.loc[row.payload, "time_mean"])
            ref_rate = float(ref.loc[row.payload, "success_rate"])
            factors.append(row.time_mean / ref_time if ref_time > 0 else np.nan)
            changes.append((row.success_rate - ref_rate) / ref_rate if ref_rate > 0 else np.nan)
        else:
            factors.append(np.nan)
            changes.append(np.nan)
    summary["time_factor"] = factors
    summary["success_change"] = changes
    summary["success_rate"] = summary["success_rate"].astype(float)
    summary["best_of_n_rate"] = summary["best_of_n_rate"].astype(float)
    return summary[SUMMARY_COLUMNS]


def benchmark(planners: Mapping[str, PlannerFn], problems: Sequence[Problem], payloads: Sequence[float],
              model: RobotModel, seeds: Sequence[int] = (0,), proxies: Optional[CollisionProxySet] = None,
              parallelism: int = 1, reference: str = "ddim") -> BenchReport:
    """Run every planner on every problem, payload and seed.

    Parameters
    ----------
    planners : mapping of str to callable
        ``(problem, payload, seed) -> PlannerResult`` per planner name.
    problems : sequence of Problem
        Task suite.
    payloads : sequence of float
        Payload masses, kg.
    model : RobotModel
        Manipulator used by the validity gate.
    seeds : sequence of int
        Seeds per (problem, payload); a planner error counts as a failure.
    proxies : CollisionProxySet, optional
        Collision spheres of ``model``.
    parallelism : int
        Worker processes; 1 keeps timings free of contention.
    reference : str
        Planner the time factor and success change are relative to.

    Returns
    -------
    BenchReport
    """
    if not planners:
        raise ValueError("benchmark needs at least one planner")
    if len(payloads) == 0:
        raise ValueError("benchmark needs at least one payload")
    proxies = proxies if proxies is not None else proxies_for(model)
    jobs = [(name, problem, float(payload), int(seed))
            for name in planners for payload in payloads for problem in problems for seed in seeds]
    logger.info(f"Benchmarking {len(planners)} planners on {len(problems)} problems x "
                f"{len(payloads)} payloads x {len(seeds)} seeds")

    calls = (delayed(safe_execute)(_run_one, planners[name], name, model, proxies, problem, payload, seed,
                                   module_name="benchmark", context=f"{name} problem {problem.problem_id}")
             for name, problem, payload, seed in jobs)
    if parallelism == 1:
        results = [fn(*args, **kwargs) for fn, args, kwargs in
                   tqdm(calls, total=len(jobs), desc="Benchmark", disable=not progress_enabled(logger))]
    else:
        results = Parallel(n_jobs=parallelism)(calls)

    records = []
    for (name, problem, payload, seed), record in zip(jobs, results):
        if record is None:
            record = {"planner": name, "payload": payload, "problem_id": int(problem.problem_id), "seed": seed,
                      "status": "error", "success": False, "best_of_n": False, "planning_time": np.nan,
                      "failed_checks": "error"}
        records.append(record)
    runs = pd.DataFrame.from_records(records, columns=RUN_COLUMNS)
    return BenchReport(runs=runs, summary=summarize(runs, reference), reference=reference)


def compare_encodings(checkpoints: Mapping[str, DiffusionCheckpoint], model: RobotModel,
                      problems: Sequence[Problem], payloads: Sequence[float], seeds: Sequence[int] = (0,),
                      sampler_config: Optional[SamplerConfig] = None,
                      proxies: Optional[CollisionProxySet] = None, parallelism: int = 1) -> pd.DataFrame:
    """Success rate per payload encoding (one checkpoint each) and payload.

    Returns
    -------
    pandas.DataFrame
        Columns ``encoding, payload, runs, success_rate, best_of_n_rate``.
    """
    if not checkpoints:
        raise ValueError("compare_encodings needs at least one checkpoint")
    proxies = proxies if proxies is not None else proxies_for(model)
    sampler_config = sampler_config or SamplerConfig()
    planners = {label: make_planner(sampler_config.method, model, proxies, checkpoint=ckpt,
                                    sampler_config=sampler_config)
                for label, ckpt in checkpoints.items()}
    report = benchmark(planners, problems, payloads, model, seeds, proxies, parallelism, reference="")
    table = report.summary.rename(columns={"planner": "encoding"})
    return table[["encoding", "payload", "runs", "success_rate", "best_of_n_rate"]]


def timing_spread(runs: pd.DataFrame) -> pd.DataFrame:
    """Coefficient of variation of planning time per planner (successful and failed runs)."""
    stats = runs.groupby("planner", sort=False)["planning_time"].agg(["mean", "std"]).reset_index()
    stats["cv"] = stats["std"] / stats["mean"]
    return stats


def results_by_planner(report: BenchReport) -> Dict[str, List[Dict]]:
    """Summary rows grouped by planner name, for JSON output."""
    out: Dict[str, List[Dict]] = {}
    for row in report.summary.to_dict(orient="records"):
        out.setdefault(row["planner"], []).append(row)
    return out
