"""Command line interface for paydiff.

One ``paydiff`` executable with a subcommand per pipeline stage::

    paydiff model --preset planar2 --info
    paydiff datagen --preset planar2 --n 500 --seed 0 --out runs/data
    paydiff train --dataset runs/data/dataset.h5 --seed 0 --out runs/train
    paydiff sample --ckpt runs/train/checkpoint.h5 --payload 6 --sampler ddim --steps 5 --out runs/sample
    paydiff eval --traj runs/sample/trajectory.bin --preset planar2 --payload 0 6
    paydiff bench --preset planar2 --ckpt runs/train/checkpoint.h5 --payload 0 6 12 --out runs/bench
    paydiff workspace --preset planar2 --planner plan_and_filter --payload 0 6 --out runs/ws

Every subcommand prints one JSON summary line on stdout as its last line.
Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 acceptance
criteria violated.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import psutil

from . import __version__
from .core.run_manager import RunConfig, RunManager
from .core.trajectory import Problem
from .core.trajectory_io import dump_trajectory_json, load_trajectory, load_trajectory_json, save_trajectory
from .utils.config import load_config
from .utils.error_handler import CriteriaViolation, ModelValidationError, critical_error_boundary
from .utils.logger import get_logger, set_verbosity, setup_file_logging

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CRITERIA = 3

DEFAULT_PAYLOADS = (0.0, 3.0, 6.0, 9.0, 12.0)
ENCODING_CHOICES = ("numeric", "one_hot", "less_than", "supported_range")


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_model_args(parser: argparse.ArgumentParser, required: bool = False) -> None:
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--preset", help="Built-in model: planar2, planar3 or arm7")
    group.add_argument("--model", help="Model JSON file (or a preset name)")


def _add_common_args(parser: argparse.ArgumentParser, out_required: bool = False, threads: bool = False) -> None:
    parser.add_argument("--seed", type=int, default=0, help="Root seed of all randomness (default: 0)")
    parser.add_argument("--out", required=out_required, help="Output directory")
    if threads:
        parser.add_argument("--threads", type=int, default=None,
                            help="Worker processes (default: logical CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paydiff",
        description="paydiff: payload-conditioned diffusion trajectories and classical baselines",
    )
    parser.add_argument("--version", action="version", version=f"paydiff {__version__}")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("model", help="Inspect or export a robot model")
    _add_model_args(p)
    p.add_argument("--info", action="store_true", help="Print joint limits and dynamics summary")
    p.add_argument("--out", help="Write the model as model.json into this directory")

    p = sub.add_parser("datagen", help="Generate a labeled zero-payload trajectory dataset")
    _add_model_args(p)
    p.add_argument("--n", type=int, required=True, help="Number of trajectories")
    p.add_argument("--config", help="JSON/TOML file with a [planner] table")
    _add_common_args(p, out_required=True, threads=True)

    p = sub.add_parser("train", help="Train the payload-conditioned denoiser")
    p.add_argument("--dataset", required=True, help="Dataset file written by datagen")
    p.add_argument("--config", help="JSON/TOML file with [denoiser], [schedule], [train] and [encoding] tables")
    p.add_argument("--encoding", choices=ENCODING_CHOICES, help="Payload encoding scheme")
    p.add_argument("--steps", type=int, help="Optimizer steps (overrides the config file)")
    p.add_argument("--resume", help="Continue from this checkpoint")
    _add_common_args(p, out_required=True)

    p = sub.add_parser("sample", help="Sample a trajectory for a payload")
    p.add_argument("--ckpt", required=True, help="Checkpoint written by train")
    p.add_argument("--payload", type=float, required=True, help="Payload mass, kg")
    p.add_argument("--encoding", choices=ENCODING_CHOICES,
                   help="Expected encoding; for supported_range checkpoints one_hot or less_than "
                        "selects how the payload is queried")
    p.add_argument("--sampler", choices=("ddpm", "ddim"), default="ddim")
    p.add_argument("--steps", type=int, default=5, help="DDIM steps (default: 5)")
    p.add_argument("--eta", type=float, default=0.0, help="DDIM stochasticity (default: 0)")
    p.add_argument("--guidance", type=float, default=0.1, help="Collision guidance weight (default: 0.1)")
    p.add_argument("--samples", type=int, default=1, help="Candidates drawn at once (default: 1)")
    p.add_argument("--start", help="Comma-separated start joint positions")
    p.add_argument("--goal", help="Comma-separated goal joint positions")
    p.add_argument("--scene", help="Scene JSON file")
    p.add_argument("--plot", action="store_true", help="Also write trajectory.svg")
    _add_model_args(p)
    _add_common_args(p)

    p = sub.add_parser("eval", help="Run the validity gate on trajectory files")
    p.add_argument("--traj", nargs="+", required=True, help="Trajectory files (.bin or .json)")
    p.add_argument("--payload", type=float, nargs="+", default=[0.0], help="Payloads to check, kg")
    p.add_argument("--scene", help="Scene JSON file (default: no obstacles)")
    p.add_argument("--criteria", help="Acceptance criteria JSON file")
    p.add_argument("--formats", nargs="+", default=["csv", "json"], choices=("csv", "json", "svg"))
    _add_model_args(p, required=True)
    _add_common_args(p)

    p = sub.add_parser("bench", help="Benchmark planners over payloads")
    _add_model_args(p)
    p.add_argument("--planners", nargs="+", help="Planner names (default: all available)")
    p.add_argument("--ckpt", help="Checkpoint for the ddpm and ddim planners")
    p.add_argument("--encoding-ckpt", action="append", default=[], metavar="LABEL=PATH",
                   help="Checkpoint per encoding for the encoding comparison (repeatable)")
    p.add_argument("--payload", type=float, nargs="+", default=list(DEFAULT_PAYLOADS), help="Payloads, kg")
    p.add_argument("--problems", type=int, default=10, help="Number of problems (default: 10)")
    p.add_argument("--seeds", type=int, default=1, help="Seeds per problem and payload (default: 1)")
    p.add_argument("--steps", type=int, default=5, help="DDIM steps (default: 5)")
    p.add_argument("--samples", type=int, default=1, help="Diffusion candidates per call (default: 1)")
    p.add_argument("--reference", help="Reference planner for time factors (default: ddim when present)")
    p.add_argument("--config", help="JSON/TOML file with [planner] and [sampler] tables")
    p.add_argument("--criteria", help="Acceptance criteria JSON file")
    p.add_argument("--formats", nargs="+", default=["csv", "json", "svg"], choices=("csv", "json", "svg"))
    _add_common_args(p, threads=True)

    p = sub.add_parser("workspace", help="Map accessible tabletop cells per payload")
    _add_model_args(p)
    p.add_argument("--planner", default="plan_and_filter", help="Planner name (default: plan_and_filter)")
    p.add_argument("--ckpt", help="Checkpoint for the ddpm and ddim planners")
    p.add_argument("--payload", type=float, nargs="+", default=list(DEFAULT_PAYLOADS), help="Payloads, kg")
    p.add_argument("--attempts", type=int, default=5, help="Planner calls per cell (default: 5)")
    p.add_argument("--steps", type=int, default=5, help="DDIM steps (default: 5)")
    p.add_argument("--config", help="JSON/TOML file with [planner], [sampler] and [grid] tables")
    p.add_argument("--criteria", help="Acceptance criteria JSON file")
    p.add_argument("--formats", nargs="+", default=["csv", "json", "svg"], choices=("csv", "json", "svg"))
    _add_common_args(p, threads=True)

    return parser


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _run_config(args: argparse.Namespace) -> RunConfig:
    known = {"command", "model", "preset", "scene", "dataset", "ckpt", "seed", "threads", "out", "criteria",
             "debug"}
    options = {k: v for k, v in vars(args).items() if k not in known and v is not None}
    return RunConfig(
        command=args.command,
        model=getattr(args, "model", None) or getattr(args, "preset", None),
        scene=getattr(args, "scene", None),
        dataset=getattr(args, "dataset", None),
        checkpoint=getattr(args, "ckpt", None),
        seed=args.seed if hasattr(args, "seed") else 0,
        threads=getattr(args, "threads", None),
        out=getattr(args, "out", None),
        criteria=getattr(args, "criteria", None),
        options=options,
    )


def _threads(args: argparse.Namespace) -> int:
    value = getattr(args, "threads", None)
    if value is None:
        return psutil.cpu_count(logical=True) or 1
    if value < 1:
        raise ValueError(f"--threads must be >= 1, got {value}")
    return value


def _load_model(args: argparse.Namespace, default: Optional[str] = "planar2"):
    from .robot.model_io import resolve_model
    from .robot.presets import get_preset

    if getattr(args, "preset", None):
        return get_preset(args.preset)
    if getattr(args, "model", None):
        return resolve_model(args.model)
    if default is None:
        raise ValueError("a robot model is required (--preset or --model)")
    return get_preset(default)


def _section(config: Dict[str, Any], name: str, allowed: Sequence[str]) -> Dict[str, Any]:
    unknown = set(config) - set(allowed)
    if unknown:
        raise ModelValidationError(sorted(unknown)[0], "unknown configuration table")
    return dict(config.get(name, {}))


def _read_config(path: Optional[str], allowed: Sequence[str]) -> Dict[str, Dict[str, Any]]:
    data = load_config(path) if path else {}
    return {name: _section(data, name, allowed) for name in allowed}


def _vector(text: str, name: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ValueError(f"--{name} must be comma-separated numbers, got {text!r}")


def _load_any_trajectory(path: str):
    return load_trajectory_json(path) if Path(path).suffix.lower() == ".json" else load_trajectory(path)


def _apply_criteria(args: argparse.Namespace, table: pd.DataFrame, out: Optional[Path],
                    artifacts: List[Path]) -> Dict[str, Any]:
    from .eval.criteria import evaluate_criteria, load_criteria

    if not getattr(args, "criteria", None):
        return {}
    criteria = load_criteria(args.criteria)
    results = evaluate_criteria(table, criteria)
    failed = [r for r in results if not r.passed]
    if out is not None:
        path = out / "criteria.json"
        with open(path, "w") as f:
            json.dump([r.to_dict() for r in results], f, indent=2)
        artifacts.append(path)
    for r in failed:
        logger.warning(f"Criterion failed: {r.criterion.describe()} (value {r.value})")
    summary = {"criteria": len(results), "criteria_failed": len(failed)}
    if failed:
        raise CriteriaViolation("; ".join(r.criterion.describe() for r in failed))
    return summary


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_model(args: argparse.Namespace, out: Optional[Path], artifacts: List[Path]) -> Dict[str, Any]:
    from .robot.model_io import model_hash, save_model

    model = _load_model(args)
    if args.info:
        print(f"model: {model.name}")
        print(f"n_dof: {model.n_dof}")
        print(f"nominal payload: {model.nominal_payload:g} kg")
        for j, joint in enumerate(model.joints):
            print(f"{joint.name}: q [{model.q_min[j]:.4f}, {model.q_max[j]:.4f}] rad, "
                  f"v {model.v_max[j]:g}, a {model.a_max[j]:g}, j {model.j_max[j]:g}, tau {model.tau_max[j]:g}")
    if out is not None:
        artifacts.append(save_model(model, out / "model.json"))
    return {"model": model.name, "n_dof": model.n_dof, "model_hash": model_hash(model),
            "q_min": model.q_min.tolist(), "q_max": model.q_max.tolist()}


def _cmd_datagen(args: argparse.Namespace, out: Path, artifacts: List[Path]) -> Dict[str, Any]:
    from .data.dataset import generate_dataset, payload_histogram, save_dataset
    from .planners.result import PlannerConfig

    model = _load_model(args)
    config = _read_config(args.config, ("planner",))
    planner_config = PlannerConfig.from_dict(config["planner"])
    dataset = generate_dataset(model, args.n, planner_config, parallelism=_threads(args), seed=args.seed)
    artifacts.append(save_dataset(dataset, out / "dataset.h5"))
    counts, edges = payload_histogram(dataset)
    labels = dataset.labels()
    return {"samples": len(dataset), "label_mean": float(np.mean(labels)),
            "above_nominal": int(np.sum(labels > model.nominal_payload)),
            "histogram": {f"{lo:g}": int(c) for lo, c in zip(edges[:-1], counts)}}


def _cmd_train(args: argparse.Namespace, out: Path, artifacts: List[Path]) -> Dict[str, Any]:
    from .data.dataset import load_dataset
    from .diffusion.encoding import EncodingScheme, PayloadEncoding
    from .diffusion.schedule import NoiseSchedule, ScheduleConfig
    from .diffusion.trainer import TrainConfig, load_diffusion_checkpoint, train
    from .diffusion.unet import DenoiserConfig

    dataset = load_dataset(args.dataset)
    config = _read_config(args.config, ("denoiser", "schedule", "train", "encoding"))
    train_config = TrainConfig.from_dict(config["train"])
    if args.steps is not None:
        train_config.steps = args.steps
    encoding_data = config["encoding"]
    if args.encoding:
        encoding_data["scheme"] = args.encoding
    encoding = PayloadEncoding.from_dict({"scheme": EncodingScheme.ONE_HOT.value, **encoding_data})
    resume = load_diffusion_checkpoint(args.resume) if args.resume else None

    path = out / "checkpoint.h5"
    ckpt = train(dataset, train_config, NoiseSchedule.from_dict(config["schedule"]), seed=args.seed,
                 denoiser_config=DenoiserConfig.from_dict(config["denoiser"]), encoding=encoding, out=path,
                 resume=resume)
    artifacts.append(path)
    history = ckpt.metadata.get("loss_history", [])
    return {"steps": int(ckpt.metadata.get("step", 0)), "encoding": ckpt.encoding.scheme.value,
            "final_loss": float(np.mean(history[-10:])) if history else None}


def _checkpoint_with_encoding(path: str, encoding: Optional[str]):
    from .diffusion.encoding import EncodingScheme
    from .diffusion.trainer import load_diffusion_checkpoint

    ckpt = load_diffusion_checkpoint(path)
    if encoding is None or encoding == ckpt.encoding.scheme.value:
        return ckpt
    if ckpt.encoding.scheme == EncodingScheme.SUPPORTED_RANGE and encoding in ("one_hot", "less_than"):
        ckpt.encoding.interpretation = encoding
        return ckpt
    raise ValueError(f"checkpoint {path} uses the {ckpt.encoding.scheme.value} encoding, not {encoding}")


def _cmd_sample(args: argparse.Namespace, out: Optional[Path], artifacts: List[Path]) -> Dict[str, Any]:
    from .data.problems import problem_suite
    from .diffusion.sampler import SamplerConfig, diffusion_plan
    from .robot.model_io import resolve_model
    from .visualization.plot_utils import PlotUtilities
    from .world.scene import Scene, load_scene

    ckpt = _checkpoint_with_encoding(args.ckpt, args.encoding)
    model = _load_model(args, default=None) if (args.preset or args.model) else resolve_model(ckpt.model_name)
    ckpt.check_model(model)

    if (args.start is None) != (args.goal is None):
        raise ValueError("--start and --goal must be given together")
    if args.start is not None:
        scene = load_scene(args.scene) if args.scene else Scene()
        problem = Problem(_vector(args.start, "start"), _vector(args.goal, "goal"), scene, args.payload)
    else:
        problem = problem_suite(model, 1, seed=args.seed)[0]
        if args.scene:
            problem.scene = load_scene(args.scene)
    problem.payload = args.payload

    config = SamplerConfig(method=args.sampler, steps=args.steps, eta=args.eta, guidance_weight=args.guidance,
                           n_candidates=args.samples)
    result = diffusion_plan(ckpt, model, problem, args.payload, config, rng_seed=args.seed)
    traj = result.candidates[0]
    if out is not None:
        artifacts.append(save_trajectory(traj, out / "trajectory.bin"))
        meta = {"payload": args.payload, "seed": args.seed, "sampler": config.to_dict(),
                "valid": result.success, "failed_checks": result.diagnostics.get("failed_checks", [])}
        artifacts.append(dump_trajectory_json(traj, out / "trajectory.json", metadata=meta))
        if args.plot:
            fig = PlotUtilities.plot_trajectory_states(traj, model, title=f"{args.sampler} sample at {args.payload:g} kg")
            artifacts.append(PlotUtilities.save_figure(fig, out / "trajectory.svg"))
    return {"valid": result.success, "best_of_n": bool(result.diagnostics.get("best_of_n", result.success)),
            "failed_checks": list(result.diagnostics.get("failed_checks", [])),
            "planning_time": result.planning_time,
            "start_error": float(np.abs(traj.q[0] - problem.start).max()),
            "goal_error": float(np.abs(traj.q[-1] - problem.goal).max())}


def _cmd_eval(args: argparse.Namespace, out: Optional[Path], artifacts: List[Path]) -> Dict[str, Any]:
    from .eval.report import emit_report
    from .eval.validity import validate
    from .robot.dynamics import max_supported_payload
    from .world.collision import proxies_for
    from .world.scene import Scene, load_scene

    model = _load_model(args, default=None)
    scene = load_scene(args.scene) if args.scene else Scene()
    proxies = proxies_for(model)
    rows = []
    for path in args.traj:
        traj = _load_any_trajectory(path)
        m_max = max_supported_payload(model, traj)
        for payload in args.payload:
            report = validate(model, proxies, scene, traj, payload)
            rows.append({"planner": Path(path).stem, "payload": float(payload),
                         "success_rate": float(report.valid), "m_max": m_max,
                         "failed_checks": ";".join(report.failed)})
    table = pd.DataFrame(rows)
    if out is not None:
        artifacts.extend(emit_report(table, out, args.formats, stem="eval",
                                     metadata={"seed": args.seed, "model": model.name}).values())
    criteria = _apply_criteria(args, table, out, artifacts)
    return {"trajectories": len(args.traj), "checks": len(rows),
            "valid": int(table["success_rate"].sum()), **criteria}


def _planner_configs(path: Optional[str], allowed: Sequence[str]):
    from .planners.result import PlannerConfig

    config = _read_config(path, allowed)
    return PlannerConfig.from_dict(config["planner"]), config


def _cmd_bench(args: argparse.Namespace, out: Optional[Path], artifacts: List[Path]) -> Dict[str, Any]:
    from .data.problems import problem_suite
    from .diffusion.sampler import SamplerConfig
    from .eval.benchmark import PLANNER_NAMES, benchmark, compare_encodings, make_planner, timing_spread
    from .eval.report import emit_report
    from .world.collision import proxies_for

    model = _load_model(args)
    proxies = proxies_for(model)
    planner_config, config = _planner_configs(args.config, ("planner", "sampler"))
    ckpt = _checkpoint_with_encoding(args.ckpt, None) if args.ckpt else None
    names = args.planners or [n for n in PLANNER_NAMES if ckpt is not None or n not in ("ddpm", "ddim")]

    planners = {}
    for name in names:
        sampler = None
        if name in ("ddpm", "ddim"):
            sampler = SamplerConfig.from_dict({"steps": args.steps, "n_candidates": args.samples,
                                               **config["sampler"], "method": name})
        planners[name] = make_planner(name, model, proxies, planner_config, ckpt, sampler)
    reference = args.reference or ("ddim" if "ddim" in planners else names[0])
    problems = problem_suite(model, args.problems, seed=args.seed, proxies=proxies)
    seeds = [args.seed + i for i in range(args.seeds)]
    threads = _threads(args)

    report = benchmark(planners, problems, args.payload, model, seeds, proxies, threads, reference)
    summary: Dict[str, Any] = {"runs": len(report.runs), "reference": reference,
                               "success_rate": {f"{r.planner}@{r.payload:g}": r.success_rate
                                                for r in report.summary.itertuples()}}
    if out is not None:
        meta = {"seed": args.seed, "model": model.name, "problems": args.problems, "seeds": seeds}
        artifacts.extend(emit_report(report, out, args.formats, stem="summary", metadata=meta).values())
        artifacts.extend(emit_report(report.runs, out, ["csv"], stem="runs").values())
        artifacts.extend(emit_report(timing_spread(report.runs), out, ["csv"], stem="timing").values())

    if args.encoding_ckpt:
        checkpoints = {}
        for item in args.encoding_ckpt:
            label, sep, path = item.partition("=")
            if not sep:
                raise ValueError(f"--encoding-ckpt expects LABEL=PATH, got {item!r}")
            checkpoints[label] = _checkpoint_with_encoding(path, None)
        sampler = SamplerConfig.from_dict({"steps": args.steps, "n_candidates": args.samples, **config["sampler"]})
        table = compare_encodings(checkpoints, model, problems, args.payload, seeds, sampler, proxies, threads)
        if out is not None:
            artifacts.extend(emit_report(table, out, args.formats, stem="encodings", series="encoding").values())
        summary["encodings"] = sorted(checkpoints)

    criteria = _apply_criteria(args, report.summary, out, artifacts)
    summary.update(criteria)
    return summary


def _cmd_workspace(args: argparse.Namespace, out: Optional[Path], artifacts: List[Path]) -> Dict[str, Any]:
    from .diffusion.sampler import SamplerConfig
    from .eval.benchmark import make_planner
    from .eval.report import emit_report
    from .eval.workspace import GridSpec, default_grid, workspace_sweep
    from .visualization.plot_utils import PlotUtilities
    from .world.collision import proxies_for

    model = _load_model(args)
    proxies = proxies_for(model)
    planner_config, config = _planner_configs(args.config, ("planner", "sampler", "grid"))
    ckpt = _checkpoint_with_encoding(args.ckpt, None) if args.ckpt else None
    sampler = None
    if args.planner in ("ddpm", "ddim"):
        sampler = SamplerConfig.from_dict({"steps": args.steps, **config["sampler"], "method": args.planner})
    planner = make_planner(args.planner, model, proxies, planner_config, ckpt, sampler)
    grid = GridSpec.from_dict(config["grid"]) if config["grid"] else default_grid(model)

    table, maps = workspace_sweep(model, planner, args.payload, grid, args.attempts, args.seed,
                                  parallelism=_threads(args), proxies=proxies)
    table.insert(0, "planner", args.planner)
    if out is not None:
        meta = {"seed": args.seed, "model": model.name, "grid": grid.to_dict(), "attempts": args.attempts}
        artifacts.extend(emit_report(table, out, args.formats, stem="workspace", value="fraction",
                                     metadata=meta).values())
        cells = pd.concat([m.to_frame() for m in maps], ignore_index=True)
        artifacts.extend(emit_report(cells, out, ["csv"], stem="cells").values())
        if "svg" in args.formats:
            for m in maps:
                fig = PlotUtilities.plot_workspace_map(m.points, m.reachable, m.accessible, m.payload)
                artifacts.append(PlotUtilities.save_figure(fig, out / f"workspace_{m.payload:g}kg.svg"))

    criteria = _apply_criteria(args, table, out, artifacts)
    fractions = {f"{p:g}": None if np.isnan(f) else float(f) for p, f in zip(table.payload, table.fraction)}
    return {"planner": args.planner, "fraction": fractions,
            "baseline_cells": int(table.baseline.iloc[0]), **criteria}


COMMANDS = {
    "model": _cmd_model,
    "datagen": _cmd_datagen,
    "train": _cmd_train,
    "sample": _cmd_sample,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
    "workspace": _cmd_workspace,
}


@critical_error_boundary
def run_command(args: argparse.Namespace, artifacts: List[Path]) -> Dict[str, Any]:
    out = Path(args.out) if getattr(args, "out", None) else None
    return COMMANDS[args.command](args, out, artifacts)


def _print_summary(command: str, status: str, exit_code: int, data: Dict[str, Any]) -> None:
    print(json.dumps({"command": command, "status": status, "exit_code": exit_code, **data}, default=str))


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point for paydiff.

    Parameters
    ----------
    argv : sequence of str, optional
        Arguments without the program name; defaults to ``sys.argv[1:]``.

    Returns
    -------
    int
        Exit code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    if args.debug:
        set_verbosity(logging.DEBUG)

    config = _run_config(args)
    run = RunManager()
    artifacts: List[Path] = []
    try:
        config.check_paths()
        if config.out is not None:
            setup_file_logging(Path(config.out), level=logging.DEBUG if args.debug else logging.INFO)
        run.start(config, argv)
        summary = run_command(args, artifacts)
    except CriteriaViolation as e:
        logger.error(f"Acceptance criteria violated: {e}")
        run.finish("criteria_violated", artifacts, {"error": str(e)})
        _print_summary(args.command, "criteria_violated", EXIT_CRITERIA, {"error": str(e)})
        return EXIT_CRITERIA
    except Exception as e:
        if not run.get_record():
            logger.error(f"{args.command} failed: {e}")
        run.finish("failed", artifacts, {"error": str(e)})
        _print_summary(args.command, "failed", EXIT_FAILURE, {"error": f"{type(e).__name__}: {e}"})
        return EXIT_FAILURE

    run.finish("ok", artifacts, summary)
    if run.path is not None:
        artifacts.append(run.path)
    _print_summary(args.command, "ok", EXIT_OK, {**summary, "artifacts": [str(a) for a in artifacts]})
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
