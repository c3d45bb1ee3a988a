"""The ``ilm`` command: experiments, trajectory runs, replay and map tools."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List

from pydantic import ValidationError

from core.assignment import solve_lap_jv_modified
from core.errors import LocalizationError
from core.field_map import (
    ADULT_FIELD_LENGTH,
    ADULT_FIELD_WIDTH,
    FieldMap,
    generate_default_map,
    load_default_map,
    load_map,
    save_map,
)
from core.geometry import Pose2D
from backend.config import DESK_SAMPLES, FULL_SCALE_SAMPLES, RunConfig, load_run_config
from backend.experiments.bench import bench_estimators, bench_ilm, bench_instances, bench_lap_solvers, matching_cost
from backend.experiments.global_init import global_init_trials, success_rate
from backend.experiments.heatmap import coverage_summary, heatmap
from backend.experiments.noise_sweep import sweep_pose_noise
from backend.experiments.outputs import Table, write_csv, write_summary
from backend.experiments.parallel import default_threads
from backend.experiments.rates import matching_rate_surfaces, random_orientation_rate
from backend.experiments.strategies import compare_strategies
from backend.experiments.timing import BENCH_HEADER
from backend.experiments.trajectory import TRAJECTORY_METHODS, PipelineConfig, TrajectoryRun, run_trajectory
from backend.logging_utils import configure_logging, log_operation
from backend.metrics import write_metrics
from backend.simulation.records import read_records, write_records
from backend.simulation.simulator import generate_trajectory

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

METHOD_ALIASES = {"pf": "ilm+pf", "ekf": "ilm+ekf"}


class UsageError(ValueError):
    """Flag combination rejected before any work starts."""


# ----------------------------------------------------------------------
# argument parsing


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration; flags override its values")
    common.add_argument("--map", dest="map_path", type=str, help="Map file (default: shipped default map)")
    common.add_argument("--seed", type=int, help="Run seed")
    common.add_argument("--out", dest="output_dir", type=str, help="Output directory")
    common.add_argument("--threads", type=int, help="Worker threads (default: available cores)")
    common.add_argument("--samples", type=int, help="Sample count for sampled experiments")
    common.add_argument(
        "--full-scale",
        action="store_true",
        help=f"Use {FULL_SCALE_SAMPLES:,} samples instead of the {DESK_SAMPLES:,} desk-scale default",
    )
    common.add_argument("--log-level", default="WARNING", help="Root log level")
    return common


def _add_strategy(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--strategy",
        choices=("separate", "identical", "parallel_best"),
        help="Landmark matching strategy for ILM",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ilm", description="Landmark localization experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    sub.add_parser("bench", parents=[common], help="Time LAP solvers, pose estimators and ILM")

    p = sub.add_parser("heatmap", parents=[common], help="Correct-matching map over initial guesses")
    p.add_argument("--method", choices=("ilm", "icp"), default="ilm")
    p.add_argument("--max-iter", type=int, nargs="+", help="One or more iteration budgets")
    _add_strategy(p)

    p = sub.add_parser("rates", parents=[common], help="Correct-matching rate against initial offsets")
    p.add_argument("--method", choices=("ilm", "icp", "both"), default="both")
    p.add_argument("--max-iter", type=int, nargs="+")
    _add_strategy(p)

    sub.add_parser("noise-sweep", parents=[common], help="DLT versus Kabsch error under observation noise")

    p = sub.add_parser("trajectory", parents=[common], help="Simulate the goal-box trajectory and localize")
    p.add_argument("--method", choices=TRAJECTORY_METHODS + tuple(METHOD_ALIASES), default="ilm+pf")
    p.add_argument("--spec", choices=("rect",), default="rect", help="Trajectory shape")
    p.add_argument("--global-init", action="store_true", help="Start from a global fix instead of the true pose")
    p.add_argument("--max-iter", type=int, nargs="+")
    _add_strategy(p)

    p = sub.add_parser("global-init", parents=[common], help="Global initialization from the hypothesis set")
    p.add_argument("--max-iter", type=int, nargs="+")
    _add_strategy(p)

    p = sub.add_parser("replay", parents=[common], help="Localize a recorded frame file")
    p.add_argument("records", type=Path, help="Record file written by the trajectory command")
    p.add_argument("--method", choices=TRAJECTORY_METHODS + tuple(METHOD_ALIASES), default="ilm+pf")
    p.add_argument("--global-init", action="store_true")
    p.add_argument("--max-iter", type=int, nargs="+")
    _add_strategy(p)

    p = sub.add_parser("strategies", parents=[common], help="Matching strategies under misclassification")
    p.add_argument("--max-iter", type=int, nargs="+")

    p = sub.add_parser("map", help="Map file tools")
    map_sub = p.add_subparsers(dest="map_command", required=True)
    gen = map_sub.add_parser("generate", help="Write the default landmark layout")
    gen.add_argument("--out", dest="map_out", type=Path, required=True)
    gen.add_argument("--length", type=float, default=ADULT_FIELD_LENGTH)
    gen.add_argument("--width", type=float, default=ADULT_FIELD_WIDTH)
    val = map_sub.add_parser("validate", help="Check a map file")
    val.add_argument("path", type=Path)
    for q in (gen, val):
        q.add_argument("--log-level", default="WARNING")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    method = getattr(args, "method", None)
    strategy = getattr(args, "strategy", None)
    if method == "icp" and strategy is not None:
        raise UsageError("--strategy does not apply to --method icp, which matches without classes")
    max_iter: List[int] | None = getattr(args, "max_iter", None)

    registration: Dict[str, Any] = {"strategy": strategy}
    experiments: Dict[str, Any] = {"samples": args.samples}
    if args.samples is None and args.full_scale:
        experiments["samples"] = FULL_SCALE_SAMPLES
    if max_iter:
        if args.command == "heatmap":
            experiments["heatmap_budgets"] = max_iter
        elif len(max_iter) > 1:
            raise UsageError("--max-iter takes a single budget outside the heatmap command")
        else:
            registration["max_iteration"] = max_iter[0]
    if getattr(args, "global_init", False):
        experiments["global_init"] = True
    return {
        "map_path": args.map_path,
        "seed": args.seed,
        "output_dir": args.output_dir,
        "threads": args.threads,
        "registration": registration,
        "experiments": experiments,
    }


def _resolve(args: argparse.Namespace) -> RunConfig:
    cfg = load_run_config(args.config, _overrides(args))
    if "threads" not in cfg.model_fields_set:
        cfg = cfg.model_copy(update={"threads": default_threads()})
    return cfg


def _field_map(cfg: RunConfig) -> FieldMap:
    return load_map(cfg.map_path) if cfg.map_path else load_default_map()


def pipeline_config(cfg: RunConfig, field_map: FieldMap) -> PipelineConfig:
    return PipelineConfig(
        registration=cfg.registration.to_model(),
        outliers=cfg.outliers.to_model(),
        noise=cfg.filter.to_model(),
        particles=cfg.filter.particles,
        initial_std=cfg.filter.initial_std,
        amcl=cfg.amcl.to_model(),
        hypotheses=cfg.hypotheses.to_model(field_map),
    )


def _summary(cfg: RunConfig, name: str, metrics: Dict[str, Any]) -> Path:
    return write_summary(
        Path(cfg.output_dir) / f"{name}_summary.json",
        experiment=name,
        config_hash=cfg.config_hash(),
        seed=cfg.seed,
        metrics=metrics,
    )


# ----------------------------------------------------------------------
# commands


def cmd_bench(cfg: RunConfig, field_map: FieldMap, args: argparse.Namespace) -> None:
    out = Path(cfg.output_dir)
    n, warmup = cfg.experiments.samples, cfg.experiments.warmup
    sensor = cfg.sensor.to_model()
    records = bench_lap_solvers(n, field_map, sensor, cfg.seed, warmup)
    records += bench_estimators(n, field_map, sensor, cfg.seed, warmup)
    records += bench_ilm(n, field_map, sensor, cfg.seed, warmup, cfg.registration.max_iteration)

    timing = Table(BENCH_HEADER)
    for record in records:
        timing.add(*record.as_row())
    write_csv(out / "bench_timing.csv", timing)

    instances = Table(("instance", "observations", "optimal_cost"))
    for idx, inst in enumerate(bench_instances(n, field_map, sensor, cfg.seed)):
        cost = solve_lap_jv_modified(matching_cost(inst, field_map)).total_cost
        instances.add(idx, len(inst.observations), cost)
    write_csv(out / "bench.csv", instances)
    _summary(cfg, "bench", {"instances": len(instances.rows), "methods": [r.method for r in records]})


def cmd_heatmap(cfg: RunConfig, field_map: FieldMap, args: argparse.Namespace) -> None:
    exp = cfg.experiments
    sensor = cfg.sensor.to_model()
    if not exp.heatmap_noise:
        sensor = replace(sensor, obs_noise_width=0.0, misclassification_rate=0.0)
    grid = heatmap(
        Pose2D(*exp.heatmap_true_pose),
        args.method,
        exp.heatmap_budgets,
        field_map,
        sensor,
        cfg.seed,
        grid_resolution=exp.grid_resolution,
        cfg=cfg.registration.to_model(),
        threads=cfg.threads,
    )
    out = Path(cfg.output_dir)
    write_csv(out / f"heatmap_{args.method}.csv", grid.table())
    write_csv(out / f"coverage_{args.method}.csv", grid.coverage_table())
    _summary(cfg, f"heatmap_{args.method}", {**coverage_summary(grid), "cells": len(grid.cells)})


def cmd_rates(cfg: RunConfig, field_map: FieldMap, args: argparse.Namespace) -> None:
    exp = cfg.experiments
    methods = ("ilm", "icp") if args.method == "both" else (args.method,)
    sensor = cfg.sensor.to_model()
    reg = cfg.registration.to_model()
    table = matching_rate_surfaces(
        methods,
        exp.samples,
        exp.rate_position_offsets,
        exp.rate_angle_offsets_deg,
        field_map,
        sensor,
        cfg.seed,
        cfg=reg,
        threads=cfg.threads,
    )
    write_csv(Path(cfg.output_dir) / "rates.csv", table)
    metrics: Dict[str, Any] = {"rows": len(table.rows)}
    for method in methods:
        metrics[f"random_orientation_rate_{method}"] = random_orientation_rate(
            method, Pose2D(*exp.rate_reference_pose), exp.samples, field_map, sensor, cfg.seed, cfg=reg, threads=cfg.threads
        )
    _summary(cfg, "rates", metrics)


def cmd_noise_sweep(cfg: RunConfig, field_map: FieldMap, args: argparse.Namespace) -> None:
    table = sweep_pose_noise(cfg.experiments.noise_widths, cfg.experiments.samples, field_map, cfg.sensor.to_model(), cfg.seed)
    write_csv(Path(cfg.output_dir) / "noise_sweep.csv", table)
    metrics = {
        f"{rec['method']}_{rec['noise_width']}": {
            "mean_position_error": rec["mean_position_error"],
            "mean_orientation_error": rec["mean_orientation_error"],
        }
        for rec in table.records()
    }
    _summary(cfg, "noise_sweep", metrics)


def _write_run(cfg: RunConfig, run: TrajectoryRun, name: str) -> None:
    out = Path(cfg.output_dir)
    write_csv(out / f"{name}.csv", run.table())
    write_csv(out / f"{name}_timing.csv", run.timing_table())
    _summary(cfg, name, run.summary())


def _method(args: argparse.Namespace) -> str:
    return METHOD_ALIASES.get(args.method, args.method)


def cmd_trajectory(cfg: RunConfig, field_map: FieldMap, args: argparse.Namespace) -> None:
    spec = cfg.trajectory.to_model(field_map)
    sensor = replace(cfg.sensor.to_model(), obs_noise_width=cfg.trajectory.obs_noise_width)
    frames = generate_trajectory(spec, field_map, sensor, cfg.seed)
    write_records(Path(cfg.output_dir) / "trajectory_frames.jsonl", frames, dt=spec.dt, seed=cfg.seed, config_hash=cfg.config_hash())
    method = _method(args)
    run = run_trajectory(
        method,
        frames,
        field_map,
        pipeline_config(cfg, field_map),
        cfg.seed,
        spec.dt,
        global_init=cfg.experiments.global_init,
        threads=cfg.threads,
    )
    _write_run(cfg, run, f"trajectory_{method}")


def cmd_replay(cfg: RunConfig, field_map: FieldMap, args: argparse.Namespace) -> None:
    header, frames = read_records(args.records)
    method = _method(args)
    run = run_trajectory(
        method,
        frames,
        field_map,
        pipeline_config(cfg, field_map),
        header.seed,
        header.dt,
        global_init=cfg.experiments.global_init,
        threads=cfg.threads,
    )
    _write_run(cfg, run, f"replay_{method}")


def cmd_global_init(cfg: RunConfig, field_map: FieldMap, args: argparse.Namespace) -> None:
    table = global_init_trials(
        cfg.experiments.samples,
        field_map,
        cfg.sensor.to_model(),
        cfg.seed,
        cfg.hypotheses.to_model(field_map),
        cfg.registration.to_model(),
        threads=cfg.threads,
    )
    write_csv(Path(cfg.output_dir) / "global_init.csv", table)
    _summary(cfg, "global_init", {"trials": len(table.rows), "success_rate": success_rate(table)})


def cmd_strategies(cfg: RunConfig, field_map: FieldMap, args: argparse.Namespace) -> None:
    table = compare_strategies(
        cfg.experiments.misclassification_rates,
        cfg.experiments.samples,
        field_map,
        cfg.sensor.to_model(),
        cfg.seed,
        cfg=cfg.registration.to_model(),
        threads=cfg.threads,
    )
    write_csv(Path(cfg.output_dir) / "strategies.csv", table)
    metrics = {f"{rec['strategy']}_{rec['misclassification_rate']}": rec["correct_rate"] for rec in table.records()}
    _summary(cfg, "strategies", metrics)


COMMANDS: Dict[str, Callable[[RunConfig, FieldMap, argparse.Namespace], None]] = {
    "bench": cmd_bench,
    "heatmap": cmd_heatmap,
    "rates": cmd_rates,
    "noise-sweep": cmd_noise_sweep,
    "trajectory": cmd_trajectory,
    "replay": cmd_replay,
    "global-init": cmd_global_init,
    "strategies": cmd_strategies,
}


def cmd_map(args: argparse.Namespace) -> int:
    if args.map_command == "generate":
        path = save_map(generate_default_map(args.length, args.width), args.map_out)
        print(f"[OK] wrote {path}")
        return EXIT_OK
    field_map = load_map(args.path)
    print(f"[OK] {args.path}: {len(field_map.landmarks)} landmarks")
    return EXIT_OK


def main(argv: List[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        if args.command == "map":
            return cmd_map(args)
        cfg = _resolve(args)
        field_map = _field_map(cfg)
        with log_operation(LOGGER, args.command, seed=cfg.seed, threads=cfg.threads):
            COMMANDS[args.command](cfg, field_map, args)
        write_metrics(Path(cfg.output_dir) / "metrics.prom")
    except ValidationError as exc:
        print(f"[ERROR] invalid configuration:\n{exc}", file=sys.stderr)
        return EXIT_USAGE
    except LocalizationError as exc:
        print(f"[ERROR] {exc.message}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print(f"[ERROR] {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"[ERROR] {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover - CLI entrypoint
    raise SystemExit(main())
