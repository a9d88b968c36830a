"""
Command-line entry point for the dataset pipeline.

Subcommands: generate, distort, audit, stats, envgen, check-jacobians, track.
Exit code 0 on success, 1 on audit failures, flagged Jacobians and
configuration or domain errors.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from app.config import get_settings, load_planner_config, load_robot, load_tracking_config
from app.core.dataset import STATS_X_LIMIT
from app.core.envgen import BUILDERS
from app.database import catalog_session, init_db
from app.schemas import DistortionSpec, PipelineConfig, PlannerConfig
from app.services import (
    audit_service,
    distortion_service,
    envgen_service,
    generation_service,
    solver_service,
    stats_service,
    tracking_service,
)
from app.utils.validators import resolve_worker_count

logger = logging.getLogger("app.cli")

EXIT_OK = 0
EXIT_FAILURE = 1


# ============================================================================
# Subcommands
# ============================================================================

def cmd_generate(args: argparse.Namespace) -> int:
    """Plan seeds base..base+n-1 and write the dataset directory."""
    planner_config = load_planner_config(args.planner_config or get_settings().planner_config_path)
    updates = {}
    if args.horizon is not None:
        updates["horizon"] = args.horizon
    if args.goal is not None:
        updates["goal_displacement"] = args.goal
    if updates:
        planner_config = PlannerConfig.model_validate({**planner_config.model_dump(), **updates})

    config = PipelineConfig(
        n_clips=args.n_clips,
        output_dir=args.out,
        planner_config_path=args.planner_config,
        robot_config_path=args.robot_config,
        tracking_config_path=args.tracking_config,
        workers=resolve_worker_count(args.workers),
        seed_base=args.seed_base,
        distortion=args.distortion,
        retries=args.retries,
        flat_terrain=args.flat,
        name=args.name,
    )
    model = load_robot(args.robot_config)

    if args.no_catalog:
        summary = generation_service.generate_dataset(config, planner_config, model)
    else:
        init_db()
        with catalog_session() as db:
            summary = generation_service.generate_dataset(config, planner_config, model, db)

    print(f"{summary.n_converged}/{summary.n_attempted} clips converged "
          f"(rate {summary.convergence_rate:.2f}) in {config.output_dir}")
    return EXIT_OK


def cmd_distort(args: argparse.Namespace) -> int:
    spec = DistortionSpec(rng_seed=args.seed, n_rectangles=args.rectangles)
    paths = distortion_service.distort_dataset(args.dataset_dir, spec)
    print(f"Wrote {len(paths)} distorted terrains")
    return EXIT_OK


def cmd_audit(args: argparse.Namespace) -> int:
    model = load_robot(args.robot_config)
    planner_config = load_planner_config(args.planner_config) if args.planner_config else None
    report = audit_service.audit_dataset(args.dataset_dir, model, planner_config, args.tolerance)
    for failure in report.failures:
        print(f"FAIL {failure}")
    print(f"{report.n_clips - report.n_failed}/{report.n_clips} clips passed")
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_stats(args: argparse.Namespace) -> int:
    result = stats_service.compute_stats(args.dataset_dir, args.out, args.x_limit)
    print(result.model_dump_json(indent=2))
    return EXIT_OK


def cmd_envgen(args: argparse.Namespace) -> int:
    result = envgen_service.generate_track_files(args.kind, args.seed, args.out, raw=args.raw)
    print(result.model_dump_json(indent=2))
    return EXIT_OK


def cmd_check_jacobians(args: argparse.Namespace) -> int:
    """Finite-difference Jacobian check of the planner, or of the benchmark problems with --benchmark."""
    if args.benchmark:
        checks = solver_service.check_benchmark_jacobians(args.inject_fault, args.rel_tol)
        benchmarks = solver_service.run_benchmarks()
        for result in benchmarks:
            print(f"benchmark {result.name}: {result.status} violation={result.max_violation:.2e}")
        solved = all(result.converged for result in benchmarks)
    else:
        planner_config = load_planner_config(args.planner_config or get_settings().planner_config_path)
        checks = solver_service.check_planner_jacobians(
            planner_config, load_robot(args.robot_config), args.seed, args.flat, args.inject_fault, args.rel_tol
        )
        solved = True

    for name, check in checks.items():
        mark = "FLAGGED" if check.flagged else "ok"
        print(f"{name:<16} abs={check.max_abs_error:.3e} rel={check.max_rel_error:.3e} {mark}")
    flagged = [name for name, check in checks.items() if check.flagged]
    return EXIT_OK if solved and not flagged else EXIT_FAILURE


def cmd_track(args: argparse.Namespace) -> int:
    config = load_tracking_config(args.tracking_config or get_settings().tracking_config_path)
    evaluation = tracking_service.evaluate_trace_dirs(args.sim_dir, args.ref_dir, config, args.finetune)
    if args.out:
        tracking_service.write_trace_table(evaluation, args.out)
    print(json.dumps({
        "frames": int(len(evaluation.total)),
        "mean_reward": float(evaluation.total.mean()),
        "max_epsilon": float(evaluation.epsilon.max()),
        "first_termination": evaluation.first_termination,
    }, indent=2))
    return EXIT_OK


# ============================================================================
# Parser
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="datagen", description=__doc__.splitlines()[1])
    parser.add_argument("--log-level", default=None, help="Logging level (default from DATAGEN_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="Plan a seed range into a clip dataset")
    p.add_argument("--n-clips", type=int, required=True)
    p.add_argument("--out", type=Path, required=True, help="Dataset directory")
    p.add_argument("--planner-config", type=Path)
    p.add_argument("--robot-config", type=Path)
    p.add_argument("--tracking-config", type=Path)
    p.add_argument("--workers", type=int, help="Worker processes (default: DATAGEN_WORKERS, else 1)")
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--distortion", action="store_true", help="Also write a distorted terrain per clip")
    p.add_argument("--retries", type=int, default=0, help="Extra seeds tried until n clips converged")
    p.add_argument("--flat", action="store_true", help="Plan on flat terrain")
    p.add_argument("--horizon", type=float, help="Override the planner horizon (s)")
    p.add_argument("--goal", type=float, help="Override the goal displacement (m)")
    p.add_argument("--name")
    p.add_argument("--no-catalog", action="store_true", help="Do not record the run in the catalog database")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("distort", help="Write contact-preserving distorted terrains")
    p.add_argument("dataset_dir", type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rectangles", type=int, default=8)
    p.set_defaults(handler=cmd_distort)

    p = sub.add_parser("audit", help="Recompute residuals and clip invariants")
    p.add_argument("dataset_dir", type=Path)
    p.add_argument("--robot-config", type=Path)
    p.add_argument("--planner-config", type=Path)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.set_defaults(handler=cmd_audit)

    p = sub.add_parser("stats", help="Contact distribution and velocity tables")
    p.add_argument("dataset_dir", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--x-limit", type=float, default=STATS_X_LIMIT)
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("envgen", help="Build an evaluation terrain")
    p.add_argument("kind", choices=sorted(BUILDERS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--raw", action="store_true", help="Also write the raw float32 export")
    p.set_defaults(handler=cmd_envgen)

    p = sub.add_parser("check-jacobians", help="Compare analytic and finite-difference Jacobians")
    p.add_argument("--benchmark", action="store_true", help="Check and solve the shipped benchmark problems")
    p.add_argument("--inject-fault", metavar="BLOCK", help="Corrupt the Jacobian of a block before checking")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--flat", action="store_true")
    p.add_argument("--planner-config", type=Path)
    p.add_argument("--robot-config", type=Path)
    p.add_argument("--rel-tol", type=float, default=1e-4)
    p.set_defaults(handler=cmd_check_jacobians)

    p = sub.add_parser("track", help="Rewards and truncation of a simulated trace against a reference clip")
    p.add_argument("sim_dir", type=Path)
    p.add_argument("ref_dir", type=Path)
    p.add_argument("--tracking-config", type=Path)
    p.add_argument("--finetune", action="store_true")
    p.add_argument("--out", type=Path, help="Per-frame TSV table")
    p.set_defaults(handler=cmd_track)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or get_settings().log_level).upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    try:
        return args.handler(args)
    except ValueError as e:
        logger.error(f"{args.command} failed: {str(e)}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
