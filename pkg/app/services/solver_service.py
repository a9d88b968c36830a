"""
Solver service - Jacobian verification and solver benchmarks.
Backs the check-jacobians command.
"""

import logging
import traceback
from typing import Optional

import numpy as np
from pydantic import BaseModel

from app.core import nlp
from app.core.nlp import JacobianCheck, NlpProblem
from app.core.planner import build_problem, initialize_variables
from app.core.robot_model import RobotModel
from app.schemas import PlannerConfig
from app.services.generation_service import seed_terrain

logger = logging.getLogger(__name__)


class BenchmarkResult(BaseModel):
    name: str
    status: str
    max_violation: float
    iterations: int
    converged: bool


def inject_jacobian_fault(problem: NlpProblem, block_name: str, scale: float = 0.1) -> None:
    """
    Corrupt the analytic Jacobian of one block in place.

    The first row gains an offset of scale * max(1, max|J|) in every column;
    residuals are left untouched so finite differences disagree.

    Raises:
        ValueError: If the problem has no block with that name
    """
    try:
        block = problem.block(block_name)
    except KeyError as e:
        raise ValueError(f"No constraint block named '{block_name}'") from e
    original = block.function

    def faulty(x: np.ndarray, need_jacobian: bool):
        values, jac = original(x, need_jacobian)
        if need_jacobian and jac is not None and jac.shape[0] > 0:
            jac = np.array(jac, dtype=float)
            jac[0] += scale * max(1.0, float(np.abs(jac).max()))
        return values, jac

    block.function = faulty
    logger.info(f"Injected Jacobian fault into block '{block_name}'")


def check_problem(
    problem: NlpProblem,
    x: np.ndarray,
    fault_block: Optional[str] = None,
    rel_tol: float = 1e-4,
) -> dict[str, JacobianCheck]:
    """Finite-difference check of every block, optionally after injecting a fault."""
    if fault_block:
        inject_jacobian_fault(problem, fault_block)
    return nlp.check_jacobians(problem, x, rel_tol=rel_tol)


def check_planner_jacobians(
    planner_config: PlannerConfig,
    model: RobotModel,
    seed: int = 0,
    flat: bool = False,
    fault_block: Optional[str] = None,
    rel_tol: float = 1e-4,
) -> dict[str, JacobianCheck]:
    """
    Check the planner's Jacobians at the initial guess of a seed.

    Args:
        planner_config: Planner configuration
        model: Robot description
        seed: Terrain and initialization seed
        flat: Use flat terrain instead of the procedural one
        fault_block: Block whose Jacobian is corrupted first
        rel_tol: Threshold above which a block is flagged

    Returns:
        dict: Block name to JacobianCheck
    """
    try:
        problem = build_problem(seed_terrain(seed, flat), model, planner_config, seed)
        x0 = initialize_variables(problem, seed)
        results = check_problem(problem, x0, fault_block, rel_tol)
        flagged = [name for name, check in results.items() if check.flagged]
        logger.info(f"Checked {len(results)} planner blocks for seed {seed}; flagged: {flagged or 'none'}")
        return results
    except ValueError:
        raise
    except Exception as e:
        logger.error(f"Error checking planner Jacobians for seed {seed}: {str(e)}\n{traceback.format_exc()}")
        raise


def check_benchmark_jacobians(fault_block: Optional[str] = None, rel_tol: float = 1e-4) -> dict[str, JacobianCheck]:
    """
    Check the Jacobians of the shipped benchmark problems at their starting points.

    Raises:
        ValueError: If fault_block names no benchmark block
    """
    benchmarks = nlp.benchmark_problems()
    if fault_block and not any(fault_block == block.name for b in benchmarks for block in b.problem.blocks):
        raise ValueError(f"No constraint block named '{fault_block}'")
    results = {}
    for bench in benchmarks:
        names = {block.name for block in bench.problem.blocks}
        results.update(check_problem(bench.problem, bench.x0, fault_block if fault_block in names else None, rel_tol))
    return results


def run_benchmarks() -> list[BenchmarkResult]:
    """Solve every shipped benchmark problem and report the outcome."""
    results = []
    for bench in nlp.benchmark_problems():
        _, report = nlp.solve(bench.problem, bench.x0, bench.options)
        results.append(BenchmarkResult(
            name=bench.name,
            status=report.status,
            max_violation=report.max_violation,
            iterations=report.iterations,
            converged=report.converged,
        ))
        logger.info(f"Benchmark {bench.name}: {report.status} (violation {report.max_violation:.2e})")
    return results
