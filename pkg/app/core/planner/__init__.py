"""
Centroidal trajectory planning: problem assembly, initialization, solve and audit.
"""

import logging
from typing import Optional

from app.core import nlp
from app.core.heightfield import HeightField
from app.core.planner.audit import AuditReport, audit_solution
from app.core.planner.initialization import initialize_variables
from app.core.planner.layout import VariableLayout, build_layout, variable_count
from app.core.planner.problem import CentroidalProblem, build_problem, goal_position, planning_surface
from app.core.planner.solution import (
    CentroidalSolution,
    load_solution,
    reconstruct_solution,
    save_solution,
)
from app.core.robot_model import RobotModel
from app.schemas import PlannerConfig

logger = logging.getLogger(__name__)

__all__ = [
    "AuditReport",
    "CentroidalProblem",
    "CentroidalSolution",
    "VariableLayout",
    "audit_solution",
    "build_layout",
    "build_problem",
    "goal_position",
    "initialize_variables",
    "load_solution",
    "plan",
    "planning_surface",
    "reconstruct_solution",
    "save_solution",
    "variable_count",
]


def plan(
    terrain: HeightField,
    model: RobotModel,
    config: PlannerConfig,
    rng_seed: int,
    terrain_seed: Optional[int] = None,
    solver: Optional[nlp.SolverAdapter] = None,
) -> CentroidalSolution:
    """
    Plan one trajectory over a terrain.

    Solver failures do not raise: the returned solution carries a
    non-converged report and callers filter on solution.converged.

    Args:
        terrain: Terrain to walk over
        model: Robot description
        config: Planner configuration (config.solve holds the solver options)
        rng_seed: Seed of the initialization noise
        terrain_seed: Seed the terrain was generated from, recorded with the solution
        solver: Alternative solver implementation

    Returns:
        CentroidalSolution: Reconstructed splines and the solve report

    Raises:
        ProblemBuildError: If the start or goal stance lies off the terrain

    Example:
        >>> solution = plan(flat_terrain(), model, PlannerConfig(horizon=2.0, goal_displacement=0.5), rng_seed=0)
        >>> solution.converged
        True
    """
    problem = build_problem(terrain, model, config, rng_seed)
    x0 = initialize_variables(problem, rng_seed)
    options = config.solve.model_copy(update={"seed": rng_seed})
    x, report = nlp.solve(problem, x0, options=options, solver=solver)

    if problem.context.clamped_queries:
        logger.warning(
            f"Seed {rng_seed}: {problem.context.clamped_queries} terrain queries were clamped to the footprint edge"
        )

    solution = reconstruct_solution(problem.layout, x, report, config, rng_seed, terrain_seed)
    logger.info(
        f"Planned seed={rng_seed}: status={report.status} violation={report.max_violation:.2e} "
        f"time={report.wall_time_s:.1f}s"
    )
    return solution
