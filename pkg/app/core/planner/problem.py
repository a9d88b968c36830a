"""
Assembly of the centroidal planning problem.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.core.heightfield import HeightField, embed_terrain, height_at
from app.core.nlp import NlpProblem
from app.core.planner.constraints import (
    ConstraintContext,
    boundary_block,
    dynamics_block,
    force_grid_block,
    force_node_block,
    kinematic_box_block,
    leg_reach_block,
    phase_duration_block,
    stance_height_block,
    swing_grid_block,
    swing_node_block,
)
from app.core.planner.layout import VariableLayout, build_layout
from app.core.robot_model import RobotModel
from app.exceptions import ProblemBuildError
from app.schemas import PlannerConfig

logger = logging.getLogger(__name__)


@dataclass
class CentroidalProblem(NlpProblem):
    """NlpProblem together with the layout and context it was built from."""

    layout: Optional[VariableLayout] = None
    context: Optional[ConstraintContext] = None
    rng_seed: int = 0

    @property
    def surface(self) -> HeightField:
        return self.context.surface

    @property
    def model(self) -> RobotModel:
        return self.context.model

    @property
    def config(self) -> PlannerConfig:
        return self.context.config


def planning_surface(terrain: HeightField, config: PlannerConfig) -> HeightField:
    """
    Surface the planner walks on: the terrain centered in the planning canvas.

    Fields at least as large as the canvas are used unchanged.
    """
    rows, cols = config.planning_canvas
    if terrain.rows >= rows and terrain.cols >= cols:
        return terrain
    return embed_terrain(terrain, max(rows, terrain.rows), max(cols, terrain.cols))


def goal_position(config: PlannerConfig) -> np.ndarray:
    return np.array(config.start_xy, dtype=float) + np.array([config.goal_displacement, 0.0])


def _check_coverage(surface: HeightField, model: RobotModel, label: str, center: np.ndarray) -> None:
    points = [center] + [center + model.box_centers[i, :2] for i in range(4)]
    for point in points:
        if not surface.contains(point):
            raise ProblemBuildError(
                f"{label} placement ({point[0]:.3f}, {point[1]:.3f}) lies outside the terrain bounds {surface.bounds}"
            )


def build_problem(
    terrain: HeightField,
    model: RobotModel,
    config: PlannerConfig,
    rng_seed: int = 0,
) -> CentroidalProblem:
    """
    Assemble variables, bounds and constraint blocks.

    Blocks: dynamics, force_nodes, force_grid, stance_height, swing_nodes,
    swing_grid, kinematic_box, leg_reach, boundary, phase_durations. Phase
    durations are bounded by config.phase_duration_bounds.

    Args:
        terrain: Planning terrain (embedded into the planning canvas when smaller)
        model: Robot description
        config: Planner configuration
        rng_seed: Seed recorded with the problem (initialization noise)

    Returns:
        CentroidalProblem: The assembled problem

    Raises:
        ProblemBuildError: If the start or goal stance lies off the terrain
    """
    surface = planning_surface(terrain, config)
    start = np.array(config.start_xy, dtype=float)
    goal = goal_position(config)
    _check_coverage(surface, model, "Start", start)
    _check_coverage(surface, model, "Goal", goal)

    layout = build_layout(config)
    start_height, _ = height_at(surface, start)
    context = ConstraintContext(
        layout=layout,
        surface=surface,
        model=model,
        config=config,
        start_xy=start,
        goal_xy=goal,
        start_height=start_height,
    )

    lower = np.full(layout.n_vars, -np.inf)
    upper = np.full(layout.n_vars, np.inf)
    durations = layout.duration_indices
    lower[durations], upper[durations] = config.phase_duration_bounds

    blocks = [
        dynamics_block(context),
        force_node_block(context),
        force_grid_block(context),
        stance_height_block(context),
        swing_node_block(context),
        swing_grid_block(context),
        kinematic_box_block(context),
        leg_reach_block(context),
        boundary_block(context, layout.n_vars),
        phase_duration_block(context, layout.n_vars),
    ]
    problem = CentroidalProblem(
        n_vars=layout.n_vars,
        lower=lower,
        upper=upper,
        blocks=blocks,
        layout=layout,
        context=context,
        rng_seed=rng_seed,
    )
    logger.debug(
        f"Built planning problem seed={rng_seed}: {problem.n_vars} variables, "
        f"{problem.n_constraints} constraint rows in {len(blocks)} blocks"
    )
    return problem
