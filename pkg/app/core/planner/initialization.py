"""
Randomized fly-trot initialization of the planning variables.
"""

import logging

import numpy as np

from app.core.heightfield import sample_heights
from app.core.planner.layout import N_LEGS
from app.core.planner.problem import CentroidalProblem
from app.core.spline import PhaseSchedule

logger = logging.getLogger(__name__)


def initialize_variables(problem: CentroidalProblem, rng_seed: int) -> np.ndarray:
    """
    Nominal trot guess plus Gaussian noise.

    Phase durations follow PhaseSchedule.trot. CoM nodes interpolate start to goal
    at nominal height over the terrain with the mean walking velocity; feet sit
    under the hips at the CoM position of the middle of each stance; interior
    swing nodes are lifted by config.swing_height_init; free force nodes carry
    m g / 4 vertically. Noise with config.init_pos_noise_sigma is added to all
    position nodes (CoM, stance feet, swing nodes) and with
    config.init_force_noise_sigma to force node values.

    Args:
        problem: Problem from build_problem
        rng_seed: Seed of the noise generator

    Returns:
        np.ndarray: Initial variable vector (clamped into the bounds)
    """
    layout = problem.layout
    config = problem.config
    model = problem.model
    surface = problem.surface
    context = problem.context

    horizon = config.horizon
    start = context.start_xy
    goal = context.goal_xy
    x = np.zeros(layout.n_vars)

    schedule = PhaseSchedule.trot(horizon, config.n_stance_phases, N_LEGS)

    def com_xy(t: float) -> np.ndarray:
        return start + (goal - start) * (t / horizon)

    # CoM and orientation nodes
    n_nodes = layout.com.n_nodes
    node_times = np.linspace(0.0, horizon, n_nodes)
    mean_velocity = np.append((goal - start) / horizon, 0.0)
    for k, t in enumerate(node_times):
        xy = com_xy(t)
        x[layout.com.pos_index[k]] = [xy[0], xy[1], float(sample_heights(surface, xy)) + config.nominal_height]
        if 0 < k < n_nodes - 1:
            x[layout.com.vel_index[k]] = mean_velocity

    weight_share = model.mass * config.gravity / N_LEGS
    for i, leg in enumerate(layout.legs):
        durations = np.array(schedule.durations[i])
        x[leg.duration_index] = durations
        edges = np.concatenate([[0.0], np.cumsum(durations)])

        stance_feet = []
        for m, idx in enumerate(leg.stance_foot_index):
            phase = 2 * m
            mid = 0.5 * (edges[phase] + edges[phase + 1])
            xy = (start if m == 0 else com_xy(mid)) + model.box_centers[i, :2]
            foot = np.array([xy[0], xy[1], float(sample_heights(surface, xy))])
            x[idx] = foot
            stance_feet.append(foot)

        n_interior = config.ee_polys_per_swing - 1
        for m in range(config.n_stance_phases - 1):
            swing_duration = durations[2 * m + 1]
            lift_off, touch_down = stance_feet[m], stance_feet[m + 1]
            for e in range(n_interior):
                node = m * n_interior + e
                fraction = (e + 1) / config.ee_polys_per_swing
                position = lift_off + fraction * (touch_down - lift_off)
                position[2] += config.swing_height_init
                x[leg.swing_node_index[node]] = position
                vel_index = leg.foot.vel_index[_swing_node_row(leg, node)]
                x[vel_index] = (touch_down - lift_off) / swing_duration

        for idx, _ in leg.force_node_index:
            x[idx] = [0.0, 0.0, weight_share]

    rng = np.random.default_rng(rng_seed)
    position_noise = rng.normal(0.0, 1.0, size=layout.position_indices.size) * config.init_pos_noise_sigma
    force_noise = rng.normal(0.0, 1.0, size=layout.force_value_indices.size) * config.init_force_noise_sigma
    x[layout.position_indices] += position_noise
    x[layout.force_value_indices] += force_noise

    logger.debug(f"Initialized {layout.n_vars} variables with seed {rng_seed}")
    return problem.clamp(x)


def _swing_node_row(leg, node: int) -> int:
    """Row of the foot spline node table holding the given interior swing node."""
    target = leg.swing_node_index[node]
    rows = np.flatnonzero(np.all(leg.foot.pos_index == target, axis=1))
    return int(rows[0])
