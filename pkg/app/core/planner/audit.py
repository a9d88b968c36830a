"""
Independent constraint audit of planner solutions.

Residuals are recomputed from the reconstructed splines, the terrain and the
robot model only; nothing here goes through the solver or the constraint blocks.
"""

import logging

import numpy as np
from pydantic import BaseModel

from app.core.heightfield import HeightField, query_surface
from app.core.planner.problem import goal_position, planning_surface
from app.core.planner.solution import CentroidalSolution
from app.core.robot_model import RobotModel
from app.core.spline import STANCE
from app.schemas import PlannerConfig
from app.utils.rotations import angular_acceleration, angular_velocity, euler_zyx_matrix, yaw_matrix

logger = logging.getLogger(__name__)

DENSE_DT = 0.01


class AuditReport(BaseModel):
    """Recomputed violations of one solution."""
    residuals: dict[str, float]
    min_normal_force_dense: float
    force_max: float
    min_swing_clearance_dense: float
    max_stance_drift: float
    tolerance: float
    passed: bool
    failures: list[str] = []


def _grid(horizon: float, dt: float) -> np.ndarray:
    n = int(np.floor(horizon / dt + 1e-9))
    times = dt * np.arange(n + 1)
    return times if times[-1] >= horizon - 1e-9 else np.append(times, horizon)


def _force_violation(force: np.ndarray, normal: np.ndarray, mu: float, force_max: float) -> float:
    tangents = []
    for axis in (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])):
        t = axis - (axis @ normal) * normal
        tangents.append(t / np.linalg.norm(t))
    fn = force @ normal
    rows = [fn, force_max - fn]
    for t in tangents:
        ft = force @ t
        rows += [mu * fn - ft, mu * fn + ft]
    return max(0.0, -min(rows))


def _ground(surface: HeightField, point: np.ndarray):
    result = query_surface(surface, np.asarray(point)[None, :2], clamp=True)
    return float(result.heights[0]), result.normals[0]


def audit_solution(
    solution: CentroidalSolution,
    terrain: HeightField,
    model: RobotModel,
    config: PlannerConfig,
    tolerance: float = 1e-3,
) -> AuditReport:
    """
    Recompute every constraint class of a solution.

    Args:
        solution: Solution to audit
        terrain: Planning terrain (embedded the same way as for planning)
        model: Robot description
        config: Planner configuration used for the solve
        tolerance: Largest accepted residual

    Returns:
        AuditReport: Violations per constraint class and densified checks
    """
    surface = planning_surface(terrain, config)
    horizon = config.horizon
    mass = model.mass
    gravity = np.array([0.0, 0.0, -config.gravity])
    force_max = config.force_bound_max or 2.0 * mass * config.gravity
    mu = model.friction_mu
    residuals: dict[str, float] = {}

    # Dynamics
    worst = 0.0
    for t in _grid(horizon, config.dynamics_dt):
        r = solution.com_state(t)
        r_dd = solution.com_state(t, 2)
        alpha, alpha_d, alpha_dd = (solution.base_state(t, k) for k in range(3))
        forces = [solution.force(i, t) for i in range(4)]
        feet = [solution.foot(i, t) for i in range(4)]
        rot = euler_zyx_matrix(alpha)
        inertia_w = rot @ model.body_inertia @ rot.T
        omega = angular_velocity(alpha, alpha_d)
        omega_dot = angular_acceleration(alpha, alpha_d, alpha_dd)
        linear = r_dd - gravity - sum(forces) / mass
        torque = sum(np.cross(p - r, f) for f, p in zip(forces, feet))
        angular = (inertia_w @ omega_dot + np.cross(omega, inertia_w @ omega) - torque) / mass
        worst = max(worst, float(np.abs(linear).max()), float(np.abs(angular).max()))
    residuals["dynamics"] = worst

    # Forces at spline knots and on the enforcement grid
    worst_nodes = 0.0
    worst_grid = 0.0
    min_dense = np.inf
    for i in range(4):
        for t in solution.forces[i].knot_times:
            _, normal = _ground(surface, solution.foot(i, t))
            worst_nodes = max(worst_nodes, _force_violation(solution.force(i, t), normal, mu, force_max))
        for t in _grid(horizon, config.force_constraint_dt):
            _, normal = _ground(surface, solution.foot(i, t))
            worst_grid = max(worst_grid, _force_violation(solution.force(i, t), normal, mu, force_max))
        for start, end in solution.schedule.stance_intervals(i):
            for t in np.arange(start, end + 1e-12, DENSE_DT):
                _, normal = _ground(surface, solution.foot(i, t))
                min_dense = min(min_dense, float(solution.force(i, t) @ normal))
    residuals["force_nodes"] = worst_nodes
    residuals["force_grid"] = worst_grid

    # Terrain contact
    worst_height = 0.0
    worst_swing = 0.0
    min_clearance = np.inf
    max_drift = 0.0
    for i in range(4):
        for start, end in solution.schedule.stance_intervals(i):
            anchor = solution.foot(i, start)
            height, _ = _ground(surface, anchor)
            worst_height = max(worst_height, abs(anchor[2] - height))
            for t in np.arange(start, end + 1e-12, DENSE_DT):
                max_drift = max(max_drift, float(np.abs(solution.foot(i, t) - anchor).max()))
        for t in _grid(horizon, config.swing_constraint_dt):
            foot = solution.foot(i, t)
            height, _ = _ground(surface, foot)
            worst_swing = max(worst_swing, height - foot[2])
        spline = solution.feet[i]
        for t in np.arange(0.0, horizon + 1e-12, DENSE_DT):
            if spline.phase_at(min(t, spline.total_duration)) == STANCE:
                continue
            foot = solution.foot(i, t)
            height, _ = _ground(surface, foot)
            min_clearance = min(min_clearance, float(foot[2] - height))
    residuals["stance_height"] = worst_height
    residuals["swing_grid"] = max(worst_swing, 0.0)

    # Kinematic boxes and leg reach
    worst_box = 0.0
    worst_reach = 0.0
    reach = model.leg_length - config.reach_margin
    for t in _grid(horizon, config.dynamics_dt):
        r = solution.com_state(t)
        alpha = solution.base_state(t)
        full = euler_zyx_matrix(alpha)
        box_rot = full if config.kinematic_box_full_orientation else yaw_matrix(alpha[2])
        for i in range(4):
            foot = solution.foot(i, t)
            offset = box_rot.T @ (foot - r) - model.box_centers[i]
            worst_box = max(worst_box, float(np.max(np.abs(offset) - model.box_half_extents[i])))
            err = foot - r - full @ model.hip_offsets[i]
            worst_reach = max(worst_reach, float(err @ err - reach ** 2))
    residuals["kinematic_box"] = max(worst_box, 0.0)
    residuals["leg_reach"] = max(worst_reach, 0.0)

    # Boundary conditions
    start_xy = np.array(config.start_xy, dtype=float)
    goal_xy = goal_position(config)
    start_height, _ = _ground(surface, np.append(start_xy, 0.0))
    start_com = np.append(start_xy, start_height + config.nominal_height)
    boundary = [
        np.abs(solution.com_state(0.0) - start_com).max(),
        np.abs(solution.com_state(0.0, 1)).max(),
        np.abs(solution.base_state(0.0)).max(),
        np.abs(solution.base_state(0.0, 1)).max(),
        np.abs(solution.com_state(horizon)[:2] - goal_xy).max(),
        np.abs(solution.com_state(horizon, 1)).max(),
        np.abs(solution.base_state(horizon, 1)).max(),
        abs(solution.base_state(horizon)[2]),
    ]
    for i in range(4):
        boundary.append(np.abs(solution.foot(i, 0.0)[:2] - start_xy - model.box_centers[i, :2]).max())
    residuals["boundary"] = float(max(boundary))

    # Phase durations
    low, high = config.phase_duration_bounds
    timing = []
    for durations in solution.schedule.durations:
        d = np.array(durations)
        timing.append(abs(d.sum() - horizon))
        timing.append(float(np.max(np.maximum(low - d, 0.0) + np.maximum(d - high, 0.0))))
    residuals["phase_durations"] = float(max(timing))

    min_normal = float(min_dense) if np.isfinite(min_dense) else 0.0
    min_clear = float(min_clearance) if np.isfinite(min_clearance) else 0.0
    failures = [f"{name} residual {value:.3e} exceeds {tolerance:.1e}" for name, value in residuals.items() if value > tolerance]
    if min_normal < -0.05 * force_max:
        failures.append(f"dense normal force {min_normal:.3f} N below -0.05 f_max")
    if min_clear < -0.01:
        failures.append(f"dense swing clearance {min_clear:.4f} m below -0.01 m")
    if max_drift >= 1e-6:
        failures.append(f"stance foot drift {max_drift:.2e} m")

    report = AuditReport(
        residuals=residuals,
        min_normal_force_dense=min_normal,
        force_max=force_max,
        min_swing_clearance_dense=min_clear,
        max_stance_drift=max_drift,
        tolerance=tolerance,
        passed=not failures,
        failures=failures,
    )
    if failures:
        logger.warning(f"Audit of solution seed={solution.rng_seed} failed: {'; '.join(failures)}")
    return report
