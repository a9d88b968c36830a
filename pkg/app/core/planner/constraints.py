"""
Constraint blocks of the centroidal planning problem.

Every block evaluates residuals and dense Jacobians from the shared variable
layout. Terrain queries clamp to the planning surface and count how often
they had to.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from app.core.heightfield import HeightField, query_surface
from app.core.nlp import EQUALITY, INEQUALITY, ConstraintBlock
from app.core.planner.layout import SplineLayout, SplineSamples, VariableLayout, sample_spline, time_grid
from app.core.robot_model import RobotModel
from app.schemas import PlannerConfig
from app.utils.rotations import (
    euler_rate_matrix,
    euler_rate_matrix_derivatives,
    euler_rate_matrix_second_derivatives,
    euler_zyx_matrix,
    euler_zyx_matrix_derivatives,
    skew,
    yaw_matrix,
    yaw_matrix_derivative,
)

logger = logging.getLogger(__name__)


def contact_frame(normals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit tangents: world x and y projected onto each contact plane."""
    normals = np.atleast_2d(normals)
    tangents = []
    for axis in (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])):
        t = axis[None, :] - (normals @ axis)[:, None] * normals
        tangents.append(t / np.linalg.norm(t, axis=1, keepdims=True))
    return tangents[0], tangents[1]


def force_coefficients(normals: np.ndarray, mu: float) -> np.ndarray:
    """
    Rows of the force inequality for each contact normal, shape (n, 6, 3).

    With offsets (0, f_max, 0, 0, 0, 0) the rows read
    n.f >= 0, f_max - n.f >= 0 and mu n.f -/+ t_k.f >= 0 for both tangents.
    """
    normals = np.atleast_2d(normals)
    t1, t2 = contact_frame(normals)
    scaled = mu * normals
    return np.stack([normals, -normals, scaled - t1, scaled + t1, scaled - t2, scaled + t2], axis=1)


@dataclass
class ConstraintContext:
    """Shared state of one problem's constraint evaluations."""

    layout: VariableLayout
    surface: HeightField
    model: RobotModel
    config: PlannerConfig
    start_xy: np.ndarray
    goal_xy: np.ndarray
    start_height: float
    grids: dict[str, np.ndarray] = field(default_factory=dict)
    clamped_queries: int = 0
    _cache_x: np.ndarray = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        horizon = self.config.horizon
        self.grids = {
            "dynamics": time_grid(horizon, self.config.dynamics_dt),
            "force": time_grid(horizon, self.config.force_constraint_dt),
            "swing": time_grid(horizon, self.config.swing_constraint_dt),
        }

    @property
    def force_max(self) -> float:
        if self.config.force_bound_max is not None:
            return self.config.force_bound_max
        return 2.0 * self.model.mass * self.config.gravity

    def sample(self, spline: SplineLayout, grid: str, order: int, x: np.ndarray, need_jacobian: bool) -> SplineSamples:
        """Cached sample_spline on one of the named grids."""
        if self._cache_x is None or self._cache_x.shape != x.shape or not np.array_equal(self._cache_x, x):
            self._cache_x = x.copy()
            self._cache = {}
        key = (spline.name, grid, order)
        cached = self._cache.get(key)
        if cached is not None and (cached.jacobian is not None or not need_jacobian):
            return cached
        result = sample_spline(spline, x, self.grids[grid], order, need_jacobian)
        self._cache[key] = result
        return result

    def surface_at(self, points: np.ndarray):
        result = query_surface(self.surface, np.asarray(points)[:, :2], clamp=True)
        self.clamped_queries += result.n_clamped
        return result


# ============================================================================
# Dynamics
# ============================================================================

def dynamics_block(ctx: ConstraintContext) -> ConstraintBlock:
    """
    Single rigid body dynamics at the dynamics grid, scaled by 1/m.

    Rows per time: r'' - g - sum(f)/m and
    (I_w w' + w x I_w w - sum f_i x (r - p_i)) / m.
    """
    layout = ctx.layout
    model = ctx.model
    mass = model.mass
    inertia = model.body_inertia
    gravity = np.array([0.0, 0.0, -ctx.config.gravity])
    n_times = len(ctx.grids["dynamics"])

    def function(x: np.ndarray, need_jacobian: bool):
        com = ctx.sample(layout.com, "dynamics", 0, x, need_jacobian)
        com_acc = ctx.sample(layout.com, "dynamics", 2, x, need_jacobian)
        base = [ctx.sample(layout.base, "dynamics", k, x, need_jacobian) for k in range(3)]
        feet = [ctx.sample(leg.foot, "dynamics", 0, x, need_jacobian) for leg in layout.legs]
        forces = [ctx.sample(leg.force, "dynamics", 0, x, need_jacobian) for leg in layout.legs]

        residual = np.zeros((n_times, 6))
        total_force = sum(f.values for f in forces)
        residual[:, :3] = com_acc.values - gravity - total_force / mass
        jac = None
        if need_jacobian:
            jac = np.zeros((n_times, 6, x.size))
            jac[:, :3] = com_acc.jacobian - sum(f.jacobian for f in forces) / mass

        for k in range(n_times):
            alpha, alpha_d, alpha_dd = base[0].values[k], base[1].values[k], base[2].values[k]
            rot = euler_zyx_matrix(alpha)
            rate = euler_rate_matrix(alpha)
            d_rate = euler_rate_matrix_derivatives(alpha)
            rate_dot = np.tensordot(alpha_d, d_rate, axes=1)
            inertia_w = rot @ inertia @ rot.T
            omega = rate @ alpha_d
            omega_dot = rate @ alpha_dd + rate_dot @ alpha_d
            inertia_omega = inertia_w @ omega
            r = com.values[k]
            torque = sum(np.cross(f.values[k], r - p.values[k]) for f, p in zip(forces, feet))
            residual[k, 3:] = (inertia_w @ omega_dot + np.cross(omega, inertia_omega) - torque) / mass

            if need_jacobian:
                d_rot = euler_zyx_matrix_derivatives(alpha)
                dd_rate = euler_rate_matrix_second_derivatives(alpha)
                d_alpha = np.zeros((3, 3))
                for j in range(3):
                    d_inertia = d_rot[j] @ inertia @ rot.T + rot @ inertia @ d_rot[j].T
                    d_omega = d_rate[j] @ alpha_d
                    d_omega_dot = d_rate[j] @ alpha_dd + np.tensordot(alpha_d, dd_rate[j], axes=1) @ alpha_d
                    d_alpha[:, j] = (
                        d_inertia @ omega_dot
                        + inertia_w @ d_omega_dot
                        + np.cross(d_omega, inertia_omega)
                        + np.cross(omega, d_inertia @ omega + inertia_w @ d_omega)
                    )
                rate_columns = np.column_stack([d_rate[j] @ alpha_d for j in range(3)])
                d_alpha_d = inertia_w @ (rate_dot + rate_columns) + (skew(omega) @ inertia_w - skew(inertia_omega)) @ rate
                d_alpha_dd = inertia_w @ rate

                ang = d_alpha @ base[0].jacobian[k] + d_alpha_d @ base[1].jacobian[k] + d_alpha_dd @ base[2].jacobian[k]
                for f, p in zip(forces, feet):
                    fk = f.values[k]
                    ang -= skew(fk) @ com.jacobian[k]
                    ang += skew(fk) @ p.jacobian[k]
                    ang += skew(r - p.values[k]) @ f.jacobian[k]
                jac[k, 3:] = ang / mass

        return residual.ravel(), (jac.reshape(6 * n_times, x.size) if need_jacobian else None)

    return ConstraintBlock(name="dynamics", kind=EQUALITY, n_rows=6 * n_times, function=function)


# ============================================================================
# Forces
# ============================================================================

def force_node_block(ctx: ConstraintContext) -> ConstraintBlock:
    """Force inequalities at every free force node, normal taken at the stance foot."""
    layout = ctx.layout
    nodes = [(leg, idx, m) for leg in layout.legs for idx, m in leg.force_node_index]
    offsets = np.array([0.0, ctx.force_max, 0.0, 0.0, 0.0, 0.0])
    mu = ctx.model.friction_mu

    def function(x: np.ndarray, need_jacobian: bool):
        feet = np.array([x[leg.stance_foot_index[m]] for leg, _, m in nodes])
        values = np.array([x[idx] for _, idx, _ in nodes])
        coeffs = force_coefficients(ctx.surface_at(feet).normals, mu)
        residual = np.einsum("nrc,nc->nr", coeffs, values) + offsets
        jac = None
        if need_jacobian:
            jac = np.zeros((len(nodes), 6, x.size))
            for k, (_, idx, _) in enumerate(nodes):
                jac[k][:, idx] = coeffs[k]
            jac = jac.reshape(6 * len(nodes), x.size)
        return residual.ravel(), jac

    return ConstraintBlock(name="force_nodes", kind=INEQUALITY, n_rows=6 * len(nodes), function=function)


def force_grid_block(ctx: ConstraintContext) -> ConstraintBlock:
    """Force inequalities for every leg at the force grid; swing forces are zero and pass trivially."""
    layout = ctx.layout
    n_times = len(ctx.grids["force"])
    offsets = np.array([0.0, ctx.force_max, 0.0, 0.0, 0.0, 0.0])
    mu = ctx.model.friction_mu

    def function(x: np.ndarray, need_jacobian: bool):
        residuals = []
        jacobians = []
        for leg in layout.legs:
            force = ctx.sample(leg.force, "force", 0, x, need_jacobian)
            foot = ctx.sample(leg.foot, "force", 0, x, False)
            coeffs = force_coefficients(ctx.surface_at(foot.values).normals, mu)
            residuals.append(np.einsum("nrc,nc->nr", coeffs, force.values) + offsets)
            if need_jacobian:
                jacobians.append(np.einsum("nrc,ncv->nrv", coeffs, force.jacobian))
        residual = np.concatenate(residuals).ravel()
        jac = np.concatenate(jacobians).reshape(residual.size, x.size) if need_jacobian else None
        return residual, jac

    return ConstraintBlock(name="force_grid", kind=INEQUALITY, n_rows=6 * n_times * len(layout.legs), function=function)


# ============================================================================
# Terrain Contact
# ============================================================================

def _height_rows(ctx: ConstraintContext, points: np.ndarray, points_jac, need_jacobian: bool):
    """z - h(x, y) for points with Jacobian (n, 3, n_vars)."""
    surface = ctx.surface_at(points)
    residual = points[:, 2] - surface.heights
    if not need_jacobian:
        return residual, None
    jac = (
        points_jac[:, 2]
        - surface.slopes[:, 0:1] * points_jac[:, 0]
        - surface.slopes[:, 1:2] * points_jac[:, 1]
    )
    return residual, jac


def _index_jacobian(indices: list[np.ndarray], n_vars: int) -> np.ndarray:
    jac = np.zeros((len(indices), 3, n_vars))
    for k, idx in enumerate(indices):
        jac[k, [0, 1, 2], idx] = 1.0
    return jac


def stance_height_block(ctx: ConstraintContext) -> ConstraintBlock:
    """Stance feet sit on the terrain surface."""
    indices = [idx for leg in ctx.layout.legs for idx in leg.stance_foot_index]
    selector = None

    def function(x: np.ndarray, need_jacobian: bool):
        nonlocal selector
        if selector is None or selector.shape[2] != x.size:
            selector = _index_jacobian(indices, x.size)
        points = np.array([x[idx] for idx in indices])
        return _height_rows(ctx, points, selector, need_jacobian)

    return ConstraintBlock(name="stance_height", kind=EQUALITY, n_rows=len(indices), function=function)


def swing_node_block(ctx: ConstraintContext) -> ConstraintBlock:
    """Interior swing nodes stay above the terrain."""
    indices = [idx for leg in ctx.layout.legs for idx in leg.swing_node_index]
    selector = None

    def function(x: np.ndarray, need_jacobian: bool):
        nonlocal selector
        if not indices:
            return np.zeros(0), (np.zeros((0, x.size)) if need_jacobian else None)
        if selector is None or selector.shape[2] != x.size:
            selector = _index_jacobian(indices, x.size)
        points = np.array([x[idx] for idx in indices])
        return _height_rows(ctx, points, selector, need_jacobian)

    return ConstraintBlock(name="swing_nodes", kind=INEQUALITY, n_rows=len(indices), function=function)


def swing_grid_block(ctx: ConstraintContext) -> ConstraintBlock:
    """All feet stay above the terrain at the swing grid."""
    layout = ctx.layout
    n_times = len(ctx.grids["swing"])

    def function(x: np.ndarray, need_jacobian: bool):
        residuals = []
        jacobians = []
        for leg in layout.legs:
            foot = ctx.sample(leg.foot, "swing", 0, x, need_jacobian)
            residual, jac = _height_rows(ctx, foot.values, foot.jacobian, need_jacobian)
            residuals.append(residual)
            jacobians.append(jac)
        residual = np.concatenate(residuals)
        return residual, (np.concatenate(jacobians) if need_jacobian else None)

    return ConstraintBlock(name="swing_grid", kind=INEQUALITY, n_rows=n_times * len(layout.legs), function=function)


# ============================================================================
# Kinematics
# ============================================================================

def _base_rotation(ctx: ConstraintContext, alpha: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rotation used by the kinematic boxes and its derivatives (3, 3, 3) w.r.t. the Euler angles."""
    if ctx.config.kinematic_box_full_orientation:
        return euler_zyx_matrix(alpha), euler_zyx_matrix_derivatives(alpha)
    derivatives = np.zeros((3, 3, 3))
    derivatives[2] = yaw_matrix_derivative(alpha[2])
    return yaw_matrix(alpha[2]), derivatives


def kinematic_box_block(ctx: ConstraintContext) -> ConstraintBlock:
    """Base-frame foot positions inside the per-leg boxes at the dynamics grid."""
    layout = ctx.layout
    model = ctx.model
    n_times = len(ctx.grids["dynamics"])

    def function(x: np.ndarray, need_jacobian: bool):
        com = ctx.sample(layout.com, "dynamics", 0, x, need_jacobian)
        base = ctx.sample(layout.base, "dynamics", 0, x, need_jacobian)
        residual = np.zeros((len(layout.legs), n_times, 6))
        jac = np.zeros((len(layout.legs), n_times, 6, x.size)) if need_jacobian else None
        for i, leg in enumerate(layout.legs):
            foot = ctx.sample(leg.foot, "dynamics", 0, x, need_jacobian)
            center = model.box_centers[i]
            half = model.box_half_extents[i]
            for k in range(n_times):
                rot, d_rot = _base_rotation(ctx, base.values[k])
                rel = foot.values[k] - com.values[k]
                offset = rot.T @ rel - center
                residual[i, k, :3] = half - offset
                residual[i, k, 3:] = half + offset
                if need_jacobian:
                    d_offset = rot.T @ (foot.jacobian[k] - com.jacobian[k])
                    d_offset += np.column_stack([d_rot[j].T @ rel for j in range(3)]) @ base.jacobian[k]
                    jac[i, k, :3] = -d_offset
                    jac[i, k, 3:] = d_offset
        return residual.ravel(), (jac.reshape(residual.size, x.size) if need_jacobian else None)

    return ConstraintBlock(name="kinematic_box", kind=INEQUALITY, n_rows=6 * n_times * len(layout.legs), function=function)


def leg_reach_block(ctx: ConstraintContext) -> ConstraintBlock:
    """Feet within leg length minus a margin of their hips, under the full base orientation."""
    layout = ctx.layout
    model = ctx.model
    n_times = len(ctx.grids["dynamics"])
    reach_sq = (model.leg_length - ctx.config.reach_margin) ** 2

    def function(x: np.ndarray, need_jacobian: bool):
        com = ctx.sample(layout.com, "dynamics", 0, x, need_jacobian)
        base = ctx.sample(layout.base, "dynamics", 0, x, need_jacobian)
        residual = np.zeros((len(layout.legs), n_times))
        jac = np.zeros((len(layout.legs), n_times, x.size)) if need_jacobian else None
        for i, leg in enumerate(layout.legs):
            foot = ctx.sample(leg.foot, "dynamics", 0, x, need_jacobian)
            hip = model.hip_offsets[i]
            for k in range(n_times):
                alpha = base.values[k]
                rot = euler_zyx_matrix(alpha)
                err = foot.values[k] - com.values[k] - rot @ hip
                residual[i, k] = reach_sq - err @ err
                if need_jacobian:
                    d_rot = euler_zyx_matrix_derivatives(alpha)
                    d_err = foot.jacobian[k] - com.jacobian[k]
                    d_err -= np.column_stack([d_rot[j] @ hip for j in range(3)]) @ base.jacobian[k]
                    jac[i, k] = -2.0 * err @ d_err
        return residual.ravel(), (jac.reshape(residual.size, x.size) if need_jacobian else None)

    return ConstraintBlock(name="leg_reach", kind=INEQUALITY, n_rows=n_times * len(layout.legs), function=function)


# ============================================================================
# Boundary and Timing
# ============================================================================

def boundary_block(ctx: ConstraintContext, n_vars: int) -> ConstraintBlock:
    """
    Start and goal conditions.

    Start: CoM at the start point at nominal height above the terrain, at rest,
    level orientation, feet at their nominal planar positions. Goal: CoM
    displaced by the goal vector, at rest, zero heading.
    """
    layout = ctx.layout
    rows: list[tuple[int, float]] = []
    start = np.array([ctx.start_xy[0], ctx.start_xy[1], ctx.start_height + ctx.config.nominal_height])
    rows += list(zip(layout.com.pos_index[0], start))
    rows += [(int(i), 0.0) for i in layout.com.vel_index[0]]
    rows += [(int(i), 0.0) for i in layout.base.pos_index[0]]
    rows += [(int(i), 0.0) for i in layout.base.vel_index[0]]
    for i, leg in enumerate(layout.legs):
        nominal = ctx.start_xy + ctx.model.box_centers[i, :2]
        rows += list(zip(leg.stance_foot_index[0][:2], nominal))
    rows += list(zip(layout.com.pos_index[-1][:2], ctx.goal_xy))
    rows += [(int(i), 0.0) for i in layout.com.vel_index[-1]]
    rows += [(int(i), 0.0) for i in layout.base.vel_index[-1]]
    rows.append((int(layout.base.pos_index[-1][2]), 0.0))

    matrix = np.zeros((len(rows), n_vars))
    offset = np.zeros(len(rows))
    for r, (index, target) in enumerate(rows):
        matrix[r, int(index)] = 1.0
        offset[r] = float(target)
    return ConstraintBlock.linear("boundary", EQUALITY, matrix, offset)


def phase_duration_block(ctx: ConstraintContext, n_vars: int) -> ConstraintBlock:
    """Per leg, phase durations sum to the horizon."""
    matrix = np.zeros((len(ctx.layout.legs), n_vars))
    for i, leg in enumerate(ctx.layout.legs):
        matrix[i, leg.duration_index] = 1.0
    return ConstraintBlock.linear("phase_durations", EQUALITY, matrix, np.full(len(ctx.layout.legs), ctx.config.horizon))
