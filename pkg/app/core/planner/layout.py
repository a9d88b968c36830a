"""
Variable layout of the centroidal planning problem.

Every spline node component and every phase duration is either a slot in the
flat variable vector or a constant. SplineLayout records that mapping for one
3-D spline; sample_spline evaluates it at many times with a dense Jacobian.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from app.core.spline import STANCE, SWING, PhaseSpline, hermite_basis, hermite_basis_sensitivity
from app.schemas import PlannerConfig

N_LEGS = 4

# Sample times this far past a spline's end are clamped onto it.
_CLAMP_TOL = 1e-12


@dataclass
class SplineLayout:
    """Index map of one spline. Index -1 marks a constant entry."""

    name: str
    pos_index: np.ndarray
    vel_index: np.ndarray
    pos_const: np.ndarray
    vel_const: np.ndarray
    seg_duration_var: np.ndarray
    seg_duration_scale: np.ndarray
    seg_duration_const: np.ndarray
    seg_phase: np.ndarray
    phase_tags: Optional[tuple[str, ...]] = None

    @property
    def n_nodes(self) -> int:
        return self.pos_index.shape[0]

    @property
    def n_segments(self) -> int:
        return self.seg_duration_var.shape[0]

    def node_positions(self, x: np.ndarray) -> np.ndarray:
        return np.where(self.pos_index >= 0, x[np.maximum(self.pos_index, 0)], self.pos_const)

    def node_velocities(self, x: np.ndarray) -> np.ndarray:
        return np.where(self.vel_index >= 0, x[np.maximum(self.vel_index, 0)], self.vel_const)

    def durations(self, x: np.ndarray) -> np.ndarray:
        variable = x[np.maximum(self.seg_duration_var, 0)] * self.seg_duration_scale
        return np.where(self.seg_duration_var >= 0, variable, self.seg_duration_const)

    def duration_matrix(self, n_vars: int) -> np.ndarray:
        """D[l, v] = d(duration of segment l) / d(x[v])."""
        matrix = np.zeros((self.n_segments, n_vars))
        variable = self.seg_duration_var >= 0
        matrix[np.flatnonzero(variable), self.seg_duration_var[variable]] = self.seg_duration_scale[variable]
        return matrix

    def to_spline(self, x: np.ndarray) -> PhaseSpline:
        """Reconstruct the spline described by x."""
        return PhaseSpline.from_nodes(
            self.node_positions(x), self.node_velocities(x), self.durations(x), self.phase_tags
        )


@dataclass
class LegLayout:
    """Indices belonging to one leg."""

    foot: SplineLayout
    force: SplineLayout
    duration_index: np.ndarray
    stance_foot_index: list[np.ndarray] = field(default_factory=list)
    swing_node_index: list[np.ndarray] = field(default_factory=list)
    # (pos indices of a variable force node, stance phase number it belongs to)
    force_node_index: list[tuple[np.ndarray, int]] = field(default_factory=list)


@dataclass
class VariableLayout:
    """Complete variable map of a planning problem."""

    n_vars: int
    com: SplineLayout
    base: SplineLayout
    legs: list[LegLayout]
    position_indices: np.ndarray
    force_value_indices: np.ndarray

    @property
    def duration_indices(self) -> np.ndarray:
        return np.concatenate([leg.duration_index for leg in self.legs])


class _Allocator:
    def __init__(self):
        self.n = 0

    def take(self, count: int) -> np.ndarray:
        block = np.arange(self.n, self.n + count)
        self.n += count
        return block


def _uniform_spline(name: str, alloc: _Allocator, n_segments: int, horizon: float, positions: list) -> SplineLayout:
    n_nodes = n_segments + 1
    pos = np.zeros((n_nodes, 3), dtype=int)
    vel = np.zeros((n_nodes, 3), dtype=int)
    for k in range(n_nodes):
        pos[k] = alloc.take(3)
        vel[k] = alloc.take(3)
        positions.append(pos[k])
    return SplineLayout(
        name=name,
        pos_index=pos,
        vel_index=vel,
        pos_const=np.zeros((n_nodes, 3)),
        vel_const=np.zeros((n_nodes, 3)),
        seg_duration_var=np.full(n_segments, -1),
        seg_duration_scale=np.ones(n_segments),
        seg_duration_const=np.full(n_segments, horizon / n_segments),
        seg_phase=np.full(n_segments, -1),
    )


def _spline_from_nodes(name, nodes, segments, tags=None) -> SplineLayout:
    """nodes: list of (pos_idx or None, vel_idx or None); segments: list of (dur_var, scale, phase)."""
    n_nodes = len(nodes)
    pos = np.full((n_nodes, 3), -1, dtype=int)
    vel = np.full((n_nodes, 3), -1, dtype=int)
    for k, (p, v) in enumerate(nodes):
        if p is not None:
            pos[k] = p
        if v is not None:
            vel[k] = v
    return SplineLayout(
        name=name,
        pos_index=pos,
        vel_index=vel,
        pos_const=np.zeros((n_nodes, 3)),
        vel_const=np.zeros((n_nodes, 3)),
        seg_duration_var=np.array([s[0] for s in segments], dtype=int),
        seg_duration_scale=np.array([s[1] for s in segments], dtype=float),
        seg_duration_const=np.zeros(len(segments)),
        seg_phase=np.array([s[2] for s in segments], dtype=int),
        phase_tags=tuple(tags) if tags is not None else None,
    )


def build_layout(config: PlannerConfig) -> VariableLayout:
    """
    Allocate the variable vector for a planner configuration.

    Order: CoM nodes, orientation nodes, then per leg the stance foot
    positions, swing interior nodes, force nodes and phase durations.
    """
    alloc = _Allocator()
    positions: list[np.ndarray] = []
    force_values: list[np.ndarray] = []

    com = _uniform_spline("com", alloc, config.com_segments, config.horizon, positions)
    base = _uniform_spline("base", alloc, config.com_segments, config.horizon, [])

    n_st = config.n_stance_phases
    n_phases = config.n_phases
    n_polys_swing = config.ee_polys_per_swing
    n_polys_force = config.force_polys_per_stance

    legs = []
    for leg in range(N_LEGS):
        stance_idx = [alloc.take(3) for _ in range(n_st)]
        positions.extend(stance_idx)
        durations = alloc.take(n_phases)

        # Foot spline: constant node per stance, swing interior nodes.
        swing_nodes = []
        nodes = [(stance_idx[0], None)]
        segments = []
        tags = []
        for phase in range(n_phases):
            m = phase // 2
            if phase % 2 == 0:
                nodes.append((stance_idx[m], None))
                segments.append((durations[phase], 1.0, phase))
                tags.append(STANCE)
            else:
                for _ in range(n_polys_swing - 1):
                    p = alloc.take(3)
                    v = alloc.take(3)
                    swing_nodes.append(p)
                    positions.append(p)
                    nodes.append((p, v))
                nodes.append((stance_idx[m + 1], None))
                for _ in range(n_polys_swing):
                    segments.append((durations[phase], 1.0 / n_polys_swing, phase))
                    tags.append(SWING)
        foot = _spline_from_nodes(f"foot_{leg}", nodes, segments, tags)

        # Force spline: nodes adjacent to a swing phase are pinned to zero.
        force_nodes = []
        f_nodes = []
        f_segments = []
        for m in range(n_st):
            phase = 2 * m
            for k in range(n_polys_force + 1):
                pinned = (k == 0 and m > 0) or (k == n_polys_force and m < n_st - 1)
                if pinned:
                    f_nodes.append((None, None))
                else:
                    p = alloc.take(3)
                    v = alloc.take(3)
                    force_nodes.append((p, m))
                    force_values.append(p)
                    f_nodes.append((p, v))
            for _ in range(n_polys_force):
                f_segments.append((durations[phase], 1.0 / n_polys_force, phase))
            if m < n_st - 1:
                f_segments.append((durations[phase + 1], 1.0, phase + 1))
        force = _spline_from_nodes(f"force_{leg}", f_nodes, f_segments)

        legs.append(LegLayout(
            foot=foot,
            force=force,
            duration_index=durations,
            stance_foot_index=stance_idx,
            swing_node_index=swing_nodes,
            force_node_index=force_nodes,
        ))

    return VariableLayout(
        n_vars=alloc.n,
        com=com,
        base=base,
        legs=legs,
        position_indices=np.concatenate(positions),
        force_value_indices=np.concatenate(force_values),
    )


def variable_count(config: PlannerConfig) -> int:
    """
    Closed-form number of decision variables.

    2 * (com_segments + 1) * 6 CoM and orientation node entries, plus per leg
    3 per stance foot, 6 per interior swing node, 6 per free force node and
    one per phase duration.
    """
    n_st = config.n_stance_phases
    n_sw = n_st - 1
    per_leg = (
        3 * n_st
        + 6 * n_sw * (config.ee_polys_per_swing - 1)
        + 6 * (n_st * (config.force_polys_per_stance + 1) - 2 * n_sw)
        + config.n_phases
    )
    return 2 * (config.com_segments + 1) * 6 + N_LEGS * per_leg


# ============================================================================
# Sampling
# ============================================================================

@dataclass
class SplineSamples:
    """Values at sample times and their Jacobian with respect to x."""

    values: np.ndarray
    jacobian: Optional[np.ndarray]
    segment: np.ndarray


def sample_spline(
    layout: SplineLayout,
    x: np.ndarray,
    times: np.ndarray,
    order: int = 0,
    need_jacobian: bool = True,
) -> SplineSamples:
    """
    Evaluate a laid-out spline at many times.

    Times beyond the current total duration are clamped onto the end and have
    no duration sensitivity there.

    Returns:
        SplineSamples: values (n, 3), jacobian (n, 3, n_vars) or None, segment index (n,)
    """
    times = np.asarray(times, dtype=float)
    durations = layout.durations(x)
    ends = np.cumsum(durations)
    total = ends[-1]
    clamped = times > total + _CLAMP_TOL
    t = np.clip(times, 0.0, total)
    seg = np.minimum(np.searchsorted(ends, t, side="left"), layout.n_segments - 1)
    d = durations[seg]
    tau = np.clip(t - (ends[seg] - d), 0.0, d)

    positions = layout.node_positions(x)
    velocities = layout.node_velocities(x)
    stack = np.stack([positions[seg], velocities[seg], positions[seg + 1], velocities[seg + 1]], axis=1)
    weights = hermite_basis(tau, d, order)
    values = np.einsum("nk,nkc->nc", weights, stack)
    if not need_jacobian:
        return SplineSamples(values=values, jacobian=None, segment=seg)

    n = len(times)
    jac = np.zeros((n, 3, x.size))
    index_sets = (layout.pos_index[seg], layout.vel_index[seg], layout.pos_index[seg + 1], layout.vel_index[seg + 1])
    for k, idx in enumerate(index_sets):
        rows, comps = np.nonzero(idx >= 0)
        np.add.at(jac, (rows, comps, idx[rows, comps]), weights[rows, k])

    if np.any(layout.seg_duration_var >= 0):
        d_duration, d_tau = hermite_basis_sensitivity(tau, d, order)
        dx_dd = np.einsum("nk,nkc->nc", d_duration, stack)
        dx_dtau = np.einsum("nk,nkc->nc", d_tau, stack)
        dmat = layout.duration_matrix(x.size)
        before = (np.arange(layout.n_segments)[None, :] < seg[:, None]).astype(float)
        dtau_dx = -(before @ dmat)
        ddur_dx = dmat[seg]
        dur_jac = dx_dtau[:, :, None] * dtau_dx[:, None, :] + dx_dd[:, :, None] * ddur_dx[:, None, :]
        dur_jac[clamped] = 0.0
        jac += dur_jac
    return SplineSamples(values=values, jacobian=jac, segment=seg)


def time_grid(horizon: float, dt: float) -> np.ndarray:
    """Uniform grid 0, dt, 2 dt, ... that always ends exactly at the horizon."""
    n = int(np.floor(horizon / dt + 1e-9))
    grid = dt * np.arange(n + 1)
    if grid[-1] < horizon - 1e-9:
        grid = np.append(grid, horizon)
    else:
        grid[-1] = horizon
    return grid
