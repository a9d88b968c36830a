"""
Piecewise cubic Hermite splines with variable segment durations.

A segment of duration d is evaluated at local time tau with u = tau / d:
    x(tau) = h00(u) p0 + d h10(u) v0 + h01(u) p1 + d h11(u) v1
Knot times resolve to the left segment; t = 0 resolves to the first segment.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from app.exceptions import SplineEvaluationError

logger = logging.getLogger(__name__)

# Knot lookups tolerate accumulated rounding at the horizon end.
_TIME_TOL = 1e-9

STANCE = "stance"
SWING = "swing"

# Rows: h00, h10, h01, h11. Columns: polynomial coefficients in u, highest power first.
_BASIS = np.array([
    [2.0, -3.0, 0.0, 1.0],
    [1.0, -2.0, 1.0, 0.0],
    [-2.0, 3.0, 0.0, 0.0],
    [1.0, -1.0, 0.0, 0.0],
])
# Velocity weights carry one extra power of the duration.
_VELOCITY_MASK = np.array([0.0, 1.0, 0.0, 1.0])


def _derivative(coeffs: np.ndarray) -> np.ndarray:
    return np.column_stack([np.zeros(len(coeffs)), 3.0 * coeffs[:, 0], 2.0 * coeffs[:, 1], coeffs[:, 2]])


_BASIS_DERIVATIVES = [_BASIS]
for _ in range(3):
    _BASIS_DERIVATIVES.append(_derivative(_BASIS_DERIVATIVES[-1]))


def _basis_u(u, n: int) -> np.ndarray:
    """n-th u-derivative of the four basis polynomials, shape (..., 4)."""
    c = _BASIS_DERIVATIVES[n]
    u = np.asarray(u, dtype=float)[..., None]
    return ((c[:, 0] * u + c[:, 1]) * u + c[:, 2]) * u + c[:, 3]


def hermite_basis(tau, duration, order: int = 0) -> np.ndarray:
    """
    Weights of (p0, v0, p1, v1) for the value or a time derivative at local time tau.

    Args:
        tau: Local time(s) inside the segment
        duration: Segment duration(s), broadcastable with tau
        order: 0 for position, 1 for velocity, 2 for acceleration

    Returns:
        np.ndarray: Weights with shape (..., 4)

    Example:
        >>> hermite_basis(0.5, 1.0) @ np.array([0.0, 0.0, 1.0, 0.0])
        0.5
    """
    tau = np.asarray(tau, dtype=float)
    duration = np.asarray(duration, dtype=float)
    u = tau / duration
    exponents = _VELOCITY_MASK - order
    scale = np.power(duration[..., None], exponents)
    return _basis_u(u, order) * scale


def hermite_basis_sensitivity(tau, duration, order: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """
    Partial derivatives of the hermite_basis weights.

    With w_k = d^e_k B_k(u) and u = tau / d:
        dw_k/dd   = d^(e_k - 1) (e_k B_k(u) - u B_k'(u))   at fixed tau
        dw_k/dtau = d^(e_k - 1) B_k'(u)                    at fixed d

    Returns:
        tuple: (d weights / d duration, d weights / d tau), each shaped (..., 4)
    """
    tau = np.asarray(tau, dtype=float)
    duration = np.asarray(duration, dtype=float)
    u = tau / duration
    exponents = _VELOCITY_MASK - order
    scale = np.power(duration[..., None], exponents - 1.0)
    b = _basis_u(u, order)
    db = _basis_u(u, order + 1)
    d_duration = scale * (exponents * b - u[..., None] * db)
    d_tau = scale * db
    return d_duration, d_tau


@dataclass(frozen=True)
class HermiteSegment:
    """Cubic segment between two nodes."""

    p0: np.ndarray
    v0: np.ndarray
    p1: np.ndarray
    v1: np.ndarray
    duration: float

    def __post_init__(self):
        if not self.duration > 0.0:
            raise ValueError(f"Segment duration must be positive, got {self.duration}")
        for name in ("p0", "v0", "p1", "v1"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    @property
    def nodes(self) -> np.ndarray:
        """Stacked (p0, v0, p1, v1), shape (4, dim)."""
        return np.stack([self.p0, self.v0, self.p1, self.v1])

    def evaluate(self, tau: float, order: int = 0) -> np.ndarray:
        return hermite_basis(tau, self.duration, order) @ self.nodes


@dataclass(frozen=True)
class PhaseSpline:
    """
    Ordered Hermite segments forming one vector-valued trajectory.

    phase_tags optionally labels each segment as stance or swing (end-effector splines).
    """

    segments: tuple[HermiteSegment, ...]
    phase_tags: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if not self.segments:
            raise ValueError("A spline needs at least one segment")
        object.__setattr__(self, "segments", tuple(self.segments))
        if self.phase_tags is not None:
            tags = tuple(self.phase_tags)
            if len(tags) != len(self.segments):
                raise ValueError("phase_tags must label every segment")
            object.__setattr__(self, "phase_tags", tags)

    @classmethod
    def from_nodes(
        cls,
        positions: np.ndarray,
        velocities: np.ndarray,
        durations: Sequence[float],
        phase_tags: Optional[Sequence[str]] = None,
    ) -> "PhaseSpline":
        """Build a C1 spline through node positions and velocities."""
        positions = np.asarray(positions, dtype=float)
        velocities = np.asarray(velocities, dtype=float)
        if len(positions) != len(durations) + 1 or len(velocities) != len(positions):
            raise ValueError("Need one more node than durations")
        segments = tuple(
            HermiteSegment(positions[k], velocities[k], positions[k + 1], velocities[k + 1], float(durations[k]))
            for k in range(len(durations))
        )
        return cls(segments=segments, phase_tags=tuple(phase_tags) if phase_tags is not None else None)

    @property
    def durations(self) -> np.ndarray:
        return np.array([s.duration for s in self.segments])

    @property
    def knot_times(self) -> np.ndarray:
        """Segment boundaries including 0 and the total duration."""
        return np.concatenate([[0.0], np.cumsum(self.durations)])

    @property
    def total_duration(self) -> float:
        return float(np.sum(self.durations))

    @property
    def dim(self) -> int:
        return self.segments[0].p0.size

    def locate(self, t: float) -> tuple[int, float]:
        """
        Containing segment and local time.

        Raises:
            SplineEvaluationError: If t is outside [0, total duration]
        """
        total = self.total_duration
        if t < -_TIME_TOL or t > total + _TIME_TOL:
            raise SplineEvaluationError(f"Time {t} outside spline domain [0, {total}]")
        t = min(max(t, 0.0), total)
        ends = np.cumsum(self.durations)
        index = min(int(np.searchsorted(ends, t, side="left")), len(self.segments) - 1)
        start = ends[index] - self.segments[index].duration
        return index, min(max(t - start, 0.0), self.segments[index].duration)

    def evaluate(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Value, first and second derivative at t."""
        index, tau = self.locate(t)
        segment = self.segments[index]
        return segment.evaluate(tau, 0), segment.evaluate(tau, 1), segment.evaluate(tau, 2)

    def phase_at(self, t: float) -> Optional[str]:
        if self.phase_tags is None:
            return None
        return self.phase_tags[self.locate(t)[0]]

    def sample(self, times: np.ndarray, order: int = 0) -> np.ndarray:
        """Evaluate at many times, shape (len(times), dim)."""
        return np.array([self.segments[i].evaluate(tau, order) for i, tau in map(self.locate, times)])


def evaluate(spline: PhaseSpline, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Evaluate a spline and its first two time derivatives.

    Args:
        spline: Spline to evaluate
        t: Time in [0, total duration]

    Returns:
        tuple: (value, first derivative, second derivative)

    Raises:
        SplineEvaluationError: If t is outside the spline domain
    """
    return spline.evaluate(t)


def duration_gradient(spline: PhaseSpline, t: float, order: int = 0) -> np.ndarray:
    """
    Sensitivity of the evaluated value (or derivative) to every segment duration.

    Earlier segments shift the local time of the containing segment, so their
    sensitivity is minus the next-order derivative. The containing segment
    contributes through its own basis weights. Later segments do not matter.
    At a knot the left segment is used.

    Args:
        spline: Spline to differentiate
        t: Absolute time in [0, total duration]
        order: Derivative order of the evaluated quantity (0, 1 or 2)

    Returns:
        np.ndarray: Shape (n_segments, dim)
    """
    index, tau = spline.locate(t)
    segment = spline.segments[index]
    d_duration, d_tau = hermite_basis_sensitivity(tau, segment.duration, order)
    grad = np.zeros((len(spline.segments), spline.dim))
    grad[:index] = -(d_tau @ segment.nodes)
    grad[index] = d_duration @ segment.nodes
    return grad


def parameter_gradient(spline: PhaseSpline, t: float, order: int = 0) -> tuple[int, np.ndarray]:
    """
    Weights of the containing segment's (p0, v0, p1, v1) in the evaluated quantity.

    Returns:
        tuple: (segment index, weights of shape (4,))
    """
    index, tau = spline.locate(t)
    return index, hermite_basis(tau, spline.segments[index].duration, order)


# ============================================================================
# Phase Schedules
# ============================================================================

@dataclass(frozen=True)
class PhaseSchedule:
    """
    Per-leg alternating stance/swing durations.

    Every leg starts in stance. A boundary instant belongs to the phase that ends there.
    """

    durations: tuple[tuple[float, ...], ...]
    initial_phase: str = STANCE

    def __post_init__(self):
        object.__setattr__(self, "durations", tuple(tuple(float(d) for d in leg) for leg in self.durations))

    @property
    def n_legs(self) -> int:
        return len(self.durations)

    def total_duration(self, leg: int) -> float:
        return float(sum(self.durations[leg]))

    def phase_kind(self, phase: int) -> str:
        first_is_stance = self.initial_phase == STANCE
        return STANCE if (phase % 2 == 0) == first_is_stance else SWING

    def phase_index(self, leg: int, t: float) -> int:
        ends = np.cumsum(self.durations[leg])
        return min(int(np.searchsorted(ends, t - _TIME_TOL, side="left")), len(ends) - 1)

    def in_contact(self, leg: int, t: float) -> bool:
        return self.phase_kind(self.phase_index(leg, t)) == STANCE

    def contact_flags(self, times: np.ndarray) -> np.ndarray:
        """Binary contact indicators, shape (len(times), n_legs)."""
        flags = np.zeros((len(times), self.n_legs), dtype=float)
        for leg in range(self.n_legs):
            ends = np.cumsum(self.durations[leg])
            phases = np.minimum(np.searchsorted(ends, np.asarray(times) - _TIME_TOL, side="left"), len(ends) - 1)
            flags[:, leg] = [1.0 if self.phase_kind(int(p)) == STANCE else 0.0 for p in phases]
        return flags

    def stance_intervals(self, leg: int) -> list[tuple[float, float]]:
        """(start, end) of every stance phase of a leg."""
        edges = np.concatenate([[0.0], np.cumsum(self.durations[leg])])
        return [
            (float(edges[k]), float(edges[k + 1]))
            for k in range(len(self.durations[leg]))
            if self.phase_kind(k) == STANCE
        ]

    @classmethod
    def trot(cls, horizon: float, n_stance_phases: int, n_legs: int = 4) -> "PhaseSchedule":
        """
        Fly-trot pattern with diagonal pairs (LF, RH) and (RF, LH).

        With cycle unit c, swings last 0.6c and inner stances 0.4c. The first pair
        opens with a 0.5c stance, the second with a c stance, and each leg's last
        stance absorbs the remainder of the horizon.

        Example:
            >>> PhaseSchedule.trot(4.6, 5).durations[0][0]
            0.45098039215686275
        """
        if n_stance_phases == 1:
            return cls(durations=tuple((horizon,) for _ in range(n_legs)))
        n = n_stance_phases
        unit = horizon / (1.5 + 0.6 * (n - 1) + 0.4 * (n - 2))
        swing, stance = 0.6 * unit, 0.4 * unit
        legs = []
        for leg in range(n_legs):
            first = 0.5 * unit if leg in (0, 3) else unit
            phases = [first]
            for k in range(n - 1):
                phases.append(swing)
                if k < n - 2:
                    phases.append(stance)
            phases.append(horizon - sum(phases))
            legs.append(tuple(phases))
        return cls(durations=tuple(legs))
