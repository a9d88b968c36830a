"""
Test suite for Hermite splines and phase schedules.
"""

import numpy as np
import pytest

from app.core.spline import (
    STANCE,
    SWING,
    HermiteSegment,
    PhaseSchedule,
    PhaseSpline,
    duration_gradient,
    evaluate,
    hermite_basis,
    parameter_gradient,
)
from app.exceptions import SplineEvaluationError


@pytest.fixture
def spline() -> PhaseSpline:
    positions = np.array([[0.0, 0.0], [1.0, 0.5], [1.5, -0.2], [2.0, 0.0]])
    velocities = np.array([[0.0, 0.0], [1.2, 0.3], [0.4, -0.6], [0.0, 0.0]])
    return PhaseSpline.from_nodes(positions, velocities, [0.4, 0.7, 0.3], [STANCE, SWING, STANCE])


# ============================================================================
# Segments
# ============================================================================

class TestHermiteSegment:

    def test_interpolates_endpoints(self):
        segment = HermiteSegment(p0=[1.0], v0=[2.0], p1=[3.0], v1=[-1.0], duration=0.5)

        assert segment.evaluate(0.0)[0] == pytest.approx(1.0)
        assert segment.evaluate(0.5)[0] == pytest.approx(3.0)
        assert segment.evaluate(0.0, order=1)[0] == pytest.approx(2.0)
        assert segment.evaluate(0.5, order=1)[0] == pytest.approx(-1.0)

    def test_midpoint_weight(self):
        assert hermite_basis(0.5, 1.0) @ np.array([0.0, 0.0, 1.0, 0.0]) == pytest.approx(0.5)

    def test_acceleration_matches_finite_difference(self):
        segment = HermiteSegment(p0=[0.2], v0=[1.0], p1=[0.9], v1=[0.3], duration=0.8)
        h = 1e-5
        fd = (segment.evaluate(0.3 + h, 1) - segment.evaluate(0.3 - h, 1)) / (2 * h)

        assert segment.evaluate(0.3, 2)[0] == pytest.approx(fd[0], rel=1e-6)

    def test_non_positive_duration_raises(self):
        with pytest.raises(ValueError, match="positive"):
            HermiteSegment(p0=[0.0], v0=[0.0], p1=[1.0], v1=[0.0], duration=0.0)


# ============================================================================
# Splines
# ============================================================================

class TestPhaseSpline:

    def test_knot_times(self, spline):
        np.testing.assert_allclose(spline.knot_times, [0.0, 0.4, 1.1, 1.4])
        assert spline.total_duration == pytest.approx(1.4)

    def test_continuous_value_and_velocity_at_knots(self, spline):
        for k, t in enumerate(spline.knot_times[1:-1]):
            left = spline.segments[k]
            right = spline.segments[k + 1]
            np.testing.assert_allclose(left.evaluate(left.duration), right.evaluate(0.0), atol=1e-12)
            np.testing.assert_allclose(left.evaluate(left.duration, 1), right.evaluate(0.0, 1), atol=1e-12)

    def test_knot_resolves_to_left_segment(self, spline):
        assert spline.locate(0.4)[0] == 0
        assert spline.locate(0.0)[0] == 0
        assert spline.phase_at(0.4) == STANCE
        assert spline.phase_at(0.5) == SWING

    def test_evaluate_returns_three_derivatives(self, spline):
        value, velocity, acceleration = evaluate(spline, 1.4)

        np.testing.assert_allclose(value, [2.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(velocity, [0.0, 0.0], atol=1e-12)
        assert acceleration.shape == (2,)

    def test_outside_domain_raises(self, spline):
        with pytest.raises(SplineEvaluationError):
            evaluate(spline, 1.5)
        with pytest.raises(SplineEvaluationError):
            evaluate(spline, -0.1)

    def test_superposition_of_node_sets(self):
        rng = np.random.default_rng(2)
        durations = [0.4, 0.7, 0.3]
        pa, va, pb, vb = (rng.normal(size=(4, 3)) for _ in range(4))
        a, b = 1.7, -0.6
        combined = PhaseSpline.from_nodes(a * pa + b * pb, a * va + b * vb, durations)
        first = PhaseSpline.from_nodes(pa, va, durations)
        second = PhaseSpline.from_nodes(pb, vb, durations)

        for t in np.linspace(0.0, 1.4, 29):
            for k in range(3):
                np.testing.assert_allclose(
                    combined.evaluate(t)[k], a * first.evaluate(t)[k] + b * second.evaluate(t)[k], atol=1e-10
                )

    def test_sample_shape(self, spline):
        assert spline.sample(np.linspace(0.0, 1.4, 15)).shape == (15, 2)

    @pytest.mark.parametrize("order", [0, 1, 2])
    def test_duration_gradient_matches_finite_difference(self, spline, order):
        t = 0.9
        h = 1e-6
        grad = duration_gradient(spline, t, order)
        for k in range(len(spline.segments)):
            durations = spline.durations.copy()
            durations[k] += h
            up = PhaseSpline(segments=tuple(
                HermiteSegment(s.p0, s.v0, s.p1, s.v1, d) for s, d in zip(spline.segments, durations)
            ))
            durations[k] -= 2 * h
            down = PhaseSpline(segments=tuple(
                HermiteSegment(s.p0, s.v0, s.p1, s.v1, d) for s, d in zip(spline.segments, durations)
            ))
            fd = (up.sample([t], order)[0] - down.sample([t], order)[0]) / (2 * h)
            np.testing.assert_allclose(grad[k], fd, rtol=1e-4, atol=1e-6)

    def test_parameter_gradient_reproduces_value(self, spline):
        index, weights = parameter_gradient(spline, 0.9)

        np.testing.assert_allclose(weights @ spline.segments[index].nodes, spline.sample([0.9])[0], atol=1e-12)


# ============================================================================
# Phase Schedules
# ============================================================================

class TestPhaseSchedule:

    def test_trot_fills_horizon(self):
        schedule = PhaseSchedule.trot(4.6, 5)

        for leg in range(4):
            assert schedule.total_duration(leg) == pytest.approx(4.6)
            assert len(schedule.durations[leg]) == 9
            assert all(d > 0.0 for d in schedule.durations[leg])

    def test_trot_diagonal_pairs_share_timing(self):
        schedule = PhaseSchedule.trot(4.6, 5)

        assert schedule.durations[0] == schedule.durations[3]
        assert schedule.durations[1] == schedule.durations[2]
        assert schedule.durations[0][0] == pytest.approx(0.45098039215686275)

    def test_single_stance_is_standing(self):
        schedule = PhaseSchedule.trot(1.0, 1)

        assert schedule.durations == ((1.0,),) * 4
        assert schedule.contact_flags(np.linspace(0.0, 1.0, 11)).min() == 1.0

    def test_boundary_instant_belongs_to_ending_phase(self):
        schedule = PhaseSchedule(durations=((0.5, 0.5, 1.0),))

        assert schedule.in_contact(0, 0.5)
        assert not schedule.in_contact(0, 0.51)
        assert not schedule.in_contact(0, 1.0)
        assert schedule.in_contact(0, 1.01)

    def test_stance_intervals(self):
        schedule = PhaseSchedule(durations=((0.5, 0.5, 1.0),))

        assert schedule.stance_intervals(0) == [(0.0, 0.5), (1.0, 2.0)]
