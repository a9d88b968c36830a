"""
Test suite for solver_service.
"""

import pytest

from app.core import nlp
from app.services import solver_service


@pytest.mark.service
class TestBenchmarkJacobians:
    def test_benchmarks_are_exact(self):
        results = solver_service.check_benchmark_jacobians()

        assert results
        assert not any(check.flagged for check in results.values())

    def test_injected_fault_is_flagged(self):
        block = nlp.benchmark_problems()[0].problem.blocks[0].name

        results = solver_service.check_benchmark_jacobians(fault_block=block)

        assert [name for name, check in results.items() if check.flagged] == [block]

    def test_unknown_fault_block(self):
        with pytest.raises(ValueError, match="No constraint block named 'nowhere'"):
            solver_service.check_benchmark_jacobians(fault_block="nowhere")

    def test_inject_into_missing_block(self):
        bench = nlp.benchmark_problems()[0]

        with pytest.raises(ValueError, match="No constraint block"):
            solver_service.inject_jacobian_fault(bench.problem, "nowhere")


@pytest.mark.service
class TestPlannerJacobians:
    @pytest.mark.slow
    def test_flat_problem_passes(self, robot_model, desk_planner_config):
        results = solver_service.check_planner_jacobians(desk_planner_config, robot_model, flat=True)

        flagged = [name for name, check in results.items() if check.flagged]
        assert flagged == []

    @pytest.mark.slow
    def test_fault_in_planner_block(self, robot_model, desk_planner_config):
        results = solver_service.check_planner_jacobians(
            desk_planner_config, robot_model, flat=True, fault_block="dynamics"
        )

        assert results["dynamics"].flagged
        assert not results["kinematic_box"].flagged


@pytest.mark.service
class TestRunBenchmarks:
    def test_all_converge(self):
        results = solver_service.run_benchmarks()

        assert len(results) == len(nlp.benchmark_problems())
        assert all(r.converged for r in results)
