"""
Nonlinear program container and augmented-Lagrangian solver.

Constraint blocks are either equalities c(x) = 0 or inequalities g(x) >= 0 and
supply dense analytic Jacobians. The solver alternates bound-constrained
L-BFGS-B minimizations of the augmented Lagrangian with multiplier and
penalty updates.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Protocol

import numpy as np
from pydantic import BaseModel
from scipy.optimize import Bounds, least_squares, minimize

from app.exceptions import NlpEvaluationError
from app.schemas import SolveOptions

logger = logging.getLogger(__name__)

EQUALITY = "eq"
INEQUALITY = "ineq"

BlockFunction = Callable[[np.ndarray, bool], tuple[np.ndarray, Optional[np.ndarray]]]


# ============================================================================
# Problem Definition
# ============================================================================

@dataclass
class ConstraintBlock:
    """
    Named group of constraint rows.

    function(x, need_jacobian) returns the residual vector and, when requested,
    the dense (n_rows x n_vars) Jacobian.
    """

    name: str
    kind: Literal["eq", "ineq"]
    n_rows: int
    function: BlockFunction

    @classmethod
    def from_functions(
        cls,
        name: str,
        kind: Literal["eq", "ineq"],
        n_rows: int,
        residual: Callable[[np.ndarray], np.ndarray],
        jacobian: Callable[[np.ndarray], np.ndarray],
    ) -> "ConstraintBlock":
        def function(x: np.ndarray, need_jacobian: bool):
            return np.asarray(residual(x), dtype=float), (np.asarray(jacobian(x), dtype=float) if need_jacobian else None)
        return cls(name=name, kind=kind, n_rows=n_rows, function=function)

    @classmethod
    def linear(cls, name: str, kind: Literal["eq", "ineq"], matrix: np.ndarray, offset: np.ndarray) -> "ConstraintBlock":
        """Block with residual matrix @ x - offset."""
        matrix = np.asarray(matrix, dtype=float)
        offset = np.asarray(offset, dtype=float)

        def function(x: np.ndarray, need_jacobian: bool):
            return matrix @ x - offset, (matrix if need_jacobian else None)
        return cls(name=name, kind=kind, n_rows=matrix.shape[0], function=function)

    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.function(x, False)[0]

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return self.function(x, True)[1]

    def violation(self, values: np.ndarray) -> np.ndarray:
        """Per-row violation: |c| for equalities, max(0, -g) for inequalities."""
        if self.kind == EQUALITY:
            return np.abs(values)
        return np.maximum(0.0, -values)


@dataclass
class NlpProblem:
    """Variables with bounds, constraint blocks and an optional objective."""

    n_vars: int
    lower: np.ndarray
    upper: np.ndarray
    blocks: list[ConstraintBlock] = field(default_factory=list)
    objective: Optional[Callable[[np.ndarray], tuple[float, np.ndarray]]] = None

    def __post_init__(self):
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.n_vars,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.n_vars,)).copy()
        if np.any(self.lower > self.upper):
            raise ValueError("Variable bounds must satisfy lower <= upper")

    @property
    def n_constraints(self) -> int:
        return sum(block.n_rows for block in self.blocks)

    def block(self, name: str) -> ConstraintBlock:
        for block in self.blocks:
            if block.name == name:
                return block
        raise KeyError(name)

    def clamp(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def evaluate_block(self, block: ConstraintBlock, x: np.ndarray, need_jacobian: bool):
        """
        Evaluate one block and validate its output.

        Raises:
            NlpEvaluationError: On non-finite residuals or Jacobian entries
        """
        values, jac = block.function(x, need_jacobian)
        values = np.asarray(values, dtype=float)
        if values.shape != (block.n_rows,):
            raise NlpEvaluationError(block.name, f"Residual has shape {values.shape}, expected ({block.n_rows},)")
        if not np.all(np.isfinite(values)):
            raise NlpEvaluationError(block.name, "Non-finite residual")
        if need_jacobian:
            if jac is None or jac.shape != (block.n_rows, self.n_vars):
                shape = None if jac is None else jac.shape
                raise NlpEvaluationError(block.name, f"Jacobian has shape {shape}, expected ({block.n_rows}, {self.n_vars})")
            if not np.all(np.isfinite(jac)):
                raise NlpEvaluationError(block.name, "Non-finite Jacobian entry")
        return values, jac

    def objective_value(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        if self.objective is None:
            return 0.0, np.zeros(self.n_vars)
        value, grad = self.objective(x)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise NlpEvaluationError("objective", "Non-finite objective")
        return float(value), np.asarray(grad, dtype=float)


def violation_by_block(problem: NlpProblem, x: np.ndarray) -> dict[str, float]:
    """Maximum violation of every block (bound violations reported as 'bounds')."""
    report = {}
    for block in problem.blocks:
        values, _ = problem.evaluate_block(block, x, need_jacobian=False)
        report[block.name] = float(block.violation(values).max(initial=0.0))
    bound_violation = np.maximum(problem.lower - x, 0.0).max(initial=0.0)
    bound_violation = max(bound_violation, np.maximum(x - problem.upper, 0.0).max(initial=0.0))
    report["bounds"] = float(bound_violation)
    return report


def max_violation(problem: NlpProblem, x: np.ndarray) -> float:
    """Largest constraint or bound violation at x."""
    return max(violation_by_block(problem, x).values(), default=0.0)


# ============================================================================
# Solver
# ============================================================================

class SolveReport(BaseModel):
    """Outcome of one solve."""
    status: Literal["converged", "iteration-limit", "time-limit"]
    max_violation: float
    iterations: int
    inner_iterations: int = 0
    restarts: int = 0
    wall_time_s: float
    violation_history: list[float] = []

    @property
    def converged(self) -> bool:
        return self.status == "converged"


class SolverAdapter(Protocol):
    """Anything that can solve an NlpProblem from a starting point."""

    def solve(self, problem: NlpProblem, x0: np.ndarray, options: SolveOptions) -> tuple[np.ndarray, SolveReport]:
        ...


class _BudgetExhausted(Exception):
    """Raised inside an inner solve when the wall-clock budget runs out."""


@dataclass
class _Incumbent:
    """Best point seen so far: feasible points first, then the smallest sum of squared violations."""

    x: np.ndarray
    key: tuple[bool, float]
    violation: float

    @classmethod
    def empty(cls, n_vars: int) -> "_Incumbent":
        return cls(x=np.zeros(n_vars), key=(True, np.inf), violation=np.inf)

    def offer(self, x: np.ndarray, violations: np.ndarray, feas_tol: float) -> None:
        worst = float(violations.max(initial=0.0))
        key = (worst > feas_tol, float(violations @ violations))
        if key < self.key:
            self.x, self.key, self.violation = x.copy(), key, worst


def violation_vector(problem: NlpProblem, x: np.ndarray) -> np.ndarray:
    """Per-row violations of every block followed by the bound violations."""
    parts = [block.violation(problem.evaluate_block(block, x, need_jacobian=False)[0]) for block in problem.blocks]
    parts.append(np.maximum(problem.lower - x, 0.0))
    parts.append(np.maximum(x - problem.upper, 0.0))
    return np.concatenate(parts)


class AugmentedLagrangianSolver:
    """
    Powell-Hestenes-Rockafellar augmented Lagrangian.

    With multipliers lambda and penalty rho the merit is
    f + rho/2 ||r||^2 with shifted residuals r = c + lambda/rho for equality
    rows and r = max(0, mu/rho - g) for inequality rows g >= 0.

    Feasibility problems (no objective) minimize ||r||^2 directly as a bounded
    nonlinear least-squares problem with trust-region reflective Gauss-Newton
    steps. With an objective the merit is minimized by L-BFGS-B. Between outer
    iterations the multipliers are updated, the penalty grows when the
    violation stalls, and a stalled run restarts from the incumbent with
    seeded multiplicative noise of relative size options.restart_sigma.

    The returned point is the best one evaluated: feasible points first, then
    the smallest sum of squared violations over all blocks and bounds.
    """

    def solve(self, problem: NlpProblem, x0: np.ndarray, options: SolveOptions) -> tuple[np.ndarray, SolveReport]:
        start = time.monotonic()
        deadline = start + options.time_budget_s
        x = problem.clamp(x0)
        rng = np.random.default_rng(options.seed)

        multipliers = [np.zeros(block.n_rows) for block in problem.blocks]
        penalty = options.penalty_init
        incumbent = _Incumbent.empty(problem.n_vars)

        violations = violation_vector(problem, x)
        incumbent.offer(x, violations, options.feas_tol)
        violation = float(violations.max(initial=0.0))
        history = [violation]
        inner_iterations = 0
        restarts = 0
        status = "iteration-limit"
        outer = 0

        if violation <= options.feas_tol and problem.objective is None:
            status = "converged"
        else:
            least_squares_inner = problem.objective is None and bool(np.all(problem.lower < problem.upper))

            def shifted(z: np.ndarray, need_jacobian: bool):
                if time.monotonic() > deadline:
                    raise _BudgetExhausted()
                rows, jacobians, block_violations = [], [], []
                for block, lam in zip(problem.blocks, multipliers):
                    c, jac = problem.evaluate_block(block, z, need_jacobian)
                    block_violations.append(block.violation(c))
                    if block.kind == EQUALITY:
                        rows.append(c + lam / penalty)
                        if need_jacobian:
                            jacobians.append(jac)
                    else:
                        active = lam / penalty - c > 0.0
                        rows.append(np.where(active, lam / penalty - c, 0.0))
                        if need_jacobian:
                            jacobians.append(np.where(active[:, None], -jac, 0.0))
                block_violations.append(np.maximum(problem.lower - z, 0.0))
                block_violations.append(np.maximum(z - problem.upper, 0.0))
                incumbent.offer(z, np.concatenate(block_violations), options.feas_tol)
                residual = np.concatenate(rows) if rows else np.zeros(0)
                if not need_jacobian:
                    return residual, None
                jacobian = np.vstack(jacobians) if jacobians else np.zeros((0, problem.n_vars))
                return residual, jacobian

            def merit(z: np.ndarray) -> tuple[float, np.ndarray]:
                r, jac = shifted(z, need_jacobian=True)
                value, grad = problem.objective_value(z)
                return value + 0.5 * penalty * float(r @ r), grad + penalty * (jac.T @ r)

            for outer in range(1, options.max_outer + 1):
                try:
                    if least_squares_inner:
                        result = least_squares(
                            lambda z: shifted(z, need_jacobian=False)[0],
                            x,
                            jac=lambda z: shifted(z, need_jacobian=True)[1],
                            bounds=(problem.lower, problem.upper),
                            method="trf",
                            x_scale="jac",
                            ftol=options.inner_ftol,
                            xtol=options.inner_tol,
                            gtol=options.inner_tol,
                            max_nfev=options.max_inner,
                        )
                        inner_iterations += int(result.njev or 0)
                    else:
                        result = minimize(
                            merit,
                            x,
                            jac=True,
                            method="L-BFGS-B",
                            bounds=Bounds(problem.lower, problem.upper),
                            options={
                                "maxiter": options.max_inner,
                                "maxfun": 4 * options.max_inner,
                                "gtol": options.inner_tol,
                                "ftol": 1e-15,
                            },
                        )
                        inner_iterations += int(result.nit)
                    x = problem.clamp(result.x)
                except _BudgetExhausted:
                    x = incumbent.x.copy()
                    status = "time-limit"

                previous = violation
                violations = violation_vector(problem, x)
                incumbent.offer(x, violations, options.feas_tol)
                violation = float(violations.max(initial=0.0))
                history.append(violation)
                logger.debug(f"AL outer {outer}: violation={violation:.3e} penalty={penalty:.1e}")

                if incumbent.violation <= options.feas_tol and problem.objective is None:
                    status = "converged"
                    break
                if violation <= options.feas_tol and problem.objective is not None:
                    status = "converged"
                    break
                if status == "time-limit":
                    break

                for k, block in enumerate(problem.blocks):
                    c, _ = problem.evaluate_block(block, x, need_jacobian=False)
                    if block.kind == EQUALITY:
                        multipliers[k] = np.clip(multipliers[k] + penalty * c,
                                                 -options.multiplier_bound, options.multiplier_bound)
                    else:
                        multipliers[k] = np.clip(multipliers[k] - penalty * c, 0.0, options.multiplier_bound)
                if violation > previous / options.violation_shrink:
                    penalty = min(penalty * options.penalty_growth, options.penalty_max)
                if violation > (1.0 - options.stall_ratio) * previous and options.restart_sigma > 0.0:
                    noise = rng.normal(size=problem.n_vars) * options.restart_sigma * (1.0 + np.abs(incumbent.x))
                    x = problem.clamp(incumbent.x + noise)
                    restarts += 1
                    logger.debug(f"AL outer {outer}: stalled at {violation:.3e}, restarting from the incumbent")

        if status == "converged" and problem.objective is not None:
            best_x, best_violation = x, violation
        else:
            best_x, best_violation = incumbent.x, incumbent.violation

        report = SolveReport(
            status=status,
            max_violation=best_violation,
            iterations=outer,
            inner_iterations=inner_iterations,
            restarts=restarts,
            wall_time_s=time.monotonic() - start,
            violation_history=history,
        )
        logger.info(
            f"Solve finished: status={report.status} violation={report.max_violation:.3e} "
            f"outer={report.iterations} inner={report.inner_iterations} restarts={report.restarts} "
            f"time={report.wall_time_s:.2f}s"
        )
        return best_x, report


def solve(
    problem: NlpProblem,
    x0: np.ndarray,
    options: Optional[SolveOptions] = None,
    solver: Optional[SolverAdapter] = None,
) -> tuple[np.ndarray, SolveReport]:
    """
    Solve a nonlinear program.

    Args:
        problem: Problem to solve
        x0: Starting point (clamped into the bounds)
        options: Tolerances and budgets; defaults to SolveOptions()
        solver: Alternative solver implementation

    Returns:
        tuple: (solution vector, SolveReport)

    Raises:
        NlpEvaluationError: If a block produces non-finite values
    """
    options = options or SolveOptions()
    solver = solver or AugmentedLagrangianSolver()
    return solver.solve(problem, np.asarray(x0, dtype=float), options)


# ============================================================================
# Jacobian Verification
# ============================================================================

class JacobianCheck(BaseModel):
    """Finite-difference comparison for one block."""
    block: str
    max_abs_error: float
    max_rel_error: float
    flagged: bool


def check_jacobians(
    problem: NlpProblem,
    x: np.ndarray,
    step: float = 1e-6,
    rel_tol: float = 1e-4,
) -> dict[str, JacobianCheck]:
    """
    Compare analytic Jacobians with central finite differences.

    The relative error of a block is max|J - J_fd| / max(1, max|J_fd|).

    Args:
        problem: Problem whose blocks are checked
        x: Evaluation point
        step: Finite-difference step
        rel_tol: Threshold above which a block is flagged

    Returns:
        dict: Block name to JacobianCheck
    """
    x = np.asarray(x, dtype=float)
    results = {}
    for block in problem.blocks:
        _, analytic = problem.evaluate_block(block, x, need_jacobian=True)
        numeric = np.zeros_like(analytic)
        for j in range(problem.n_vars):
            forward = x.copy()
            backward = x.copy()
            forward[j] += step
            backward[j] -= step
            numeric[:, j] = (block.residual(forward) - block.residual(backward)) / (2.0 * step)
        abs_error = float(np.abs(analytic - numeric).max(initial=0.0))
        rel_error = abs_error / max(1.0, float(np.abs(numeric).max(initial=0.0)))
        results[block.name] = JacobianCheck(
            block=block.name,
            max_abs_error=abs_error,
            max_rel_error=rel_error,
            flagged=rel_error > rel_tol,
        )
        if rel_error > rel_tol:
            logger.warning(f"Jacobian mismatch in block '{block.name}': rel. error {rel_error:.3e}")
    return results


# ============================================================================
# Benchmarks
# ============================================================================

@dataclass
class BenchmarkProblem:
    """Small problem with a known feasible answer."""

    name: str
    problem: NlpProblem
    x0: np.ndarray
    options: SolveOptions


def benchmark_problems() -> list[BenchmarkProblem]:
    """
    Shipped solver benchmarks.

    - box: 1 <= x <= 2 written as inequalities, start x = 5
    - linear: x + y = 1, x - y = 0, start (0, 0)
    - circle: x^2 + y^2 = 1, start (2, 0)
    """
    box = NlpProblem(
        n_vars=1, lower=-np.inf, upper=np.inf,
        blocks=[ConstraintBlock.linear("box", INEQUALITY, np.array([[1.0], [-1.0]]), np.array([1.0, -2.0]))],
    )
    linear = NlpProblem(
        n_vars=2, lower=-np.inf, upper=np.inf,
        blocks=[ConstraintBlock.linear("linear", EQUALITY, np.array([[1.0, 1.0], [1.0, -1.0]]), np.array([1.0, 0.0]))],
    )
    circle = NlpProblem(
        n_vars=2, lower=-np.inf, upper=np.inf,
        blocks=[ConstraintBlock.from_functions(
            "circle", EQUALITY, 1,
            residual=lambda z: np.array([z[0] ** 2 + z[1] ** 2 - 1.0]),
            jacobian=lambda z: np.array([[2.0 * z[0], 2.0 * z[1]]]),
        )],
    )
    return [
        BenchmarkProblem("box", box, np.array([5.0]), SolveOptions()),
        BenchmarkProblem("linear", linear, np.array([0.0, 0.0]), SolveOptions(feas_tol=1e-8)),
        BenchmarkProblem("circle", circle, np.array([2.0, 0.0]), SolveOptions()),
    ]
