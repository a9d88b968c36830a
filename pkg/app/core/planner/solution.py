"""
Planner results: reconstructed splines, phase schedule and JSON serialization.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel

from app.core.nlp import SolveReport
from app.core.planner.layout import VariableLayout
from app.core.spline import PhaseSchedule, PhaseSpline
from app.schemas import PlannerConfig


@dataclass(frozen=True)
class CentroidalSolution:
    """Optimized CoM, orientation, foot and force splines."""

    com: PhaseSpline
    base: PhaseSpline
    feet: tuple[PhaseSpline, ...]
    forces: tuple[PhaseSpline, ...]
    schedule: PhaseSchedule
    report: SolveReport
    horizon: float
    rng_seed: int = 0
    terrain_seed: Optional[int] = None

    @property
    def converged(self) -> bool:
        return self.report.converged

    @staticmethod
    def _at(spline: PhaseSpline, t: float, order: int = 0) -> np.ndarray:
        # Leg splines may end within the feasibility tolerance of the horizon.
        t = min(max(t, 0.0), spline.total_duration)
        index, tau = spline.locate(t)
        return spline.segments[index].evaluate(tau, order)

    def com_state(self, t: float, order: int = 0) -> np.ndarray:
        return self._at(self.com, t, order)

    def base_state(self, t: float, order: int = 0) -> np.ndarray:
        return self._at(self.base, t, order)

    def foot(self, leg: int, t: float, order: int = 0) -> np.ndarray:
        return self._at(self.feet[leg], t, order)

    def force(self, leg: int, t: float) -> np.ndarray:
        return self._at(self.forces[leg], t, 0)


def reconstruct_solution(
    layout: VariableLayout,
    x: np.ndarray,
    report: SolveReport,
    config: PlannerConfig,
    rng_seed: int = 0,
    terrain_seed: Optional[int] = None,
) -> CentroidalSolution:
    """Turn a solution vector back into splines."""
    schedule = PhaseSchedule(durations=tuple(tuple(x[leg.duration_index]) for leg in layout.legs))
    return CentroidalSolution(
        com=layout.com.to_spline(x),
        base=layout.base.to_spline(x),
        feet=tuple(leg.foot.to_spline(x) for leg in layout.legs),
        forces=tuple(leg.force.to_spline(x) for leg in layout.legs),
        schedule=schedule,
        report=report,
        horizon=config.horizon,
        rng_seed=rng_seed,
        terrain_seed=terrain_seed,
    )


# ============================================================================
# Serialization
# ============================================================================

class SplineRecord(BaseModel):
    """Node table of one spline."""
    positions: list[list[float]]
    velocities: list[list[float]]
    durations: list[float]
    phase_tags: Optional[list[str]] = None


class SolutionRecord(BaseModel):
    """JSON form of a CentroidalSolution."""
    horizon: float
    rng_seed: int
    terrain_seed: Optional[int] = None
    com: SplineRecord
    base: SplineRecord
    feet: list[SplineRecord]
    forces: list[SplineRecord]
    phase_durations: list[list[float]]
    report: SolveReport


def _spline_record(spline: PhaseSpline) -> SplineRecord:
    positions = [spline.segments[0].p0] + [s.p1 for s in spline.segments]
    velocities = [spline.segments[0].v0] + [s.v1 for s in spline.segments]
    return SplineRecord(
        positions=[p.tolist() for p in positions],
        velocities=[v.tolist() for v in velocities],
        durations=spline.durations.tolist(),
        phase_tags=list(spline.phase_tags) if spline.phase_tags is not None else None,
    )


def _spline_from_record(record: SplineRecord) -> PhaseSpline:
    return PhaseSpline.from_nodes(
        np.array(record.positions), np.array(record.velocities), record.durations, record.phase_tags
    )


def solution_to_record(solution: CentroidalSolution) -> SolutionRecord:
    return SolutionRecord(
        horizon=solution.horizon,
        rng_seed=solution.rng_seed,
        terrain_seed=solution.terrain_seed,
        com=_spline_record(solution.com),
        base=_spline_record(solution.base),
        feet=[_spline_record(s) for s in solution.feet],
        forces=[_spline_record(s) for s in solution.forces],
        phase_durations=[list(leg) for leg in solution.schedule.durations],
        report=solution.report,
    )


def solution_from_record(record: SolutionRecord) -> CentroidalSolution:
    return CentroidalSolution(
        com=_spline_from_record(record.com),
        base=_spline_from_record(record.base),
        feet=tuple(_spline_from_record(s) for s in record.feet),
        forces=tuple(_spline_from_record(s) for s in record.forces),
        schedule=PhaseSchedule(durations=tuple(tuple(leg) for leg in record.phase_durations)),
        report=record.report,
        horizon=record.horizon,
        rng_seed=record.rng_seed,
        terrain_seed=record.terrain_seed,
    )


def save_solution(solution: CentroidalSolution, path: Path) -> Path:
    """Write a solution as JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(solution_to_record(solution).model_dump_json(indent=2), encoding="utf-8")
    return path


def load_solution(path: Path) -> CentroidalSolution:
    """Read a solution written by save_solution."""
    return solution_from_record(SolutionRecord.model_validate(json.loads(Path(path).read_text(encoding="utf-8"))))
