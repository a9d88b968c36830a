"""
Pydantic schemas for configuration, request/response validation and catalog records.
Provides type-safe data validation and serialization.
"""

from datetime import datetime
from pathlib import Path
from typing import Literal, Optional
from pydantic import BaseModel, Field, field_validator, model_validator, ConfigDict


# ============================================================================
# Terrain Schemas
# ============================================================================

class DistortionSpec(BaseModel):
    """Parameters of the contact-preserving terrain distortion."""
    embed_rows: int = Field(default=46, gt=0)
    embed_cols: int = Field(default=46, gt=0)
    n_rectangles: int = Field(default=8, ge=0)
    inner_scale_range: tuple[float, float] = (0.7, 1.0)
    outer_scale_range: tuple[float, float] = (0.8, 1.5)
    contact_patch_side: float = Field(default=0.10, gt=0.0)
    rng_seed: int = 0

    @field_validator("inner_scale_range", "outer_scale_range")
    @classmethod
    def validate_scale_range(cls, v: tuple[float, float]) -> tuple[float, float]:
        """Scale ranges must be positive, ordered intervals."""
        low, high = v
        if low <= 0.0 or high < low:
            raise ValueError(f"Scale range must satisfy 0 < low <= high, got {v}")
        return v


# ============================================================================
# Solver Schemas
# ============================================================================

class SolveOptions(BaseModel):
    """Augmented-Lagrangian solver options."""
    feas_tol: float = Field(default=1e-4, gt=0.0)
    max_outer: int = Field(default=30, ge=1)
    max_inner: int = Field(default=400, ge=1)
    time_budget_s: float = Field(default=60.0, gt=0.0)
    seed: int = 0
    penalty_init: float = Field(default=10.0, gt=0.0)
    penalty_growth: float = Field(default=5.0, gt=1.0)
    penalty_max: float = Field(default=1e9, gt=0.0)
    violation_shrink: float = Field(default=4.0, gt=1.0)
    multiplier_bound: float = Field(default=1e6, gt=0.0)
    inner_tol: float = Field(default=1e-10, gt=0.0)
    inner_ftol: float = Field(default=1e-8, gt=0.0)
    stall_ratio: float = Field(default=0.1, ge=0.0, lt=1.0)
    restart_sigma: float = Field(default=0.02, ge=0.0)


# ============================================================================
# Planner Schemas
# ============================================================================

class PlannerConfig(BaseModel):
    """Centroidal trajectory optimization settings."""
    horizon: float = Field(default=4.6, gt=0.0)
    goal_displacement: float = 2.3
    dynamics_dt: float = Field(default=0.1, gt=0.0)
    force_constraint_dt: float = Field(default=0.08, gt=0.0)
    swing_constraint_dt: float = Field(default=0.04, gt=0.0)
    force_bound_max: Optional[float] = Field(default=None, gt=0.0)
    phase_duration_bounds: tuple[float, float] = (0.1, 2.0)
    init_pos_noise_sigma: float = Field(default=0.10, ge=0.0)
    init_force_noise_sigma: float = Field(default=5.0, ge=0.0)
    gravity: float = Field(default=9.81, gt=0.0)

    n_stance_phases: int = Field(default=5, ge=1)
    com_segments: int = Field(default=10, ge=1)
    ee_polys_per_swing: int = Field(default=2, ge=1)
    force_polys_per_stance: int = Field(default=3, ge=1)
    nominal_height: float = Field(default=0.48, gt=0.0)
    swing_height_init: float = Field(default=0.10, ge=0.0)
    start_xy: tuple[float, float] = (0.0, 0.0)
    kinematic_box_full_orientation: bool = False
    reach_margin: float = Field(default=0.02, ge=0.0)
    planning_canvas: tuple[int, int] = (46, 46)

    solve: SolveOptions = Field(default_factory=SolveOptions)

    @field_validator("phase_duration_bounds")
    @classmethod
    def validate_duration_bounds(cls, v: tuple[float, float]) -> tuple[float, float]:
        """Phase duration bounds must be a positive ordered interval."""
        low, high = v
        if low <= 0.0 or high < low:
            raise ValueError(f"Phase duration bounds must satisfy 0 < min <= max, got {v}")
        return v

    @model_validator(mode="after")
    def validate_time_grid(self) -> "PlannerConfig":
        """Every sampling interval must fit in the horizon and the phases must be able to fill it."""
        for name in ("dynamics_dt", "force_constraint_dt", "swing_constraint_dt"):
            if getattr(self, name) > self.horizon:
                raise ValueError(f"{name} must not exceed the horizon {self.horizon}")
        low, high = self.phase_duration_bounds
        n_phases = self.n_phases
        if not (n_phases * low <= self.horizon + 1e-12 and self.horizon <= n_phases * high + 1e-12):
            raise ValueError(
                f"{n_phases} phases with durations in {self.phase_duration_bounds} cannot sum to {self.horizon}"
            )
        return self

    @property
    def n_phases(self) -> int:
        """Number of alternating stance/swing phases per leg."""
        return 2 * self.n_stance_phases - 1


# ============================================================================
# Tracking Schemas
# ============================================================================

class TrackingConfig(BaseModel):
    """Tracking reward, truncation and observation settings."""
    tau: float = Field(default=0.5, gt=0.0)
    reward_weights: tuple[float, float, float, float, float] = (0.2, 0.2, 0.2, 0.2, 0.2)
    reward_exponents: tuple[float, float, float, float, float] = (80.0, 80.0, 10.0, 10.0, 2.0)
    image_pixels: int = Field(default=32, gt=0)
    image_extent: float = Field(default=1.7, gt=0.0)
    image_offset: float = 0.40
    image_rate_hz: float = Field(default=10.0, gt=0.0)
    control_rate_hz: float = Field(default=100.0, gt=0.0)
    command_lookahead: int = Field(default=10, ge=0)
    finetune_v_target: float = 0.5
    eval_command: tuple[float, float] = (0.05, 0.0)
    bodies: tuple[str, ...] = ("base", "LF", "RF", "LH", "RH")

    @field_validator("reward_weights")
    @classmethod
    def validate_weights(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        """Reward weights are positive and sum to one."""
        if any(w <= 0.0 for w in v) or abs(sum(v) - 1.0) > 1e-9:
            raise ValueError(f"Reward weights must be positive and sum to 1.0, got {v}")
        return v

    @property
    def image_refresh_steps(self) -> int:
        """Control steps between two height-image refreshes."""
        return max(1, round(self.control_rate_hz / self.image_rate_hz))


# ============================================================================
# Evaluation Terrain Schemas
# ============================================================================

def _ordered(v: tuple[float, float]) -> tuple[float, float]:
    if v[1] < v[0]:
        raise ValueError(f"Range must satisfy low <= high, got {v}")
    return v


class StairsParams(BaseModel):
    """Sampling ranges of the stairs track."""
    n_steps: int = Field(default=20, ge=1)
    step_height_range: tuple[float, float] = (0.0, 0.10)
    step_length_range: tuple[float, float] = (0.10, 0.75)
    spread_range: tuple[float, float] = (0.0, 1.0)
    boxes_per_step: int = Field(default=3, ge=0)
    box_size: float = Field(default=0.20, gt=0.0)
    overlap_offset: float = 0.05
    ascent: Literal["monotone", "mixed"] = "monotone"

    @field_validator("step_height_range", "step_length_range", "spread_range")
    @classmethod
    def validate_ranges(cls, v: tuple[float, float]) -> tuple[float, float]:
        return _ordered(v)


class WavyParams(BaseModel):
    """Sampling ranges of the wavy steps track (meters and radians)."""
    length: float = Field(default=15.0, gt=0.0)
    lateral_gap_range: tuple[float, float] = (0.10, 0.15)
    offset_range: tuple[float, float] = (-0.05, 0.05)
    gap_range: tuple[float, float] = (0.15, 0.20)
    step_length_range: tuple[float, float] = (0.20, 0.40)
    step_width_range: tuple[float, float] = (0.30, 0.60)
    step_height: float = Field(default=0.72, gt=0.0)
    rotation_range: tuple[float, float] = (-0.15, 0.15)
    sine: bool = True

    @field_validator(
        "lateral_gap_range", "offset_range", "gap_range", "step_length_range", "step_width_range", "rotation_range"
    )
    @classmethod
    def validate_ranges(cls, v: tuple[float, float]) -> tuple[float, float]:
        return _ordered(v)


class SlitsParams(BaseModel):
    """Platforms separated by gaps."""
    length: float = Field(default=3.0, gt=0.0)
    platform_range: tuple[float, float] = (0.1, 1.0)
    gap_range: tuple[float, float] = (0.15, 0.20)


class PerlinParams(BaseModel):
    """Perlin noise segment."""
    length: float = Field(default=4.0, gt=0.0)
    octaves: int = Field(default=6, ge=1)
    persistence: float = Field(default=0.5, gt=0.0)
    max_height: float = Field(default=0.5, gt=0.0)
    vertices_per_meter: int = Field(default=65, ge=2)


class SegmentSpec(BaseModel):
    """One segment of an evaluation track in the layout frame."""
    kind: Literal["platform", "procedural", "stairs", "wavy", "slits", "perlin"]
    x_start: float
    length: float = Field(..., ge=0.0)
    params: dict = Field(default_factory=dict)


class TrackSpec(BaseModel):
    """Evaluation track layout with the sampled parameters of every segment."""
    kind: str
    rng_seed: int
    width: float = 2.0
    base_level: float
    segments: list[SegmentSpec] = Field(default_factory=list)

    @property
    def total_length(self) -> float:
        return float(sum(s.length for s in self.segments))


# ============================================================================
# Pipeline Schemas
# ============================================================================

class PipelineConfig(BaseModel):
    """Dataset generation run settings."""
    n_clips: int = Field(..., ge=1, description="Number of seeds to plan")
    output_dir: Path
    planner_config_path: Optional[Path] = None
    robot_config_path: Optional[Path] = None
    tracking_config_path: Optional[Path] = None
    workers: int = Field(default=1, ge=1)
    seed_base: int = Field(default=0, ge=0)
    distortion: bool = False
    retries: int = Field(default=0, ge=0)
    flat_terrain: bool = False
    name: Optional[str] = None


# ============================================================================
# Catalog Schemas
# ============================================================================

class DatasetCreate(BaseModel):
    """Schema for creating a new dataset catalog record."""
    name: str
    directory: str
    n_requested: int
    seed_base: int
    distortion: bool = False
    status: str = "running"


class DatasetResponse(BaseModel):
    """Schema for dataset response with all fields."""
    id: int
    name: str
    directory: str
    n_requested: int
    seed_base: int
    distortion: bool
    convergence_rate: Optional[float] = None
    status: str
    created_at: datetime

    model_config = ConfigDict(from_attributes=True)


class ClipRecordCreate(BaseModel):
    """Schema for creating a clip catalog record."""
    dataset_id: int
    seed: int
    status: Literal["converged", "failed", "rejected"]
    max_violation: Optional[float] = None
    iterations: Optional[int] = None
    wall_time_s: Optional[float] = None
    clip_path: Optional[str] = None
    message: Optional[str] = None


class ClipRecordResponse(ClipRecordCreate):
    """Schema for clip record response."""
    id: int
    created_at: datetime

    model_config = ConfigDict(from_attributes=True)


# ============================================================================
# Request Schemas
# ============================================================================

class DatasetGenerateRequest(BaseModel):
    """Schema for dataset generation request."""
    n_clips: int = Field(..., ge=1, description="Number of seeds to plan")
    seed_base: int = Field(default=0, ge=0)
    workers: int = Field(default=1, ge=1)
    distortion: bool = False
    retries: int = Field(default=0, ge=0)
    flat_terrain: bool = False
    horizon: Optional[float] = Field(default=None, gt=0.0)
    goal_displacement: Optional[float] = None
    time_budget_s: Optional[float] = Field(default=None, gt=0.0)
    name: Optional[str] = Field(default=None, min_length=1)

    @field_validator("name")
    @classmethod
    def validate_name(cls, v: Optional[str]) -> Optional[str]:
        """Dataset names become directory names."""
        if v is None:
            return v
        v = v.strip()
        if any(c in v for c in '<>:"/\\|?*'):
            raise ValueError("Dataset name contains unsafe characters")
        return v


class EnvgenRequest(BaseModel):
    """Schema for evaluation terrain generation."""
    kind: Literal["stairs", "procedural", "wavy", "mixed", "slits", "perlin"]
    seed: int = Field(default=0, ge=0)


class DistortRequest(BaseModel):
    """Schema for dataset distortion request."""
    rng_seed: int = 0
    n_rectangles: int = Field(default=8, ge=0)


class TrackingStateInput(BaseModel):
    """Simulated or reference state for reward evaluation."""
    body_positions: list[tuple[float, float, float]] = Field(..., min_length=1)
    joint_positions: list[float] = Field(..., min_length=1)
    com_pos: tuple[float, float, float]
    com_linvel: tuple[float, float, float]
    com_angvel: tuple[float, float, float]
    base_quat: tuple[float, float, float, float] = Field(..., description="Unit quaternion (w, x, y, z)")
    ee_pos: list[tuple[float, float, float]] = Field(..., min_length=1)


class TrackingRewardRequest(BaseModel):
    """Schema for tracking reward evaluation."""
    sim: TrackingStateInput
    ref: TrackingStateInput
    finetune: bool = False


# ============================================================================
# Response Schemas
# ============================================================================

class TrackingRewardResponse(BaseModel):
    """Reward terms, truncation error and termination decision."""
    r_com: float
    r_ee: float
    r_linvel: float
    r_angvel: float
    r_quat: float
    total: float
    epsilon: float
    r_trunc: float
    terminate: bool
    finetune_reward: Optional[float] = None


class AuditResponse(BaseModel):
    """Dataset audit summary."""
    dataset_dir: str
    n_clips: int
    n_failed: int
    failures: list[str]
    passed: bool


class StatsResponse(BaseModel):
    """Dataset statistics summary."""
    n_clips: int
    n_contacts: int
    n_velocity_rows: int
    contacts_path: str
    velocity_path: str


class EnvgenResponse(BaseModel):
    """Generated evaluation terrain."""
    kind: str
    seed: int
    heightfield_path: str
    boxes_path: Optional[str] = None
    length: float
    width: float


# ============================================================================
# Pagination and List Response Schemas
# ============================================================================

class PaginatedResponse(BaseModel):
    """Generic paginated response schema."""
    total: int
    items: list

    model_config = ConfigDict(from_attributes=True)
