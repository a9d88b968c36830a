"""
Evaluation terrain builders: stairs, procedural track, wavy steps, slits,
Perlin segments and the mixed track.

Tracks run along +x and are rasterized into a height field with 2 cm cells,
2 m wide and centered on y = 0. Boxes (stairs obstacles, wavy steps) are kept
as an exact box list as well; their top faces are rasterized from the plane
equations of the rotated boxes.
"""

import logging
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from app.core.heightfield import HeightField, generate_terrain, query_surface
from app.core.perlin import perlin_heights
from app.schemas import PerlinParams, SegmentSpec, SlitsParams, StairsParams, TrackSpec, WavyParams
from app.utils.rotations import euler_zyx_matrix

logger = logging.getLogger(__name__)

RASTER_CELL = 0.02
TRACK_WIDTH = 2.0
# Track level above the raster zero for tracks with pits; covers the lowest
# wavy step top (sine -1, vertical offset -5 cm).
BASE_LEVEL = 1.05
PLATFORM_LENGTH = 3.0
START_LENGTH = 1.0
PROCEDURAL_FIELD_LENGTH = 2.0
PROCEDURAL_CELL = 0.125
SEGMENT_KINDS = ("procedural", "stairs", "wavy", "slits", "perlin")


@dataclass(frozen=True)
class Box:
    """Box with center, half extents and ZYX (roll, pitch, yaw) orientation."""

    center: np.ndarray
    half_extents: np.ndarray
    rpy: np.ndarray = dataclass_field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("center", "half_extents", "rpy"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @property
    def rotation(self) -> np.ndarray:
        return euler_zyx_matrix(self.rpy)

    @property
    def top_center(self) -> np.ndarray:
        return self.center + self.rotation @ np.array([0.0, 0.0, self.half_extents[2]])


@dataclass(frozen=True)
class Track:
    """Rasterized evaluation track."""

    spec: TrackSpec
    field: Optional[HeightField]
    boxes: tuple[Box, ...] = ()


def wavy_elevation(x) -> np.ndarray:
    """Elevation added to wavy steps at longitudinal position x (m)."""
    return np.sin((np.asarray(x, dtype=float) - 6.0) / 3.0)


# ============================================================================
# Rasterization
# ============================================================================

class _TrackCanvas:
    """Ordered drawing operations rendered once the track length is known."""

    def __init__(self, width: float = TRACK_WIDTH):
        self.width = width
        self.ops: list[tuple] = []
        self.boxes: list[Box] = []

    def profile(self, x0: float, x1: float, fn: Callable[[np.ndarray], np.ndarray]) -> None:
        self.ops.append(("profile", x0, x1, fn))

    def flat(self, x0: float, x1: float, height: float) -> None:
        self.profile(x0, x1, lambda x, h=height: np.full_like(x, h))

    def patch(self, field: HeightField, x0: float, level: float) -> None:
        self.ops.append(("patch", x0, field, level))

    def render(self, length: float) -> HeightField:
        rows = int(round(length / RASTER_CELL)) + 1
        cols = int(round(self.width / RASTER_CELL)) + 1
        origin = np.array([0.0, -0.5 * (cols - 1) * RASTER_CELL])
        xs = RASTER_CELL * np.arange(rows)
        ys = origin[1] + RASTER_CELL * np.arange(cols)
        heights = np.zeros((rows, cols))
        for op in self.ops:
            if op[0] == "profile":
                _, x0, x1, fn = op
                mask = (xs >= x0 - 1e-9) & ((xs < x1 - 1e-9) | (x1 >= length - 1e-9))
                heights[mask, :] = np.asarray(fn(xs[mask]))[:, None]
            else:
                _, x0, field, level = op
                x_min, x_max, _, _ = field.bounds
                mask = (xs >= x0 - 1e-9) & (xs <= x0 + (x_max - x_min) + 1e-9)
                px, py = np.meshgrid(xs[mask] - x0 + x_min, ys, indexing="ij")
                points = np.stack([px.ravel(), py.ravel()], axis=1)
                result = query_surface(field, points, clamp=True)
                values = np.where(result.clamped_mask, 0.0, result.heights) + level
                heights[mask, :] = values.reshape(px.shape)
        raster = HeightField(origin=origin, cell_size=RASTER_CELL, heights=heights)
        return rasterize_boxes(self.boxes, raster)


def rasterize_boxes(boxes: Sequence[Box], field: HeightField) -> HeightField:
    """
    Raise a height field to the top faces of boxes.

    Each vertex under a (possibly tilted) top face takes the maximum of its
    height and the face plane at that point.

    Args:
        boxes: Boxes to draw
        field: Field to draw into

    Returns:
        HeightField: New field with the boxes drawn
    """
    heights = np.array(field.heights)
    c = field.cell_size
    for box in boxes:
        rotation = box.rotation
        top = box.top_center
        normal = rotation[:, 2]
        hx, hy = box.half_extents[:2]
        corners = np.array([top + rotation @ np.array([sx * hx, sy * hy, 0.0]) for sx in (-1, 1) for sy in (-1, 1)])
        i0 = max(int(np.floor((corners[:, 0].min() - field.origin[0]) / c)), 0)
        i1 = min(int(np.ceil((corners[:, 0].max() - field.origin[0]) / c)), field.rows - 1)
        j0 = max(int(np.floor((corners[:, 1].min() - field.origin[1]) / c)), 0)
        j1 = min(int(np.ceil((corners[:, 1].max() - field.origin[1]) / c)), field.cols - 1)
        if i1 < i0 or j1 < j0:
            continue
        px, py = np.meshgrid(
            field.origin[0] + c * np.arange(i0, i1 + 1),
            field.origin[1] + c * np.arange(j0, j1 + 1),
            indexing="ij",
        )
        pz = top[2] - (normal[0] * (px - top[0]) + normal[1] * (py - top[1])) / normal[2]
        offsets = np.stack([px - top[0], py - top[1], pz - top[2]], axis=-1)
        local = offsets @ rotation
        inside = (np.abs(local[..., 0]) <= hx + 1e-9) & (np.abs(local[..., 1]) <= hy + 1e-9)
        block = heights[i0:i1 + 1, j0:j1 + 1]
        heights[i0:i1 + 1, j0:j1 + 1] = np.where(inside, np.maximum(block, pz), block)
    return field.with_heights(np.maximum(heights, 0.0))


def export_boxes_text(boxes: Sequence[Box], path: Path) -> Path:
    """Write boxes as a whitespace table: center, half extents, roll pitch yaw."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# cx cy cz hx hy hz roll pitch yaw"]
    for box in boxes:
        values = np.concatenate([box.center, box.half_extents, box.rpy])
        lines.append(" ".join(f"{v:.6f}" for v in values))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# ============================================================================
# Segments
# ============================================================================

def offset_overlapping(x: float, y: float, placed: Sequence[tuple[float, float]], size: float, offset: float) -> float:
    """
    Shift a square box along x past each earlier box it overlaps.

    Single pass: the box moves by offset once per overlapping earlier box.
    """
    for px, py in placed:
        if abs(x - px) < size and abs(y - py) < size:
            x += offset
    return x


def _stairs_segment(
    rng: np.random.Generator,
    params: StairsParams,
    canvas: _TrackCanvas,
    x0: float,
    level: float,
) -> tuple[SegmentSpec, float]:
    spread = float(rng.uniform(*params.spread_range))
    half_width = 0.5 * canvas.width
    half_box = 0.5 * params.box_size
    x = x0
    top = level
    record = {"spread": spread, "step_heights": [], "step_lengths": [], "box_heights": [], "box_shifts": []}
    for _ in range(params.n_steps):
        rise = float(rng.uniform(*params.step_height_range))
        run = float(rng.uniform(*params.step_length_range))
        sign = 1.0 if params.ascent == "monotone" else float(rng.choice([-1.0, 1.0]))
        top = max(top + sign * rise, 0.0)
        canvas.flat(x, x + run, top)
        record["step_heights"].append(rise)
        record["step_lengths"].append(run)

        anchor_x = rng.uniform(x, x + run)
        anchor_y = rng.uniform(-half_width + half_box, half_width - half_box)
        placed: list[tuple[float, float]] = []
        for _ in range(params.boxes_per_step):
            height = float(rng.uniform(*params.step_height_range))
            bx = anchor_x + rng.uniform(-0.5 * spread, 0.5 * spread)
            by = float(np.clip(anchor_y + rng.uniform(-0.5 * spread, 0.5 * spread),
                               -half_width + half_box, half_width - half_box))
            shifted = offset_overlapping(bx, by, placed, params.box_size, params.overlap_offset)
            record["box_heights"].append(height)
            record["box_shifts"].append(shifted - bx)
            placed.append((shifted, by))
            canvas.boxes.append(Box(
                center=[shifted, by, top + 0.5 * height],
                half_extents=[half_box, half_box, 0.5 * height],
            ))
        x += run
    return SegmentSpec(kind="stairs", x_start=x0, length=x - x0, params=record), top


def _procedural_segment(
    rng: np.random.Generator,
    canvas: _TrackCanvas,
    x0: float,
    level: float,
    length: float,
) -> SegmentSpec:
    seed = int(rng.integers(0, 2**31 - 1))
    cols = int(round(canvas.width / PROCEDURAL_CELL))
    cell = canvas.width / (cols - 1)
    # Largest even vertex count whose extent fits the segment.
    rows = 2 * int((length / cell + 1.0 + 1e-9) // 2)
    footprint = ((rows - 1) * cell, canvas.width)
    terrain = generate_terrain(seed, grid=(rows, cols), footprint=footprint)
    canvas.flat(x0, x0 + length, level)
    canvas.patch(terrain, x0, level)
    return SegmentSpec(
        kind="procedural",
        x_start=x0,
        length=length,
        params={"terrain_seed": seed, "max_height": float(terrain.heights.max())},
    )


def _wavy_segment(
    rng: np.random.Generator,
    params: WavyParams,
    canvas: _TrackCanvas,
    x0: float,
    level: float,
) -> SegmentSpec:
    end = x0 + params.length

    def elevation(x):
        return wavy_elevation(x) if params.sine else np.zeros_like(np.asarray(x, dtype=float))

    canvas.profile(x0, end, lambda x: np.maximum(level + elevation(x) - params.step_height, 0.0))
    keys = ("lateral_gaps", "dx", "dz", "gaps", "lengths", "widths", "rolls", "pitches")
    record: dict[str, list[float]] = {key: [] for key in keys}

    x = x0 + float(rng.uniform(*params.gap_range))
    record["gaps"].append(x - x0)
    while True:
        run = float(rng.uniform(*params.step_length_range))
        width = float(rng.uniform(*params.step_width_range))
        separation = float(rng.uniform(*params.lateral_gap_range))
        if x + run > end:
            break
        record["lengths"].append(run)
        record["widths"].append(width)
        record["lateral_gaps"].append(separation)
        for side in (-1.0, 1.0):
            dx = float(rng.uniform(*params.offset_range))
            dz = float(rng.uniform(*params.offset_range))
            roll = float(rng.uniform(*params.rotation_range))
            pitch = float(rng.uniform(*params.rotation_range))
            for key, value in (("dx", dx), ("dz", dz), ("rolls", roll), ("pitches", pitch)):
                record[key].append(value)
            cx = x + 0.5 * run + dx
            top = np.array([cx, side * 0.5 * (separation + width), level + dz + float(elevation(cx))])
            rotation = euler_zyx_matrix(np.array([roll, pitch, 0.0]))
            center = top - rotation @ np.array([0.0, 0.0, 0.5 * params.step_height])
            canvas.boxes.append(Box(
                center=center,
                half_extents=[0.5 * run, 0.5 * width, 0.5 * params.step_height],
                rpy=[roll, pitch, 0.0],
            ))
        gap = float(rng.uniform(*params.gap_range))
        record["gaps"].append(gap)
        x += run + gap
    return SegmentSpec(kind="wavy", x_start=x0, length=params.length, params=record)


def _slits_segment(
    rng: np.random.Generator,
    params: SlitsParams,
    canvas: _TrackCanvas,
    x0: float,
    level: float,
    pit_depth: float,
) -> SegmentSpec:
    end = x0 + params.length
    floor = max(level - pit_depth, 0.0)
    record: dict[str, list[float]] = {"platforms": [], "gaps": []}
    x = x0
    while True:
        platform = float(rng.uniform(*params.platform_range))
        record["platforms"].append(platform)
        if x + platform >= end:
            canvas.flat(x, end, level)
            break
        canvas.flat(x, x + platform, level)
        x += platform
        gap = float(rng.uniform(*params.gap_range))
        if x + gap + params.platform_range[0] > end:
            canvas.flat(x, end, level)
            break
        record["gaps"].append(gap)
        canvas.flat(x, x + gap, floor)
        x += gap
    return SegmentSpec(kind="slits", x_start=x0, length=params.length, params=record)


def build_perlin_segment(rng: np.random.Generator, params: Optional[PerlinParams] = None, width: float = TRACK_WIDTH) -> HeightField:
    """
    Perlin noise height field of one segment.

    Args:
        rng: Random generator
        params: Length, octaves, persistence, maximum height and vertex density
        width: Lateral extent (m)

    Returns:
        HeightField: Vertices every 1/vertices_per_meter m, heights in [0, max_height]
    """
    params = params or PerlinParams()
    density = params.vertices_per_meter
    rows = int(round(params.length * density)) + 1
    cols = int(round(width * density)) + 1
    cell = 1.0 / density
    heights = perlin_heights(
        (rows, cols),
        params.max_height,
        rng,
        octaves=params.octaves,
        persistence=params.persistence,
        base_cells=(params.length, width),
    )
    return HeightField(origin=np.array([0.0, -0.5 * (cols - 1) * cell]), cell_size=cell, heights=heights)


def _perlin_segment(
    rng: np.random.Generator,
    params: PerlinParams,
    canvas: _TrackCanvas,
    x0: float,
    level: float,
) -> SegmentSpec:
    segment = build_perlin_segment(rng, params, canvas.width)
    canvas.flat(x0, x0 + params.length, level)
    canvas.patch(segment, x0, level)
    return SegmentSpec(
        kind="perlin",
        x_start=x0,
        length=params.length,
        params={"max_height": float(segment.heights.max()), "spacing": segment.cell_size},
    )


def _platform(canvas: _TrackCanvas, x0: float, length: float, level: float) -> SegmentSpec:
    canvas.flat(x0, x0 + length, level)
    return SegmentSpec(kind="platform", x_start=x0, length=length, params={"level": level})


def _finish(
    kind: str,
    seed: int,
    level: float,
    canvas: _TrackCanvas,
    segments: list[SegmentSpec],
    render: bool = True,
) -> Track:
    spec = TrackSpec(kind=kind, rng_seed=seed, width=canvas.width, base_level=level, segments=segments)
    field = canvas.render(spec.total_length) if render else None
    logger.info(
        f"Built {kind} track seed={seed}: {len(segments)} segments, {spec.total_length:.2f} m, "
        f"{len(canvas.boxes)} boxes"
    )
    return Track(spec=spec, field=field, boxes=tuple(canvas.boxes))


# ============================================================================
# Tracks
# ============================================================================

def build_stairs(seed: int, params: Optional[StairsParams] = None, level: float = 0.0, render: bool = True) -> Track:
    """
    Stairs track: start platform, steps with three boxes each, end platform.

    Step rises and box heights follow params.step_height_range, step lengths
    params.step_length_range; boxes of one step scatter within a spread drawn
    once per track and overlapping boxes shift along x by params.overlap_offset.

    Example:
        >>> track = build_stairs(3)
        >>> len(track.boxes)
        60
    """
    params = params or StairsParams()
    rng = np.random.default_rng(seed)
    canvas = _TrackCanvas()
    segments = [_platform(canvas, 0.0, START_LENGTH, level)]
    stairs, top = _stairs_segment(rng, params, canvas, START_LENGTH, level)
    segments.append(stairs)
    segments.append(_platform(canvas, stairs.x_start + stairs.length, START_LENGTH, top))
    return _finish("stairs", seed, level, canvas, segments, render=render)


def build_procedural_track(seed: int, n_fields: int = 15, level: float = 0.0) -> Track:
    """Procedural height fields joined by 3 m flat platforms."""
    rng = np.random.default_rng(seed)
    canvas = _TrackCanvas()
    segments = [_platform(canvas, 0.0, PLATFORM_LENGTH, level)]
    x = PLATFORM_LENGTH
    for _ in range(n_fields):
        segments.append(_procedural_segment(rng, canvas, x, level, PROCEDURAL_FIELD_LENGTH))
        x += PROCEDURAL_FIELD_LENGTH
        segments.append(_platform(canvas, x, PLATFORM_LENGTH, level))
        x += PLATFORM_LENGTH
    return _finish("procedural", seed, level, canvas, segments)


def build_wavy_steps(
    seed: int,
    params: Optional[WavyParams] = None,
    level: float = BASE_LEVEL,
    render: bool = True,
) -> Track:
    """
    Wavy steps track: pairs of tilted stepping boxes whose elevation follows sin((x - 6) / 3).

    Gaps between steps drop one step height below the local track level.
    """
    params = params or WavyParams()
    rng = np.random.default_rng(seed)
    canvas = _TrackCanvas()

    def start_profile(x):
        return level + (wavy_elevation(x) if params.sine else np.zeros_like(x))

    canvas.profile(0.0, START_LENGTH, start_profile)
    segments = [SegmentSpec(kind="platform", x_start=0.0, length=START_LENGTH, params={"level": level})]
    wavy = _wavy_segment(rng, params, canvas, START_LENGTH, level)
    segments.append(wavy)
    end = wavy.x_start + wavy.length
    canvas.profile(end, end + START_LENGTH, start_profile)
    segments.append(SegmentSpec(kind="platform", x_start=end, length=START_LENGTH, params={"level": level}))
    return _finish("wavy", seed, level, canvas, segments, render=render)


def build_slits_segment(seed: int, params: Optional[SlitsParams] = None, level: float = BASE_LEVEL) -> Track:
    """Single slits segment: flat platforms separated by pits."""
    params = params or SlitsParams()
    rng = np.random.default_rng(seed)
    canvas = _TrackCanvas()
    segment = _slits_segment(rng, params, canvas, 0.0, level, WavyParams().step_height)
    return _finish("slits", seed, level, canvas, [segment])


def build_perlin_track(seed: int, params: Optional[PerlinParams] = None, level: float = 0.0) -> Track:
    """Single Perlin segment rasterized as a track."""
    params = params or PerlinParams()
    rng = np.random.default_rng(seed)
    canvas = _TrackCanvas()
    segment = _perlin_segment(rng, params, canvas, 0.0, level)
    return _finish("perlin", seed, level, canvas, [segment])


def build_mixed(
    seed: int,
    n_segments: int = 15,
    kinds: Optional[Sequence[str]] = None,
    level: float = BASE_LEVEL,
    render: bool = True,
) -> Track:
    """
    Mixed track of independently drawn segments.

    Kinds: procedural (4 m), stairs (5 steps), wavy steps without the sine
    term (4 m), slits (3 m) and Perlin noise (4 m). Stairs carry the track
    level forward to the following segments.

    Args:
        seed: Track seed
        n_segments: Number of segments when kinds is not given
        kinds: Forced segment sequence
        level: Initial track level
        render: Rasterize the track; without it only the TrackSpec is drawn

    Returns:
        Track: Track with its TrackSpec and raster (None when render is False)
    """
    rng = np.random.default_rng(seed)
    if kinds is None:
        kinds = [str(k) for k in rng.choice(SEGMENT_KINDS, size=n_segments)]
    unknown = [k for k in kinds if k not in SEGMENT_KINDS]
    if unknown:
        raise ValueError(f"Unknown segment kinds {unknown}; expected {SEGMENT_KINDS}")

    wavy = WavyParams(length=4.0, sine=False)
    canvas = _TrackCanvas()
    segments: list[SegmentSpec] = []
    x = 0.0
    current = level
    for kind in kinds:
        if kind == "procedural":
            segment = _procedural_segment(rng, canvas, x, current, 4.0)
        elif kind == "stairs":
            segment, current = _stairs_segment(rng, StairsParams(n_steps=5), canvas, x, current)
        elif kind == "wavy":
            segment = _wavy_segment(rng, wavy, canvas, x, current)
        elif kind == "slits":
            segment = _slits_segment(rng, SlitsParams(), canvas, x, current, wavy.step_height)
        else:
            segment = _perlin_segment(rng, PerlinParams(), canvas, x, current)
        segments.append(segment)
        x += segment.length
    return _finish("mixed", seed, level, canvas, segments, render=render)


BUILDERS: dict[str, Callable[[int], Track]] = {
    "stairs": build_stairs,
    "procedural": build_procedural_track,
    "wavy": build_wavy_steps,
    "mixed": build_mixed,
    "slits": build_slits_segment,
    "perlin": build_perlin_track,
}


# ============================================================================
# Audit
# ============================================================================

def _check_range(values, bounds: tuple[float, float], label: str, errors: list[str], tol: float = 1e-12) -> None:
    low, high = bounds
    for value in np.atleast_1d(np.asarray(values, dtype=float)):
        if value < low - tol or value > high + tol:
            errors.append(f"{label} {value:.6f} outside [{low}, {high}]")


def audit_track(
    spec: TrackSpec,
    stairs: Optional[StairsParams] = None,
    wavy: Optional[WavyParams] = None,
    slits: Optional[SlitsParams] = None,
    perlin: Optional[PerlinParams] = None,
) -> list[str]:
    """
    Check recorded segment parameters against their sampling ranges and the layout for gaps.

    Returns:
        list[str]: Violations; empty when the track is valid
    """
    stairs = stairs or StairsParams()
    wavy = wavy or WavyParams()
    slits = slits or SlitsParams()
    perlin = perlin or PerlinParams()
    errors: list[str] = []

    for previous, segment in zip(spec.segments, spec.segments[1:]):
        if abs(previous.x_start + previous.length - segment.x_start) > 1e-9:
            errors.append(f"Gap between segments at x={previous.x_start + previous.length:.4f}")

    for index, segment in enumerate(spec.segments):
        label = f"segment {index} ({segment.kind})"
        p = segment.params
        if segment.kind == "stairs":
            _check_range(p["step_heights"], stairs.step_height_range, f"{label} step height", errors)
            _check_range(p["step_lengths"], stairs.step_length_range, f"{label} step length", errors)
            _check_range(p["spread"], stairs.spread_range, f"{label} spread", errors)
            _check_range(p["box_heights"], stairs.step_height_range, f"{label} box height", errors)
        elif segment.kind == "wavy":
            _check_range(p["lateral_gaps"], wavy.lateral_gap_range, f"{label} lateral gap", errors)
            _check_range(p["dx"], wavy.offset_range, f"{label} longitudinal offset", errors)
            _check_range(p["dz"], wavy.offset_range, f"{label} vertical offset", errors)
            _check_range(p["gaps"], wavy.gap_range, f"{label} gap", errors)
            _check_range(p["lengths"], wavy.step_length_range, f"{label} step length", errors)
            _check_range(p["widths"], wavy.step_width_range, f"{label} step width", errors)
            _check_range(p["rolls"], wavy.rotation_range, f"{label} roll", errors)
            _check_range(p["pitches"], wavy.rotation_range, f"{label} pitch", errors)
        elif segment.kind == "slits":
            _check_range(p["platforms"], slits.platform_range, f"{label} platform", errors)
            _check_range(p["gaps"], slits.gap_range, f"{label} gap", errors)
        elif segment.kind == "perlin":
            _check_range(p["max_height"], (0.0, perlin.max_height), f"{label} max height", errors, tol=1e-9)
            if abs(p["spacing"] - 1.0 / perlin.vertices_per_meter) > 1e-12:
                errors.append(f"{label} vertex spacing {p['spacing']:.6f} differs from 1/{perlin.vertices_per_meter}")
        elif segment.kind == "procedural":
            _check_range(p["max_height"], (0.0, 0.30), f"{label} max height", errors, tol=1e-9)

    if errors:
        logger.warning(f"Track {spec.kind} seed={spec.rng_seed} failed audit with {len(errors)} violations")
    return errors
