"""
Height field terrain representation.
Triangulated regular grid with procedural generation, distortion augmentation and file formats.

Vertex (i, j) sits at origin + (i * cell_size, j * cell_size): rows run along x
(the walking direction), columns along y. Every cell is split into two triangles
along its lower-left to upper-right diagonal.
"""

import json
import logging
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from app.exceptions import TerrainQueryError
from app.schemas import DistortionSpec

logger = logging.getLogger(__name__)

# Queries this close outside the footprint are treated as on the edge.
_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class HeightField:
    """Immutable triangulated elevation grid."""

    origin: np.ndarray
    cell_size: float
    heights: np.ndarray

    def __post_init__(self):
        origin = np.array(self.origin, dtype=float).reshape(2)
        heights = np.array(self.heights, dtype=float)
        if heights.ndim != 2 or heights.shape[0] < 2 or heights.shape[1] < 2:
            raise ValueError(f"Height grid must be 2-D with at least 2x2 vertices, got shape {heights.shape}")
        if self.cell_size <= 0.0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if not np.all(np.isfinite(heights)):
            raise ValueError("Height grid contains non-finite values")
        if np.any(heights < 0.0):
            raise ValueError("Height grid contains negative elevations")
        origin.setflags(write=False)
        heights.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "cell_size", float(self.cell_size))

    @property
    def rows(self) -> int:
        return self.heights.shape[0]

    @property
    def cols(self) -> int:
        return self.heights.shape[1]

    @property
    def extent(self) -> tuple[float, float]:
        """Size of the triangulated surface along x and y (m)."""
        return ((self.rows - 1) * self.cell_size, (self.cols - 1) * self.cell_size)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(x_min, x_max, y_min, y_max) of the triangulated surface."""
        ex, ey = self.extent
        return (self.origin[0], self.origin[0] + ex, self.origin[1], self.origin[1] + ey)

    def vertex_position(self, i: int, j: int) -> np.ndarray:
        """Planar position of vertex (i, j)."""
        return self.origin + self.cell_size * np.array([i, j], dtype=float)

    def contains(self, point: Sequence[float]) -> bool:
        x_min, x_max, y_min, y_max = self.bounds
        return (x_min - _EDGE_TOL <= point[0] <= x_max + _EDGE_TOL
                and y_min - _EDGE_TOL <= point[1] <= y_max + _EDGE_TOL)

    def with_heights(self, heights: np.ndarray) -> "HeightField":
        """Copy of this field with replaced vertex heights."""
        return HeightField(origin=self.origin, cell_size=self.cell_size, heights=heights)


@dataclass(frozen=True)
class SurfaceQuery:
    """Vectorized result of a surface query."""

    heights: np.ndarray
    slopes: np.ndarray
    normals: np.ndarray
    n_clamped: int = 0
    clamped_mask: np.ndarray = dataclass_field(default_factory=lambda: np.zeros(0, dtype=bool))


# ============================================================================
# Queries
# ============================================================================

def query_surface(field: HeightField, points: np.ndarray, clamp: bool = False) -> SurfaceQuery:
    """
    Evaluate elevation, slope and unit normal at planar points.

    Args:
        field: Height field to query
        points: Array of shape (N, 2) with planar positions
        clamp: Project out-of-footprint points onto the nearest edge instead of failing

    Returns:
        SurfaceQuery: heights (N,), slopes (N, 2) as (dh/dx, dh/dy), normals (N, 3)

    Raises:
        TerrainQueryError: If a point lies outside the footprint and clamp is False
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    u = (pts[:, 0] - field.origin[0]) / field.cell_size
    v = (pts[:, 1] - field.origin[1]) / field.cell_size
    u_max = field.rows - 1
    v_max = field.cols - 1
    tol = _EDGE_TOL / field.cell_size
    outside = (u < -tol) | (u > u_max + tol) | (v < -tol) | (v > v_max + tol)
    if np.any(outside) and not clamp:
        bad = pts[np.argmax(outside)]
        raise TerrainQueryError(
            f"Point ({bad[0]:.4f}, {bad[1]:.4f}) is outside the height field bounds {field.bounds}"
        )
    u = np.clip(u, 0.0, u_max)
    v = np.clip(v, 0.0, v_max)

    i = np.minimum(np.floor(u).astype(int), field.rows - 2)
    j = np.minimum(np.floor(v).astype(int), field.cols - 2)
    fu = u - i
    fv = v - j

    h = field.heights
    h00 = h[i, j]
    h10 = h[i + 1, j]
    h01 = h[i, j + 1]
    h11 = h[i + 1, j + 1]

    lower = fu >= fv
    heights = np.where(
        lower,
        (1.0 - fu) * h00 + (fu - fv) * h10 + fv * h11,
        (1.0 - fv) * h00 + (fv - fu) * h01 + fu * h11,
    )
    c = field.cell_size
    hx = np.where(lower, (h10 - h00) / c, (h11 - h01) / c)
    hy = np.where(lower, (h11 - h10) / c, (h01 - h00) / c)
    normals = np.stack([-hx, -hy, np.ones_like(hx)], axis=1)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)

    return SurfaceQuery(
        heights=heights,
        slopes=np.stack([hx, hy], axis=1),
        normals=normals,
        n_clamped=int(np.count_nonzero(outside)),
        clamped_mask=outside,
    )


def height_at(field: HeightField, point: Sequence[float]) -> tuple[float, np.ndarray]:
    """
    Elevation and surface normal at a planar point.

    Args:
        field: Height field to query
        point: Planar position (x, y)

    Returns:
        tuple: (elevation, unit normal with positive vertical component)

    Raises:
        TerrainQueryError: If the point lies outside the footprint

    Example:
        >>> height_at(flat_field, (0.5, 0.5))
        (0.1, array([0., 0., 1.]))
    """
    result = query_surface(field, np.asarray(point, dtype=float).reshape(1, 2), clamp=False)
    return float(result.heights[0]), result.normals[0]


def sample_heights(field: HeightField, points: np.ndarray, clamp: bool = True) -> np.ndarray:
    """Elevations at an array of planar points; off-footprint points take the nearest edge height when clamping."""
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, 2)
    result = query_surface(field, flat, clamp=clamp)
    return result.heights.reshape(pts.shape[:-1])


# ============================================================================
# Procedural Generation
# ============================================================================

def generate_terrain(
    rng_seed: int,
    grid: tuple[int, int] = (16, 16),
    footprint: tuple[float, float] = (2.0, 2.0),
    origin: Optional[tuple[float, float]] = None,
    max_height: float = 0.30,
    coefficient_range: tuple[float, float] = (0.0, 0.2),
    n_bumps: int = 3,
) -> HeightField:
    """
    Generate a procedural tile terrain scaled by radial bump envelopes.

    An (rows/2 x cols/2) coefficient matrix is expanded into 2x2 tiles, cyclically
    shifted along the columns, multiplied pointwise by the maximum of three
    exponential radial basis functions and rescaled to the requested maximum height.

    Args:
        rng_seed: Seed of the generator; the output is a pure function of it
        grid: Vertex counts (rows along x, cols along y), both even
        footprint: Extent spanned by the vertices (m); cell_size = footprint / (grid - 1)
        origin: Position of vertex (0, 0); defaults to x = 0 with the field centered on y = 0
        max_height: Maximum height after rescaling (m)
        coefficient_range: Interval of the uniform tile coefficients
        n_bumps: Number of radial basis functions in the envelope

    Returns:
        HeightField: Generated terrain

    Raises:
        ValueError: If grid dimensions are odd or footprint cells are not square
    """
    rows, cols = grid
    if rows % 2 or cols % 2 or rows < 2 or cols < 2:
        raise ValueError(f"Grid dimensions must be even and >= 2, got {grid}")
    if footprint[0] <= 0.0 or footprint[1] <= 0.0:
        raise ValueError(f"Footprint must be positive, got {footprint}")
    cell_size = footprint[0] / (rows - 1)
    if abs(footprint[1] / (cols - 1) - cell_size) > 1e-12:
        raise ValueError(f"Footprint {footprint} and grid {grid} do not give square cells")
    if origin is None:
        origin = (0.0, -0.5 * (cols - 1) * cell_size)

    rng = np.random.default_rng(rng_seed)
    coefficients = rng.uniform(coefficient_range[0], coefficient_range[1], size=(rows // 2, cols // 2))
    tiles = np.kron(coefficients, np.ones((2, 2)))
    shift = int(rng.integers(0, cols))
    tiles = np.roll(tiles, shift, axis=1)

    xs = origin[0] + cell_size * np.arange(rows)
    ys = origin[1] + cell_size * np.arange(cols)
    centers = np.column_stack([
        rng.uniform(xs[0], xs[-1], size=n_bumps),
        rng.uniform(ys[0], ys[-1], size=n_bumps),
    ])
    eta = rng.uniform(0.0, 1.0, size=n_bumps)
    bandwidths = np.exp(-2.0 * eta)

    px, py = np.meshgrid(xs, ys, indexing="ij")
    envelope = np.zeros_like(px)
    for center, h in zip(centers, bandwidths):
        distance = np.hypot(px - center[0], py - center[1])
        envelope = np.maximum(envelope, np.exp(-distance / h))

    heights = tiles * envelope
    peak = heights.max()
    if peak > 0.0:
        heights = heights * (max_height / peak)
    logger.debug(f"Generated terrain seed={rng_seed} shift={shift} peak_before_rescale={peak:.4f}")

    return HeightField(origin=np.array(origin, dtype=float), cell_size=cell_size, heights=heights)


def flat_terrain(
    height: float = 0.0,
    grid: tuple[int, int] = (16, 16),
    footprint: tuple[float, float] = (2.0, 2.0),
    origin: Optional[tuple[float, float]] = None,
) -> HeightField:
    """Flat field with the same layout as generate_terrain."""
    rows, cols = grid
    cell_size = footprint[0] / (rows - 1)
    if origin is None:
        origin = (0.0, -0.5 * (cols - 1) * cell_size)
    return HeightField(origin=np.array(origin, dtype=float), cell_size=cell_size,
                       heights=np.full((rows, cols), float(height)))


def embed_terrain(field: HeightField, rows: int, cols: int) -> HeightField:
    """
    Center a field inside a larger zero-height canvas.

    The original vertices keep their world positions; the canvas origin moves outward.

    Args:
        field: Field to embed
        rows: Canvas rows (>= field.rows)
        cols: Canvas cols (>= field.cols)

    Returns:
        HeightField: Embedded field
    """
    if rows < field.rows or cols < field.cols:
        raise ValueError(f"Canvas {rows}x{cols} is smaller than the field {field.rows}x{field.cols}")
    oi, oj = embed_offset(field, rows, cols)
    canvas = np.zeros((rows, cols))
    canvas[oi:oi + field.rows, oj:oj + field.cols] = field.heights
    origin = field.origin - field.cell_size * np.array([oi, oj], dtype=float)
    return HeightField(origin=origin, cell_size=field.cell_size, heights=canvas)


def embed_offset(field: HeightField, rows: int, cols: int) -> tuple[int, int]:
    """Index of the original (0, 0) vertex inside a centered canvas."""
    return (rows - field.rows) // 2, (cols - field.cols) // 2


# ============================================================================
# Distortion
# ============================================================================

def contact_patch_cells(field: HeightField, contact: Sequence[float], side: float) -> tuple[slice, slice]:
    """
    Vertex slices covering every cell whose closed extent meets the square around a contact.

    Args:
        field: Height field
        contact: Planar contact position
        side: Side length of the square centered on the contact (m)

    Returns:
        tuple[slice, slice]: Row and column vertex slices

    Raises:
        TerrainQueryError: If the contact is outside the footprint
    """
    if not field.contains(contact):
        raise TerrainQueryError(f"Contact ({contact[0]:.4f}, {contact[1]:.4f}) is outside the height field")
    half = 0.5 * side
    c = field.cell_size
    slices = []
    for axis, n in ((0, field.rows), (1, field.cols)):
        low = (contact[axis] - half - field.origin[axis]) / c
        high = (contact[axis] + half - field.origin[axis]) / c
        first_cell = int(np.clip(np.ceil(low - 1.0), 0, n - 2))
        last_cell = int(np.clip(np.floor(high), 0, n - 2))
        slices.append(slice(first_cell, last_cell + 2))
    return slices[0], slices[1]


def _intersects(rect: tuple[int, int, int, int], region: tuple[int, int, int, int]) -> bool:
    i0, i1, j0, j1 = rect
    r0, r1, c0, c1 = region
    return i0 < r1 and i1 > r0 and j0 < c1 and j1 > c0


def is_inner_rectangle(rect: tuple[int, int, int, int], field: HeightField, spec: DistortionSpec) -> bool:
    """
    True when a canvas rectangle (row0, row1, col0, col1) touches the embedded block or the rows ahead of it.

    The region ahead spans every canvas row past the block across the full canvas width.
    """
    oi, oj = embed_offset(field, spec.embed_rows, spec.embed_cols)
    central = (oi, oi + field.rows, oj, oj + field.cols)
    front = (oi + field.rows, spec.embed_rows, 0, spec.embed_cols)
    return _intersects(rect, central) or _intersects(rect, front)


def distort_terrain(
    field: HeightField,
    contacts: Iterable[Sequence[float]],
    spec: DistortionSpec,
) -> HeightField:
    """
    Embed a field in a larger canvas and rescale random rectangles while preserving contact patches.

    Rectangles touching the central block or the flat region ahead of it (see
    is_inner_rectangle) are scaled by a factor from the inner range, other
    rectangles by a factor from the outer range. Each rectangle scales the
    pre-distortion heights, so a vertex covered twice takes the later factor.
    Finally every cell meeting a contact square is restored.

    Args:
        field: Planning terrain (typically 16x16)
        contacts: Planar contact positions in world coordinates
        spec: Distortion parameters

    Returns:
        HeightField: Distorted embedded field
    """
    embedded = embed_terrain(field, spec.embed_rows, spec.embed_cols)
    rng = np.random.default_rng(spec.rng_seed)
    original = embedded.heights
    distorted = original.copy()
    for _ in range(spec.n_rectangles):
        ri = np.sort(rng.integers(0, spec.embed_rows, size=2, endpoint=True))
        rj = np.sort(rng.integers(0, spec.embed_cols, size=2, endpoint=True))
        rect = (int(ri[0]), int(ri[1]), int(rj[0]), int(rj[1]))
        inner = is_inner_rectangle(rect, field, spec)
        low, high = spec.inner_scale_range if inner else spec.outer_scale_range
        factor = rng.uniform(low, high)
        if rect[0] == rect[1] or rect[2] == rect[3]:
            continue
        distorted[rect[0]:rect[1], rect[2]:rect[3]] = original[rect[0]:rect[1], rect[2]:rect[3]] * factor

    n_contacts = 0
    for contact in contacts:
        rows, cols = contact_patch_cells(embedded, contact, spec.contact_patch_side)
        distorted[rows, cols] = original[rows, cols]
        n_contacts += 1

    logger.debug(f"Distorted terrain seed={spec.rng_seed} rectangles={spec.n_rectangles} contacts={n_contacts}")
    return embedded.with_heights(distorted)


# ============================================================================
# Serialization
# ============================================================================

def save_heightfield_text(field: HeightField, path: Path) -> Path:
    """
    Write a field as a text header followed by row-major decimal heights.

    Header line: rows cols cell_size origin_x origin_y. Values use 17 significant
    digits so loading reproduces the doubles exactly.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{field.rows} {field.cols} {field.cell_size!r} {float(field.origin[0])!r} {float(field.origin[1])!r}"]
    for row in field.heights:
        lines.append(" ".join(f"{value:.17g}" for value in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_heightfield_text(path: Path) -> HeightField:
    """Read a field written by save_heightfield_text."""
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    header = lines[0].split()
    if len(header) != 5:
        raise ValueError(f"Malformed height field header in {path}")
    rows, cols = int(header[0]), int(header[1])
    cell_size, ox, oy = float(header[2]), float(header[3]), float(header[4])
    body = [line for line in lines[1:] if line.strip()]
    if len(body) != rows:
        raise ValueError(f"Height field {path} declares {rows} rows but contains {len(body)}")
    heights = np.array([[float(value) for value in line.split()] for line in body])
    if heights.shape != (rows, cols):
        raise ValueError(f"Height field {path} has shape {heights.shape}, expected {(rows, cols)}")
    return HeightField(origin=np.array([ox, oy]), cell_size=cell_size, heights=heights)


def export_heightfield_raw(field: HeightField, path: Path) -> tuple[Path, Path]:
    """
    Write heights as a raw little-endian float32 array plus a JSON sidecar manifest.

    Returns:
        tuple[Path, Path]: (payload path, manifest path)
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = path.with_suffix(".f32")
    manifest = path.with_suffix(".json")
    field.heights.astype("<f4").tofile(payload)
    manifest.write_text(json.dumps({
        "rows": field.rows,
        "cols": field.cols,
        "cell_size": field.cell_size,
        "origin": [float(field.origin[0]), float(field.origin[1])],
        "dtype": "<f4",
        "order": "row-major",
        "payload": payload.name,
    }, indent=2), encoding="utf-8")
    return payload, manifest


def load_heightfield_raw(manifest_path: Path) -> HeightField:
    """Read a field exported by export_heightfield_raw (heights rounded to float32)."""
    manifest_path = Path(manifest_path)
    meta = json.loads(manifest_path.read_text(encoding="utf-8"))
    payload = manifest_path.parent / meta["payload"]
    data = np.fromfile(payload, dtype=meta["dtype"])
    expected = meta["rows"] * meta["cols"]
    if data.size != expected:
        raise ValueError(f"Raw height field {payload} holds {data.size} values, expected {expected}")
    return HeightField(
        origin=np.array(meta["origin"], dtype=float),
        cell_size=float(meta["cell_size"]),
        heights=data.reshape(meta["rows"], meta["cols"]).astype(float),
    )
