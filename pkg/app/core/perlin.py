"""
Gradient-lattice (Perlin) noise with octaves, vectorized over a sample grid.
"""

from typing import Optional

import numpy as np


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def _lattice_noise(x: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Single-octave noise at lattice coordinates x, y (>= 0)."""
    nx = int(np.floor(x.max())) + 2
    ny = int(np.floor(y.max())) + 2
    angles = rng.uniform(0.0, 2.0 * np.pi, size=(nx, ny))
    gx, gy = np.cos(angles), np.sin(angles)

    xi = np.floor(x).astype(int)
    yi = np.floor(y).astype(int)
    xf = x - xi
    yf = y - yi

    def corner(di: int, dj: int) -> np.ndarray:
        return gx[xi + di, yi + dj] * (xf - di) + gy[xi + di, yi + dj] * (yf - dj)

    u = _fade(xf)
    v = _fade(yf)
    bottom = corner(0, 0) + u * (corner(1, 0) - corner(0, 0))
    top = corner(0, 1) + u * (corner(1, 1) - corner(0, 1))
    return bottom + v * (top - bottom)


def perlin_noise(
    shape: tuple[int, int],
    octaves: int = 6,
    persistence: float = 0.5,
    lacunarity: float = 2.0,
    base_cells: tuple[float, float] = (2.0, 1.0),
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Octave sum of gradient noise sampled on a regular grid.

    Args:
        shape: Output (rows, cols)
        octaves: Number of harmonics
        persistence: Amplitude ratio between consecutive octaves
        lacunarity: Frequency ratio between consecutive octaves
        base_cells: Lattice cells spanned by the grid along rows and cols at the first octave
        rng: Random generator for the lattice gradients

    Returns:
        np.ndarray: Noise normalized by the total amplitude (roughly in [-1, 1])
    """
    rng = rng or np.random.default_rng()
    rows, cols = shape
    s = np.linspace(0.0, 1.0, rows)
    t = np.linspace(0.0, 1.0, cols)
    sx, sy = np.meshgrid(s, t, indexing="ij")

    total = np.zeros(shape)
    amplitude = 1.0
    frequency = 1.0
    norm = 0.0
    for _ in range(octaves):
        total += amplitude * _lattice_noise(sx * base_cells[0] * frequency, sy * base_cells[1] * frequency, rng)
        norm += amplitude
        amplitude *= persistence
        frequency *= lacunarity
    return total / norm


def perlin_heights(
    shape: tuple[int, int],
    max_height: float,
    rng: np.random.Generator,
    octaves: int = 6,
    persistence: float = 0.5,
    base_cells: tuple[float, float] = (2.0, 1.0),
) -> np.ndarray:
    """Noise rescaled to span [0, max_height]."""
    noise = perlin_noise(shape, octaves=octaves, persistence=persistence, base_cells=base_cells, rng=rng)
    span = noise.max() - noise.min()
    if span <= 0.0:
        return np.zeros(shape)
    return (noise - noise.min()) * (max_height / span)
