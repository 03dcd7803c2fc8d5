"""Voxelized test surfaces carrying smooth color fields."""

from __future__ import annotations

import math

import numpy as np

from .graph import SparseGraph, build_knn_graph, connected_components
from .pc_io import PointCloud

__all__ = [
    "smooth_colors",
    "height_field",
    "sphere_shell",
    "synthetic_cloud",
    "random_cloud",
    "random_knn_graph",
    "SHAPES",
]

SHAPES = ("plane", "sphere")


def smooth_colors(positions, seed: int = 0, cycles: float = 3.0, terms: int = 4) -> np.ndarray:
    """Sum of random low-frequency plane waves per channel, mapped into [16, 239].

    ``cycles`` is the highest number of periods across the bounding box.
    """
    pos = np.asarray(positions, dtype=np.float64)
    lo, hi = pos.min(axis=0), pos.max(axis=0)
    unit = (pos - lo) / np.maximum(hi - lo, 1.0)
    rng = np.random.default_rng(seed)
    out = np.empty((len(pos), 3))
    for c in range(3):
        acc = np.zeros(len(pos))
        for _ in range(terms):
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            freq = rng.uniform(0.5, cycles)
            phase = rng.uniform(0, 2 * math.pi)
            acc += np.sin(2 * math.pi * freq * unit @ direction + phase)
        out[:, c] = 127.5 + 111.5 * acc / terms
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def height_field(side: int, seed: int = 0, amplitude: float | None = None, cycles: float = 3.0) -> PointCloud:
    """One point per (x, y) cell of a ``side x side`` grid on a gently curved surface."""
    rng = np.random.default_rng(seed)
    if amplitude is None:
        amplitude = side / 8.0
    x, y = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    x, y = x.ravel(), y.ravel()
    a, b = rng.uniform(0, 2 * math.pi, size=2)
    h = amplitude * (1 + 0.5 * np.sin(2 * math.pi * x / side + a) + 0.5 * np.sin(2 * math.pi * y / side + b))
    z = np.rint(h).astype(np.int64)
    pos = np.column_stack([x, y, z])
    depth = max(1, int(pos.max()).bit_length())
    return PointCloud(pos, smooth_colors(pos, seed + 1, cycles), depth)


def sphere_shell(radius: float, seed: int = 0, cycles: float = 3.0) -> PointCloud:
    """Voxels whose centre lies within half a voxel of a sphere surface."""
    r = float(radius)
    c = math.ceil(r) + 1
    grid = np.arange(2 * c + 1)
    out = []
    # slab by slab keeps peak memory small for large radii
    yy, zz = np.meshgrid(grid, grid, indexing="ij")
    for x in grid:
        d = np.sqrt((x - c) ** 2 + (yy - c) ** 2 + (zz - c) ** 2)
        hit = np.abs(d - r) <= 0.5
        if hit.any():
            out.append(np.column_stack([np.full(hit.sum(), x), yy[hit], zz[hit]]))
    pos = np.concatenate(out).astype(np.int64)
    depth = max(1, int(pos.max()).bit_length())
    return PointCloud(pos, smooth_colors(pos, seed, cycles), depth)


def synthetic_cloud(shape: str, n: int, seed: int = 0, cycles: float = 3.0) -> PointCloud:
    """A plane or sphere surface with roughly ``n`` points."""
    if n < 4:
        raise ValueError("ask for at least 4 points")
    if shape == "plane":
        return height_field(max(2, round(math.sqrt(n))), seed, cycles=cycles)
    if shape == "sphere":
        # a one-voxel shell holds about 4 pi r^2 points
        return sphere_shell(max(1.0, math.sqrt(n / (4 * math.pi))), seed, cycles)
    raise ValueError(f"unknown shape {shape!r}; choose one of {SHAPES}")


def random_cloud(n: int, seed: int = 0, depth: int = 6, colors: bool = True) -> PointCloud:
    """``n`` distinct voxels drawn uniformly from a ``2**depth`` cube."""
    side = 1 << depth
    if n > side**3:
        raise ValueError("more points than voxels")
    rng = np.random.default_rng(seed)
    flat = rng.choice(side**3, size=n, replace=False)
    pos = np.column_stack(np.unravel_index(flat, (side, side, side))).astype(np.int64)
    col = rng.integers(0, 256, size=(n, 3)) if colors else None
    return PointCloud(pos, col, depth)


def random_knn_graph(n: int, k: int = 5, seed: int = 0, depth: int = 6, connected: bool = True,
                     max_tries: int = 100) -> SparseGraph:
    """KNN graph over a random voxel cloud; redrawn until connected if requested."""
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        pc = random_cloud(n, int(rng.integers(2**31)), depth, colors=False)
        g = build_knn_graph(pc, k)
        if not connected or connected_components(g).max() == 0:
            return g
    raise RuntimeError(f"no connected {k}-NN graph on {n} points after {max_tries} draws")
