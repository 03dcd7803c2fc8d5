"""Octree blocks, boundary self-loops and block-wise greedy sampling."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .graph import SparseGraph
from .pc_io import PointCloud
from .sampler import SamplingBudget, SamplingResult, _prepare, greedy_select, sample_count

__all__ = [
    "BlockPartition",
    "morton_encode",
    "morton_decode",
    "octree_partition",
    "selfloop_weights",
    "block_budgets",
    "block_graph",
    "rabs_sample",
    "DEFAULT_BLOCK_SIZE",
]

DEFAULT_BLOCK_SIZE = 64


def _spread3(v):
    v = np.asarray(v, dtype=np.uint64) & np.uint64(0x1FFFFF)
    v = (v | (v << np.uint64(32))) & np.uint64(0x1F00000000FFFF)
    v = (v | (v << np.uint64(16))) & np.uint64(0x1F0000FF0000FF)
    v = (v | (v << np.uint64(8))) & np.uint64(0x100F00F00F00F00F)
    v = (v | (v << np.uint64(4))) & np.uint64(0x10C30C30C30C30C3)
    v = (v | (v << np.uint64(2))) & np.uint64(0x1249249249249249)
    return v


def _compact3(v):
    v = np.asarray(v, dtype=np.uint64) & np.uint64(0x1249249249249249)
    v = (v ^ (v >> np.uint64(2))) & np.uint64(0x10C30C30C30C30C3)
    v = (v ^ (v >> np.uint64(4))) & np.uint64(0x100F00F00F00F00F)
    v = (v ^ (v >> np.uint64(8))) & np.uint64(0x1F0000FF0000FF)
    v = (v ^ (v >> np.uint64(16))) & np.uint64(0x1F00000000FFFF)
    v = (v ^ (v >> np.uint64(32))) & np.uint64(0x1FFFFF)
    return v


def morton_encode(coords) -> np.ndarray:
    """Interleave the bits of (x, y, z) integer triples, x in the lowest bit."""
    c = np.asarray(coords)
    return _spread3(c[..., 0]) | (_spread3(c[..., 1]) << np.uint64(1)) | (_spread3(c[..., 2]) << np.uint64(2))


def morton_decode(codes) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.uint64)
    return np.stack(
        [_compact3(codes), _compact3(codes >> np.uint64(1)), _compact3(codes >> np.uint64(2))], axis=-1
    ).astype(np.int64)


@dataclass(eq=False)
class BlockPartition:
    """Non-empty octree leaves of edge ``block_size``, in Morton order.

    ``blocks[m]`` holds the point indices of leaf ``m`` in ascending order and
    ``morton[m]`` the Morton code of its origin in block units.
    """

    blocks: list
    block_size: int
    morton: np.ndarray
    labels: np.ndarray

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(b) for b in self.blocks], dtype=np.int64)

    @property
    def max_block(self) -> int:
        return int(self.sizes.max())

    def origin(self, m: int) -> np.ndarray:
        return morton_decode(self.morton[m]) * self.block_size


def octree_partition(pc: PointCloud, block_size: int = DEFAULT_BLOCK_SIZE) -> BlockPartition:
    """Split the voxel volume into cubes of ``block_size`` and keep the occupied ones.

    Recursive octree subdivision down to a fixed leaf size produces exactly the
    cells of the ``block_size`` lattice, so the leaves are found by quantizing
    coordinates and sorting their Morton codes.
    """
    bs = int(block_size)
    if bs < 1 or bs & (bs - 1) or bs > (1 << pc.depth):
        raise ValueError(
            f"block size must be a power of two not exceeding 2**depth = {1 << pc.depth}, got {block_size}"
        )
    cells = pc.positions // bs
    codes = morton_encode(cells)
    order = np.argsort(codes, kind="stable")
    uniq, start = np.unique(codes[order], return_index=True)
    blocks = np.split(order, start[1:])
    labels = np.empty(pc.n, dtype=np.int64)
    for m, members in enumerate(blocks):
        labels[members] = m
    return BlockPartition(blocks, bs, uniq, labels)


def selfloop_weights(g: SparseGraph, part: BlockPartition, m: int) -> np.ndarray:
    """Weight of the edges leaving block ``m``, per node of the block.

    Computed as ``A[block, :] @ c`` with ``c`` the indicator of nodes outside
    the block.
    """
    nodes = part.blocks[m]
    outside = np.ones(g.n)
    outside[nodes] = 0.0
    return g.adjacency[nodes] @ outside


def block_budgets(part: BlockPartition, alpha: float) -> np.ndarray:
    """Per-block sample counts ``floor(alpha * b_m)``; small blocks may get zero."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    counts = np.array([sample_count(alpha, len(b)) for b in part.blocks], dtype=np.int64)
    if counts.sum() == 0:
        raise ValueError("sampling rate too small: every block gets zero samples")
    return counts


def block_graph(g: SparseGraph, part: BlockPartition, m: int, selfloops: bool = True) -> SparseGraph:
    """Induced sub-graph of block ``m``.

    With ``selfloops`` the cut edge weight becomes a node weight. Without it,
    nodes whose neighbors all lie outside get a unit weight purely so that the
    degree is invertible; their operator row is ``e_i / 2`` either way.
    """
    nodes = part.blocks[m]
    inner = g.adjacency[nodes][:, nodes]
    if selfloops:
        loops = selfloop_weights(g, part, m)
    else:
        deg = np.asarray(inner.sum(axis=1)).ravel()
        loops = np.where(deg > 0, 0.0, 1.0)
    return SparseGraph(inner, loops, g.k, g.sigma)


def rabs_sample(
    pc: PointCloud,
    g: SparseGraph,
    budget: SamplingBudget,
    block_size: int = DEFAULT_BLOCK_SIZE,
    selfloops: bool = True,
    block_order=None,
    strategy: str = "incremental",
) -> SamplingResult:
    """Block-wise reconstruction-aware sampling.

    Every occupied octree block is sampled on its own sub-graph with the same
    interpolator order ``p`` (taken from the global rate). Blocks receive
    ``floor(alpha * b_m)`` samples, so the total may fall short of
    ``floor(alpha * N)``.

    ``block_order`` only changes the processing order; the union is unaffected.
    """
    if budget.s is not None:
        raise ValueError("block sampling derives its count from alpha; leave budget.s unset")
    if pc.n != g.n:
        raise ValueError("point cloud and graph sizes differ")
    p = budget.order()
    t0 = time.perf_counter()
    part = octree_partition(pc, block_size)
    counts = block_budgets(part, budget.alpha)
    prep = time.perf_counter() - t0
    select = 0.0
    order = range(part.n_blocks) if block_order is None else block_order
    picked, traces, per_block = {}, {}, {}
    for m in order:
        if counts[m] == 0:
            continue
        t0 = time.perf_counter()
        gram = _prepare(block_graph(g, part, m, selfloops), p)
        t1 = time.perf_counter()
        local, trace = greedy_select(gram, int(counts[m]), strategy=strategy)
        t2 = time.perf_counter()
        prep += t1 - t0
        select += t2 - t1
        picked[m] = part.blocks[m][local]
        traces[m] = trace
        per_block[int(part.morton[m])] = local
    keys = sorted(picked)
    idx = np.concatenate([picked[m] for m in keys])
    trace = np.concatenate([traces[m] for m in keys])
    return SamplingResult(
        idx,
        method="rabs" if selfloops else "rabs-noloops",
        alpha=budget.alpha,
        p=p,
        timings={"preparation": prep, "selection": select},
        objective_trace=trace,
        per_block=per_block,
    )
