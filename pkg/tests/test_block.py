import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import path_graph
from pcsampling.block import (
    block_budgets,
    block_graph,
    morton_decode,
    morton_encode,
    octree_partition,
    rabs_sample,
    selfloop_weights,
)
from pcsampling.graph import build_knn_graph
from pcsampling.operator import build_z
from pcsampling.pc_io import PointCloud
from pcsampling.sampler import SamplingBudget, rags_sample, sample_count
from pcsampling.synthetic import height_field, random_cloud


def line_cloud(n):
    return PointCloud(np.column_stack([np.arange(n), np.zeros(n, int), np.zeros(n, int)]), depth=3)


def test_morton_example():
    pc = PointCloud([[0, 0, 0], [3, 3, 3]], depth=2)
    part = octree_partition(pc, 2)
    assert part.n_blocks == 2
    assert part.morton.tolist() == [0, 7]


def test_morton_bit_order():
    assert morton_encode(np.array([1, 0, 0])) == 1
    assert morton_encode(np.array([0, 1, 0])) == 2
    assert morton_encode(np.array([0, 0, 1])) == 4


@given(st.lists(st.tuples(*[st.integers(0, 2**21 - 1)] * 3), min_size=1, max_size=50))
def test_morton_round_trip(coords):
    c = np.array(coords, dtype=np.int64)
    np.testing.assert_array_equal(morton_decode(morton_encode(c)), c)


def test_single_leaf():
    pc = PointCloud([[0, 0, 0], [1, 1, 1], [3, 2, 1]], depth=3)
    assert octree_partition(pc, 4).n_blocks == 1


@pytest.mark.parametrize("bs", [1, 2, 4, 8, 16, 64])
def test_partition_containment(bs):
    pc = random_cloud(500, seed=bs, depth=6)
    part = octree_partition(pc, bs)
    allnodes = np.concatenate(part.blocks)
    assert np.array_equal(np.sort(allnodes), np.arange(pc.n))
    assert np.all(np.diff(part.morton.astype(np.int64)) > 0)
    for m, members in enumerate(part.blocks):
        assert len(members) and np.all(np.diff(members) > 0)
        assert np.all(pc.positions[members] // bs == part.origin(m) // bs)
        assert np.all(part.labels[members] == m)
    assert part.max_block == max(len(b) for b in part.blocks)


@pytest.mark.parametrize("bs", [0, 3, 12, 128])
def test_invalid_block_size(bs):
    with pytest.raises(ValueError, match="block size"):
        octree_partition(random_cloud(10, depth=6), bs)


def test_selfloops_on_path():
    g = path_graph(4)
    part = octree_partition(line_cloud(4), 2)
    np.testing.assert_array_equal(selfloop_weights(g, part, 0), [0, 1])
    np.testing.assert_array_equal(selfloop_weights(g, part, 1), [1, 0])
    whole = octree_partition(line_cloud(4), 8)
    np.testing.assert_array_equal(selfloop_weights(g, whole, 0), [0, 0, 0, 0])


@pytest.mark.parametrize("seed", range(10))
def test_degree_conservation(seed):
    pc = random_cloud(400, seed=seed, depth=5)
    g = build_knn_graph(pc, 5)
    part = octree_partition(pc, 8)
    for m, members in enumerate(part.blocks):
        sub = block_graph(g, part, m)
        np.testing.assert_allclose(sub.degrees + sub.selfloops, g.degrees[members], rtol=1e-14, atol=0)


def _random_partition(rng, n):
    labels = rng.integers(0, int(rng.integers(2, 9)), size=n)
    return [np.flatnonzero(labels == c) for c in np.unique(labels)]


@pytest.mark.parametrize("seed", range(20))
def test_selflooped_block_operator_is_exact_submatrix(seed):
    rng = np.random.default_rng(seed)
    pc = random_cloud(int(rng.integers(30, 200)), seed=seed, depth=4)
    g = build_knn_graph(pc, 5)
    z = build_z(g).dense()
    for members in _random_partition(rng, g.n):
        zb = build_z(g.subgraph(members), with_selfloops=True).dense()
        assert np.abs(zb - z[np.ix_(members, members)]).max() <= 1e-14


def test_block_budgets():
    from pcsampling.block import BlockPartition

    part = BlockPartition([np.arange(100), np.arange(100, 200)], 64, np.array([0, 1], np.uint64), np.zeros(200))
    assert block_budgets(part, 0.25).tolist() == [25, 25]
    tiny = BlockPartition([np.arange(3)], 64, np.array([0], np.uint64), np.zeros(3))
    with pytest.raises(ValueError):
        block_budgets(tiny, 0.25)


@given(st.lists(st.integers(1, 300), min_size=1, max_size=20), st.floats(0.01, 1.0))
def test_block_budgets_never_exceed_global(sizes, alpha):
    from pcsampling.block import BlockPartition

    starts = np.cumsum([0] + sizes)
    blocks = [np.arange(starts[i], starts[i + 1]) for i in range(len(sizes))]
    part = BlockPartition(blocks, 1, np.arange(len(sizes), dtype=np.uint64), np.zeros(starts[-1]))
    counts = [sample_count(alpha, b) for b in sizes]
    if sum(counts) == 0:
        with pytest.raises(ValueError):
            block_budgets(part, alpha)
    else:
        got = block_budgets(part, alpha)
        assert got.tolist() == counts
        assert got.sum() <= sample_count(alpha, int(starts[-1]))


def test_rabs_path_with_selfloops():
    res = rabs_sample(line_cloud(4), path_graph(4), SamplingBudget(0.5, p=1), block_size=2)
    assert sorted(res.indices.tolist()) == [1, 2]
    assert res.method == "rabs"


def test_rabs_path_without_selfloops():
    res = rabs_sample(line_cloud(4), path_graph(4), SamplingBudget(0.5, p=1), block_size=2, selfloops=False)
    assert sorted(res.indices.tolist()) == [0, 2]
    assert res.method == "rabs-noloops"


def test_block_operator_without_selfloops():
    part = octree_partition(line_cloud(4), 2)
    z = build_z(block_graph(path_graph(4), part, 0, selfloops=False), with_selfloops=True)
    np.testing.assert_array_equal(z.dense(), [[0.5, 0.5], [0.5, 0.5]])


@pytest.mark.parametrize("alpha, p", [(0.1, "uni"), (0.25, 2), (0.5, "rand")])
def test_one_block_equals_global(alpha, p):
    pc = height_field(30, seed=3)
    g = build_knn_graph(pc, 5)
    budget = SamplingBudget(alpha, p)
    a = rabs_sample(pc, g, budget, block_size=1 << pc.depth)
    b = rags_sample(g, budget)
    assert np.array_equal(a.indices, b.indices)


def test_block_order_does_not_matter():
    pc = height_field(40, seed=1)
    g = build_knn_graph(pc, 5)
    budget = SamplingBudget(0.2)
    part = octree_partition(pc, 8)
    order = np.random.default_rng(0).permutation(part.n_blocks)
    a = rabs_sample(pc, g, budget, block_size=8)
    b = rabs_sample(pc, g, budget, block_size=8, block_order=order)
    assert np.array_equal(a.indices, b.indices)


def test_provenance_and_counts():
    pc = height_field(40, seed=2)
    g = build_knn_graph(pc, 5)
    res = rabs_sample(pc, g, SamplingBudget(0.1), block_size=8)
    part = octree_partition(pc, 8)
    expected = block_budgets(part, 0.1)
    assert len(res) == expected.sum() <= sample_count(0.1, pc.n)
    assert len(np.unique(res.indices)) == len(res)
    codes = {int(c): m for m, c in enumerate(part.morton)}
    rebuilt = np.concatenate([part.blocks[codes[c]][loc] for c, loc in sorted(res.per_block.items())])
    assert np.array_equal(np.sort(rebuilt), np.sort(res.indices))
    for c, loc in res.per_block.items():
        assert len(loc) == expected[codes[c]]
    assert res.p == 5


def test_rabs_rejects_explicit_count():
    pc = height_field(10)
    g = build_knn_graph(pc, 5)
    with pytest.raises(ValueError):
        rabs_sample(pc, g, SamplingBudget(0.5, s=3))
