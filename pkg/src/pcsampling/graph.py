"""Symmetric KNN graphs with Gaussian edge weights."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc
from scipy.spatial import cKDTree

from .pc_io import PointCloud

__all__ = [
    "SparseGraph",
    "build_knn_graph",
    "knn_edges",
    "estimate_sigma",
    "connected_components",
    "graph_from_adjacency",
    "write_edge_list",
    "read_edge_list",
]


@dataclass(eq=False)
class SparseGraph:
    """Weighted undirected graph in CSR form.

    ``adjacency`` is symmetric with an empty diagonal; node weights (self-loops)
    are kept separately in ``selfloops``.
    """

    adjacency: sp.csr_matrix
    selfloops: np.ndarray | None = None
    k: int | None = None
    sigma: float | None = None
    degrees: np.ndarray = field(init=False)
    max_unweighted_degree: int = field(init=False)

    def __post_init__(self):
        a = sp.csr_matrix(self.adjacency, dtype=np.float64)
        a.sort_indices()
        self.adjacency = a
        self.degrees = np.asarray(a.sum(axis=1)).ravel()
        counts = np.diff(a.indptr)
        self.max_unweighted_degree = int(counts.max()) if a.shape[0] else 0
        if self.selfloops is None:
            self.selfloops = np.zeros(a.shape[0])
        else:
            self.selfloops = np.asarray(self.selfloops, dtype=np.float64)
            if self.selfloops.shape != (a.shape[0],) or np.any(self.selfloops < 0):
                raise ValueError("self-loop weights must be a non-negative vector of length n")

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def laplacian(self, generalized: bool = True) -> sp.csr_matrix:
        """``D - A``, plus the self-loop diagonal when ``generalized``."""
        d = self.degrees + (self.selfloops if generalized else 0.0)
        return (sp.diags(d) - self.adjacency).tocsr()

    def random_walk_laplacian(self) -> sp.csr_matrix:
        return (sp.diags(1.0 / self.degrees) @ self.laplacian(generalized=False)).tocsr()

    def subgraph(self, nodes, with_selfloops: bool = True) -> "SparseGraph":
        """Induced sub-graph on ``nodes``.

        With ``with_selfloops`` the weight of every edge cut away is moved onto the
        boundary node's self-loop, so each node keeps its degree in the parent graph.
        """
        nodes = np.asarray(nodes)
        rows = self.adjacency[nodes]
        inner = rows[:, nodes]
        loops = self.selfloops[nodes].copy()
        if with_selfloops:
            mask = np.ones(self.n)
            mask[nodes] = 0.0
            loops = loops + rows @ mask
        return SparseGraph(inner, loops, self.k, self.sigma)


def graph_from_adjacency(a, selfloops=None) -> SparseGraph:
    """Wrap a symmetric (dense or sparse) weight matrix as a :class:`SparseGraph`."""
    a = sp.csr_matrix(a, dtype=np.float64)
    if a.shape[0] != a.shape[1]:
        raise ValueError("adjacency must be square")
    if a.diagonal().any():
        raise ValueError("adjacency must have an empty diagonal; use selfloops")
    if (a != a.T).nnz:
        raise ValueError("adjacency must be exactly symmetric")
    if a.nnz and a.data.min() < 0:
        raise ValueError("edge weights must be non-negative")
    return SparseGraph(a, selfloops)


def _positions(pc):
    if isinstance(pc, PointCloud):
        return pc.positions
    pos = np.asarray(pc)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise ValueError("positions must have shape (N, 3)")
    return pos


def _sqdist(pos, i, j):
    diff = pos[i] - pos[j]
    return np.einsum("...k,...k->...", diff, diff)


def knn_edges(pos, k: int) -> np.ndarray:
    """Directed KNN lists as an (N, k) index array.

    Neighbors are ordered by distance, with ties broken by the lower point index.
    Every point at a tied k-th distance is considered, so the result does not
    depend on the kd-tree's internal ordering.
    """
    pos = np.asarray(pos)
    n = len(pos)
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < N (k={k}, N={n})")
    exact = np.issubdtype(pos.dtype, np.integer)
    work = pos.astype(np.int64) if exact else pos.astype(np.float64)
    tree = cKDTree(work.astype(np.float64))
    m = min(n, k + 1 + max(8, k))
    _, idx = tree.query(work.astype(np.float64), m)
    idx = idx.reshape(n, m)
    rows = np.arange(n)[:, None]
    d2 = _sqdist(work, rows, idx)
    # drop self by index (duplicates sit at distance 0 as well)
    d2 = np.where(idx == rows, np.inf, d2)
    # lexicographic (distance, index) order via two stable sorts
    key_order = np.argsort(idx, axis=1, kind="stable")
    idx = np.take_along_axis(idx, key_order, axis=1)
    d2 = np.take_along_axis(d2, key_order, axis=1)
    order = np.argsort(d2, axis=1, kind="stable")
    idx = np.take_along_axis(idx, order, axis=1)
    d2 = np.take_along_axis(d2, order, axis=1)
    out = idx[:, :k].copy()
    kth = d2[:, k - 1]
    # rows whose k-th distance reaches the edge of the query may have unseen ties
    if m < n:
        last = np.where(np.isinf(d2[:, -1]), d2[:, -2], d2[:, -1])
        suspect = np.nonzero(last <= kth)[0]
        for i in suspect:
            r = np.sqrt(float(kth[i])) * (1 + 1e-12) + 1e-12
            cand = np.asarray(tree.query_ball_point(work[i].astype(np.float64), r), dtype=np.int64)
            cand = cand[cand != i]
            cd2 = _sqdist(work, i, cand)
            sel = np.lexsort((cand, cd2))[:k]
            out[i] = cand[sel]
    return out


def estimate_sigma(pc, edges) -> float:
    """Mean-squared edge length scale: sum of squared lengths over 3N.

    ``edges`` is an (E, 2) array of undirected edges, each listed once.
    """
    pos = _positions(pc)
    edges = np.asarray(edges)
    if edges.size == 0:
        raise ValueError("edge set is empty")
    edges = edges.reshape(-1, 2)
    d2 = _sqdist(pos.astype(np.float64), edges[:, 0], edges[:, 1])
    return float(d2.sum() / (3.0 * len(pos)))


def build_knn_graph(pc, k: int = 5, sigma="auto", sigma_is_variance: bool = True) -> SparseGraph:
    """Union-symmetrized KNN graph with weights ``exp(-|pi - pj|^2 / (2 sigma^2))``.

    Parameters
    ----------
    pc : PointCloud or (N, 3) array
    k : int
        Neighbors per point before symmetrization.
    sigma : float or "auto"
        Kernel width. ``"auto"`` uses :func:`estimate_sigma` on the KNN edges.
    sigma_is_variance : bool
        With ``sigma="auto"``, treat the estimate as sigma**2 (default) rather
        than sigma.
    """
    pos = _positions(pc)
    n = len(pos)
    if n < 2:
        raise ValueError("need at least two points to build a graph")
    nbrs = knn_edges(pos, k)
    rows = np.repeat(np.arange(n), k)
    cols = nbrs.ravel()
    lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
    und = np.unique(lo * np.int64(n) + hi)
    ei, ej = und // n, und % n

    if isinstance(sigma, str):
        if sigma != "auto":
            raise ValueError(f"sigma must be positive or 'auto', got {sigma!r}")
        est = estimate_sigma(pos, np.stack([ei, ej], axis=1))
        sigma2 = est if sigma_is_variance else est * est
    else:
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        sigma2 = float(sigma) ** 2
    if not sigma2 > 0:
        raise ValueError("sigma must be positive (all edges have zero length)")

    d2 = _sqdist(pos.astype(np.float64), ei, ej)
    if np.any(d2 == 0):
        warnings.warn(
            f"{int(np.sum(d2 == 0))} duplicate-point edges get weight 1", RuntimeWarning
        )
    w = np.exp(-d2 / (2.0 * sigma2))
    a = sp.coo_matrix(
        (np.concatenate([w, w]), (np.concatenate([ei, ej]), np.concatenate([ej, ei]))),
        shape=(n, n),
    ).tocsr()
    return SparseGraph(a, None, k, float(np.sqrt(sigma2)))


def connected_components(g: SparseGraph) -> np.ndarray:
    """Component labels, numbered in order of each component's lowest node."""
    _, labels = _cc(g.adjacency, directed=False)
    _, first = np.unique(labels, return_index=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first)] = np.arange(len(first))
    return rank[labels]


def write_edge_list(g: SparseGraph, path) -> None:
    """Dump ``g`` as a JSON header line followed by sorted ``i j w`` lines (i < j)."""
    upper = sp.triu(g.adjacency, k=1).tocoo()
    order = np.lexsort((upper.col, upper.row))
    header = {"n": g.n, "k": g.k, "sigma": g.sigma}
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for i, j, w in zip(upper.row[order], upper.col[order], upper.data[order]):
            fh.write(f"{i} {j} {w:.17g}\n")


def read_edge_list(path) -> SparseGraph:
    with open(path) as fh:
        header = json.loads(fh.readline())
        body = np.loadtxt(fh, ndmin=2)
    n = int(header["n"])
    if body.size:
        i, j, w = body[:, 0].astype(np.int64), body[:, 1].astype(np.int64), body[:, 2]
    else:
        i = j = np.zeros(0, dtype=np.int64)
        w = np.zeros(0)
    a = sp.coo_matrix((np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(n, n))
    return SparseGraph(a.tocsr(), None, header.get("k"), header.get("sigma"))
