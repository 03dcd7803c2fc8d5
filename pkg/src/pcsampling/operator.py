"""Smoothing operator Z, polynomial interpolators Q(p) and their Gram matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import SparseGraph

__all__ = [
    "SmoothingOperator",
    "InterpolatorGram",
    "DROP_TOL",
    "build_z",
    "build_q",
    "build_gram",
    "apply_z",
]

# entries below this are treated as round-off and dropped to limit fill-in
DROP_TOL = 1e-15


@dataclass(frozen=True, eq=False)
class SmoothingOperator:
    """One-hop low-pass operator ``Z = (I + (D + Phi)^-1 A) / 2`` in CSR form."""

    z: sp.csr_matrix
    uses_selfloops: bool = False

    @property
    def n(self) -> int:
        return self.z.shape[0]

    def dense(self) -> np.ndarray:
        return self.z.toarray()


@dataclass(frozen=True, eq=False)
class InterpolatorGram:
    """Inner products between the columns of Q(p).

    ``inner`` is exactly symmetric and only stores pairs with overlapping
    supports (at most 2p hops apart); ``norms2`` is its diagonal.
    """

    p: int
    norms2: np.ndarray
    inner: sp.csr_matrix

    @property
    def n(self) -> int:
        return len(self.norms2)


def _prune(m: sp.csr_matrix, tol: float = DROP_TOL) -> sp.csr_matrix:
    m = m.tocsr()
    if tol > 0 and m.nnz:
        m.data[np.abs(m.data) < tol] = 0.0
        m.eliminate_zeros()
    m.sort_indices()
    return m


def build_z(g: SparseGraph, with_selfloops: bool = False) -> SmoothingOperator:
    """Build ``Z = (I + D~^-1 A) / 2`` with ``D~ = D`` or ``D + Phi``.

    Raises
    ------
    ValueError
        If a node has neither edges nor (when requested) a self-loop.
    """
    d = g.degrees + g.selfloops if with_selfloops else g.degrees
    if np.any(d <= 0):
        bad = int(np.flatnonzero(d <= 0)[0])
        raise ValueError(f"isolated node {bad}: zero degree and no self-loop")
    walk = sp.diags(0.5 / d) @ g.adjacency
    z = (walk + sp.diags(np.full(g.n, 0.5))).tocsr()
    z.sort_indices()
    return SmoothingOperator(z, bool(with_selfloops))


def build_q(z, p: int, tol: float = DROP_TOL) -> sp.csr_matrix:
    """Interpolator matrix ``Q(p) = Z + Z^2 + ... + Z^p``.

    Uses the recursion ``Q(t) = Z + Q(t-1) Z``; column ``i`` is supported on the
    p-hop neighborhood of node ``i``.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    zm = z.z if isinstance(z, SmoothingOperator) else sp.csr_matrix(z)
    q = zm.copy().tocsr()
    for _ in range(p - 1):
        q = _prune(zm + q @ zm, tol)
    q.sort_indices()
    return q


def build_gram(q: sp.spmatrix, p: int, chunk_rows: int | None = None) -> InterpolatorGram:
    """Pairwise column inner products ``Q^T Q``.

    The product is formed from ``Q^T`` with sorted column indices, so both
    ``inner[i, j]`` and ``inner[j, i]`` accumulate the same terms in the same
    order and the result is symmetric bit for bit.

    Parameters
    ----------
    chunk_rows : int, optional
        Form the product ``chunk_rows`` rows at a time. Each row is computed
        exactly as in the one-shot product; this only caps the size of the
        temporaries when the interpolators overlap heavily.
    """
    q = sp.csr_matrix(q)
    qt = q.T.tocsr()
    qt.sort_indices()
    n = qt.shape[0]
    if chunk_rows is None or chunk_rows >= n:
        inner = (qt @ q).tocsr()
    else:
        if chunk_rows < 1:
            raise ValueError("chunk_rows must be positive")
        parts = [(qt[i:i + chunk_rows] @ q).tocsr() for i in range(0, n, chunk_rows)]
        inner = sp.vstack(parts, format="csr")
    inner.sort_indices()
    return InterpolatorGram(int(p), np.asarray(inner.diagonal(), dtype=np.float64), inner)


def apply_z(z: SmoothingOperator, x) -> np.ndarray:
    """Sparse product ``Z x`` for a vector or a stack of column vectors."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != z.n:
        raise ValueError(f"length mismatch: operator has {z.n} rows, vector {x.shape[0]}")
    return z.z @ x
