"""Laplacian-regularized interpolation of a graph signal from its samples."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import SparseGraph, connected_components
from .operator import SmoothingOperator
from .pc_io import PointCloud, rgb_to_yuv, yuv_to_rgb

__all__ = [
    "ReconstructionReport",
    "ConvergenceError",
    "glr_reconstruct",
    "neumann_reconstruct",
    "interpolation_matrix",
    "reconstruct_colors",
    "CHANNELS",
    "pcg",
    "CLOSED_FORM_LIMIT",
    "CG_TOL",
    "DIAGNOSTIC_LIMIT",
]

CLOSED_FORM_LIMIT = 5000  # unknowns solved by direct factorization
CG_TOL = 1e-8
DIAGNOSTIC_LIMIT = 2000
CHANNELS = ("Y", "U", "V", "all")


class ConvergenceError(ArithmeticError):
    """Iterative solver stopped before reaching its tolerance."""


@dataclass
class ReconstructionReport:
    fhat: np.ndarray
    solver: str
    iterations: int = 0
    residual: float = 0.0


def _split(n, sample_idx, f_s):
    sample_idx = np.asarray(sample_idx, dtype=np.int64)
    f_s = np.asarray(f_s, dtype=np.float64)
    if f_s.shape[0] != len(sample_idx):
        raise ValueError("need one sample value (row) per sampled node")
    if len(np.unique(sample_idx)) != len(sample_idx):
        raise ValueError("sampling set contains duplicates")
    if len(sample_idx) and (sample_idx.min() < 0 or sample_idx.max() >= n):
        raise ValueError("sample index out of range")
    sampled = np.zeros(n, dtype=bool)
    sampled[sample_idx] = True
    return sample_idx, f_s, sampled


def pcg(a, b, tol: float = CG_TOL, maxiter: int | None = None, x0=None):
    """Jacobi-preconditioned conjugate gradient for symmetric positive definite ``a``.

    Returns ``(x, iterations, relative_residual)``; stops when
    ``|b - a x| <= tol |b|``. Raises :class:`ConvergenceError` otherwise.
    """
    n = a.shape[0]
    if maxiter is None:
        maxiter = int(10 * math.sqrt(n)) + 100
    inv_diag = 1.0 / a.diagonal()
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - a @ x
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros(n), 0, 0.0
    z = inv_diag * r
    d = z.copy()
    rz = r @ z
    res = np.linalg.norm(r) / bnorm
    it = 0
    while res > tol and it < maxiter:
        ad = a @ d
        step = rz / (d @ ad)
        x += step * d
        r -= step * ad
        z = inv_diag * r
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
        it += 1
        res = np.linalg.norm(r) / bnorm
    if res > tol:
        # recursive residual can drift; confirm with the true one
        res = np.linalg.norm(b - a @ x) / bnorm
        if res > tol:
            raise ConvergenceError(f"CG stopped after {it} iterations at relative residual {res:.3e}")
    return x, it, float(res)


def glr_reconstruct(g: SparseGraph, sample_idx, f_s, solver: str = "auto") -> ReconstructionReport:
    """Smoothest signal agreeing with the samples: minimize ``x^T L x`` s.t. ``x_S = f_S``.

    The unsampled part solves ``L_RR x_R = -L_RS f_S``. ``f_s`` may hold several
    channels as columns.

    Parameters
    ----------
    solver : {"auto", "closed", "cg"}
        ``"auto"`` factorizes directly up to 5000 unknowns and uses CG above.
    """
    sample_idx, f_s, sampled = _split(g.n, sample_idx, f_s)
    labels = connected_components(g)
    covered = np.zeros(labels.max() + 1, dtype=bool)
    covered[labels[sampled]] = True
    if not covered.all():
        missing = int(np.flatnonzero(~covered)[0])
        raise np.linalg.LinAlgError(
            f"connected component {missing} has no samples; the system is singular"
        )
    out = np.zeros((g.n,) + f_s.shape[1:])
    out[sample_idx] = f_s
    rest = np.flatnonzero(~sampled)
    if solver == "auto":
        solver = "closed" if len(rest) <= CLOSED_FORM_LIMIT else "cg"
    if solver not in ("closed", "cg"):
        raise ValueError(f"unknown solver {solver!r}")
    if len(rest) == 0:
        return ReconstructionReport(out, solver)
    lap = g.laplacian()
    l_rr = lap[rest][:, rest].tocsc()
    rhs = -(lap[rest][:, sample_idx] @ f_s)
    iters, resid = 0, 0.0
    if solver == "closed":
        x = spla.splu(l_rr).solve(rhs)
        r = rhs - l_rr @ x
        denom = np.linalg.norm(rhs)
        resid = float(np.linalg.norm(r) / denom) if denom else 0.0
    else:
        l_rr = l_rr.tocsr()
        cols = rhs.reshape(len(rest), -1)
        x = np.empty_like(cols)
        for c in range(cols.shape[1]):
            x[:, c], it, res = pcg(l_rr, cols[:, c])
            iters, resid = max(iters, it), max(resid, res)
        x = x.reshape(rhs.shape)
    out[rest] = x
    return ReconstructionReport(out, solver, iters, resid)


def neumann_reconstruct(z: SmoothingOperator, sample_idx, f_s, p: int) -> ReconstructionReport:
    """Truncated series reconstruction via ``f(t) = P_R Z f(t-1) + P_S f``, ``t = 1..p``.

    Sample values are reproduced exactly at every order.
    """
    if p < 0:
        raise ValueError("p must be non-negative")
    sample_idx, f_s, sampled = _split(z.n, sample_idx, f_s)
    base = np.zeros((z.n,) + f_s.shape[1:])
    base[sample_idx] = f_s
    keep = (~sampled).astype(np.float64)
    if base.ndim > 1:
        keep = keep[:, None]
    f = base.copy()
    for _ in range(p):
        f = keep * (z.z @ f)
        f[sample_idx] = f_s
    return ReconstructionReport(f, f"neumann({p})", p, 0.0)


def interpolation_matrix(g: SparseGraph, sample_idx) -> np.ndarray:
    """Dense N x |S| matrix whose columns reconstruct the sample indicators."""
    if g.n > DIAGNOSTIC_LIMIT:
        raise ValueError(f"interpolation matrix limited to {DIAGNOSTIC_LIMIT} nodes, got {g.n}")
    sample_idx = np.asarray(sample_idx, dtype=np.int64)
    eye = np.eye(len(sample_idx))
    return glr_reconstruct(g, sample_idx, eye, solver="closed").fhat


def reconstruct_colors(pc: PointCloud, g: SparseGraph, sample_idx, channel: str = "all", solver: str = "auto"):
    """Rebuild colors from the sampled points in YUV space.

    Only ``channel`` is interpolated (``"all"`` means Y, U and V); the other
    channels keep their original values. Sampled points keep their original
    RGB exactly.

    Returns
    -------
    cloud : PointCloud
        Same positions with the reconstructed colors.
    yuv : (N, 3) ndarray
        Reconstructed channels before rounding to 8-bit RGB.
    report : ReconstructionReport
    """
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {CHANNELS}, got {channel!r}")
    if pc.n != g.n:
        raise ValueError("point cloud and graph sizes differ")
    sample_idx = np.asarray(sample_idx, dtype=np.int64)
    yuv = np.column_stack(rgb_to_yuv(pc))
    cols = [0, 1, 2] if channel == "all" else ["YUV".index(channel)]
    report = glr_reconstruct(g, sample_idx, yuv[sample_idx][:, cols], solver=solver)
    out = yuv.copy()
    out[:, cols] = report.fhat
    rgb = yuv_to_rgb(out[:, 0], out[:, 1], out[:, 2])
    rgb[sample_idx] = pc.colors[sample_idx]
    return pc.with_colors(rgb), out, report
