"""Numerical checks of the interpolator analysis on small graphs.

Everything here is dense linear algebra meant for a few hundred to two
thousand nodes. Monte Carlo routines take explicit seeds and report standard
errors, so each bound check compares an estimate against ``3 * SE``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .graph import SparseGraph, connected_components
from .operator import SmoothingOperator, build_z
from .recon import DIAGNOSTIC_LIMIT, glr_reconstruct, neumann_reconstruct
from .sampler import select_p_random, select_p_uniform

__all__ = [
    "NormEstimate",
    "operator_norm_prz",
    "spectral_radius_prz",
    "mc_expected_norm",
    "truncation_error",
    "reconstruction_error_report",
    "p_rule_table",
    "write_p_rule_csv",
    "spectral_response",
]


@dataclass
class NormEstimate:
    value: float
    iterations: int
    tol: float


def _dense(z) -> np.ndarray:
    if isinstance(z, SmoothingOperator):
        if z.n > DIAGNOSTIC_LIMIT:
            raise ValueError(f"dense diagnostics limited to {DIAGNOSTIC_LIMIT} nodes")
        return z.dense()
    return np.asarray(z, dtype=np.float64)


def _mask(n, rest) -> np.ndarray:
    rest = np.asarray(rest)
    if rest.dtype == bool:
        if rest.shape != (n,):
            raise ValueError("boolean set mask has the wrong length")
        return rest.astype(np.float64)
    m = np.zeros(n)
    m[rest.astype(np.int64)] = 1.0
    return m


def operator_norm_prz(z: SmoothingOperator, rest, tol: float = 1e-10, maxiter: int = 100_000,
                      weights=None) -> NormEstimate:
    """Largest singular value of ``P_R Z`` by power iteration on ``(P_R Z)^T (P_R Z)``.

    ``rest`` is the unsampled set (indices or a boolean mask). With ``weights``
    (typically the degrees ``D``) the norm is taken in the weighted inner
    product ``<x, y>_D = x^T D y``, i.e. of ``D^1/2 P_R Z D^-1/2``. Z is
    self-adjoint for that inner product, which is what makes ``P_R Z`` a strict
    contraction on connected graphs with at least one sample; in the plain
    Euclidean norm ``|Z|`` can exceed 1 on irregular graphs.
    """
    n = z.n
    keep = _mask(n, rest)
    if not keep.any():
        return NormEstimate(0.0, 0, tol)
    mat = z.z
    if weights is not None:
        w = np.sqrt(np.asarray(weights, dtype=np.float64))

        def fwd(x):
            return w * (keep * (mat @ (x / w)))

        def adj(y):
            return (mat.T @ (keep * (w * y))) / w
    else:
        def fwd(x):
            return keep * (mat @ x)

        def adj(y):
            return mat.T @ (keep * y)

    x = np.random.default_rng(12345).random(n) + 0.5
    x /= np.linalg.norm(x)
    lam = 0.0
    for it in range(1, maxiter + 1):
        y = adj(fwd(x))
        lam_new = float(np.linalg.norm(y))
        if lam_new == 0.0:
            return NormEstimate(0.0, it, tol)
        x = y / lam_new
        if abs(lam_new - lam) <= tol * lam_new:
            lam = lam_new
            break
        lam = lam_new
    return NormEstimate(math.sqrt(lam), it, tol)


def spectral_radius_prz(z: SmoothingOperator, rest) -> float:
    """Spectral radius of ``P_R Z`` (dense eigenvalues)."""
    zd = _dense(z)
    keep = _mask(len(zd), rest)
    return float(np.max(np.abs(np.linalg.eigvals(keep[:, None] * zd))))


def mc_expected_norm(z: SmoothingOperator, alpha: float, p: int, trials: int = 1000, seed: int = 0) -> dict:
    """Monte Carlo check of the concentration of ``|P_R Z|^p`` under Bernoulli sampling.

    Each node is sampled independently with probability ``alpha``; for every
    draw the dense spectral norms of ``P_R Z`` and of the centred matrix
    ``Z^T P_R Z - (1 - alpha) Z^T Z`` are recorded.

    The bounds compared are ``sqrt(1 - alpha)`` from below and
    ``sqrt(1 - alpha) + sqrt(sigma)`` from above, where ``sigma^(p/2)`` is the
    mean of the centred norm raised to ``p/2``.
    """
    if p < 2:
        raise ValueError("p must be at least 2")
    if trials < 100:
        raise ValueError("use at least 100 trials")
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    zd = _dense(z)
    n = len(zd)
    ztz = zd.T @ zd
    rng = np.random.default_rng(seed)
    norms = np.empty(trials)
    dev = np.empty(trials)
    for t in range(trials):
        keep = rng.random(n) >= alpha
        prz = zd * keep[:, None]
        norms[t] = np.linalg.norm(prz, 2) if keep.any() else 0.0
        centred = prz.T @ prz - (1.0 - alpha) * ztz
        dev[t] = np.max(np.abs(np.linalg.eigvalsh(centred)))
    powered = norms**p
    mean = float(powered.mean())
    se = float(powered.std(ddof=1) / math.sqrt(trials))
    root = mean ** (1.0 / p)
    # delta method for the standard error of mean**(1/p)
    se_root = se * root / (p * mean) if mean > 0 else se
    moment = float(np.mean(dev ** (p / 2.0)))
    sigma = moment ** (2.0 / p)
    lower = math.sqrt(1.0 - alpha)
    upper = lower + math.sqrt(sigma)
    return {
        "alpha": alpha,
        "p": p,
        "trials": trials,
        "seed": seed,
        "mean_norm_p": mean,
        "se_mean_norm_p": se,
        "root": root,
        "se_root": se_root,
        "centred_moment": moment,
        "sigma": sigma,
        "lower": lower,
        "upper": upper,
        "lower_ok": bool(root >= lower - 3 * se_root),
        "upper_ok": bool(root <= upper + 3 * se_root),
    }


def truncation_error(z: SmoothingOperator, sample_idx, p: int) -> float:
    """Frobenius norm of ``P_R Z^p P_S - (P_R Z)^p P_S``."""
    if p < 1:
        raise ValueError("p must be at least 1")
    zd = _dense(z)
    n = len(zd)
    s = _mask(n, sample_idx).astype(bool)
    r = ~s
    zp = np.linalg.matrix_power(zd, p)
    prz = zd * r[:, None]
    walk = np.linalg.matrix_power(prz, p)
    err = (zp * r[:, None] - walk)[:, s]
    return float(np.linalg.norm(err, "fro"))


def reconstruction_error_report(g: SparseGraph, f, alpha: float, p: int, trials: int = 200, seed: int = 0) -> dict:
    """Empirical check of the expected error of the order-p reconstruction.

    Compares ``E[|f_p - f| / |f|]`` against
    ``E|P_R Z|^p + (1 + sqrt(E|P_R Z|^2p)) * sqrt(E[|f_hat - f|^2 / |f|^2])``
    with all expectations over Bernoulli(alpha) sampling sets. Draws with no
    sample at all are redrawn (the exact reconstruction is undefined there).
    """
    if g.n > DIAGNOSTIC_LIMIT:
        raise ValueError(f"dense diagnostics limited to {DIAGNOSTIC_LIMIT} nodes")
    if connected_components(g).max() > 0:
        raise ValueError("graph must be connected")
    f = np.asarray(f, dtype=np.float64)
    fnorm = np.linalg.norm(f)
    if fnorm == 0:
        raise ValueError("test signal must be non-zero")
    z = build_z(g)
    zd = z.dense()
    rng = np.random.default_rng(seed)
    lhs = np.empty(trials)
    exact_sq = np.empty(trials)
    norms = np.empty(trials)
    redraws = 0
    for t in range(trials):
        sampled = rng.random(g.n) < alpha
        while not sampled.any():
            redraws += 1
            sampled = rng.random(g.n) < alpha
        idx = np.flatnonzero(sampled)
        approx = neumann_reconstruct(z, idx, f[idx], p).fhat
        exact = glr_reconstruct(g, idx, f[idx], solver="closed").fhat
        lhs[t] = np.linalg.norm(approx - f) / fnorm
        exact_sq[t] = (np.linalg.norm(exact - f) / fnorm) ** 2
        rest = ~sampled
        norms[t] = np.linalg.norm(zd * rest[:, None], 2) if rest.any() else 0.0
    mean_lhs = float(lhs.mean())
    se_lhs = float(lhs.std(ddof=1) / math.sqrt(trials))
    rhs = float(np.mean(norms**p) + (1.0 + math.sqrt(np.mean(norms ** (2 * p)))) * math.sqrt(exact_sq.mean()))
    return {
        "alpha": alpha,
        "p": p,
        "trials": trials,
        "seed": seed,
        "redraws": redraws,
        "lhs": mean_lhs,
        "se_lhs": se_lhs,
        "rhs": rhs,
        "mean_exact_error": float(np.sqrt(exact_sq).mean()),
        "holds": bool(mean_lhs <= rhs + 3 * se_lhs),
    }


def p_rule_table(alphas=None) -> list[dict]:
    """Both p rules on a grid of rates, with ``sqrt(1 - alpha)^p_rand``."""
    if alphas is None:
        alphas = np.round(np.arange(1, 100) / 100.0, 2)
    rows = []
    for a in alphas:
        a = float(a)
        pr = select_p_random(a)
        rows.append({
            "alpha": a,
            "p_uni": select_p_uniform(a),
            "p_rand": pr,
            "decay": math.sqrt(1.0 - a) ** pr,
        })
    return rows


def write_p_rule_csv(path, alphas=None) -> None:
    rows = p_rule_table(alphas)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def spectral_response(lam, p: int) -> np.ndarray:
    """Frequency response ``sum_{l=1..p} (1 - lam/2)^l`` of Q(p)."""
    g = 1.0 - np.asarray(lam, dtype=np.float64) / 2.0
    return sum(g**l for l in range(1, p + 1))
