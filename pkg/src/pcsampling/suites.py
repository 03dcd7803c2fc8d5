"""Self-contained numerical check suites behind ``pcsampling diagnose``.

Each suite returns a JSON-ready dict with one entry per check: the measured
value, the threshold it is held to and whether it passed. Entries marked
``"assert": false`` are reported for information only.
"""

from __future__ import annotations

import math

import numpy as np

from .diag import (
    mc_expected_norm,
    operator_norm_prz,
    p_rule_table,
    reconstruction_error_report,
    spectral_radius_prz,
    truncation_error,
)
from .graph import build_knn_graph, connected_components
from .operator import build_z
from .pc_io import rgb_to_yuv
from .recon import glr_reconstruct, neumann_reconstruct
from .sampler import select_p_random, select_p_uniform
from .synthetic import random_cloud, random_knn_graph, smooth_colors

__all__ = ["SUITES", "run_suite"]

SUITES = ("lemma1", "lemma4", "theorem1", "ep", "lemma2", "prules")


def _check(name, value, threshold, passed, assert_=True, **extra):
    row = {"name": name, "value": value, "threshold": threshold, "pass": bool(passed), "assert": assert_}
    row.update(extra)
    return row


def _covering_sample(labels, rng, rate=0.5):
    """Bernoulli sample plus one forced node in every component left empty."""
    picked = rng.random(len(labels)) < rate
    for c in range(labels.max() + 1):
        members = np.flatnonzero(labels == c)
        if not picked[members].any():
            picked[rng.choice(members)] = True
    return np.flatnonzero(picked)


def suite_lemma1(seed: int = 0, graphs: int = 50, **_):
    rng = np.random.default_rng(seed)
    checks = []
    for t in range(graphs):
        n = int(rng.integers(10, 51))
        # the series remainder decays like rho(P_R Z)^p; half-rate sets keep
        # rho well below 1 on these small graphs
        g = random_knn_graph(n, k=5, seed=int(rng.integers(2**31)), depth=3)
        idx = _covering_sample(connected_components(g), rng, 0.5)
        if len(idx) == n:
            idx = idx[1:]
        f_s = rng.normal(size=len(idx))
        exact = glr_reconstruct(g, idx, f_s, solver="closed").fhat
        approx = neumann_reconstruct(build_z(g), idx, f_s, 500).fhat
        rel = float(np.linalg.norm(approx - exact) / np.linalg.norm(exact))
        checks.append(_check(f"graph{t}", rel, 1e-6, rel <= 1e-6, n=n, samples=int(len(idx))))
    return checks


def suite_lemma4(seed: int = 0, graphs: int = 100, **_):
    rng = np.random.default_rng(seed)
    checks = []
    above = 0
    worst = 0.0
    for t in range(graphs):
        n = int(rng.integers(10, 101))
        g = random_knn_graph(n, k=5, seed=int(rng.integers(2**31)))
        z = build_z(g)
        sampled = np.zeros(n, dtype=bool)
        sampled[rng.choice(n, size=int(rng.integers(1, n)), replace=False)] = True
        rest = ~sampled
        weighted = operator_norm_prz(z, rest, weights=g.degrees).value
        radius = spectral_radius_prz(z, rest)
        plain = operator_norm_prz(z, rest).value
        above += plain >= 1.0
        worst = max(worst, plain)
        checks.append(_check(f"graph{t}:degree_norm", weighted, 1 - 1e-12, weighted < 1 - 1e-12))
        checks.append(_check(f"graph{t}:spectral_radius", radius, 1 - 1e-12, radius < 1 - 1e-12))
    checks.append(_check("euclidean_norm_at_least_one", int(above), 0, above == 0, assert_=False,
                         worst=worst))
    return checks


def suite_theorem1(seed: int = 0, trials: int = 1000, **_):
    g = random_knn_graph(100, k=5, seed=seed)
    z = build_z(g)
    checks = []
    for alpha in (0.1, 0.25, 0.5):
        for p in (2, 4):
            r = mc_expected_norm(z, alpha, p, trials=trials, seed=seed)
            tag = f"alpha={alpha},p={p}"
            checks.append(_check(f"{tag}:lower", r["root"], r["lower"], r["lower_ok"], se=r["se_root"]))
            checks.append(_check(f"{tag}:upper", r["root"], r["upper"], r["upper_ok"], se=r["se_root"]))
    return checks


def suite_ep(seed: int = 0, **_):
    rng = np.random.default_rng(seed)
    g = random_knn_graph(80, k=5, seed=seed)
    z = build_z(g)
    idx = rng.choice(g.n, size=20, replace=False)
    checks = [_check("p=1", truncation_error(z, idx, 1), 0.0, truncation_error(z, idx, 1) == 0.0)]
    for p in (2, 3):
        e = truncation_error(z, idx, p)
        checks.append(_check(f"p={p}", e, "finite", math.isfinite(e)))
    return checks


def suite_lemma2(seed: int = 0, trials: int = 200, **_):
    rng = np.random.default_rng(seed)
    for _ in range(100):
        pc = random_cloud(200, int(rng.integers(2**31)), depth=5)
        g = build_knn_graph(pc, 6)
        if connected_components(g).max() == 0:
            break
    else:
        raise RuntimeError("no connected test graph")
    f = rgb_to_yuv(smooth_colors(pc.positions, seed, cycles=1.5))[0]
    p = select_p_uniform(0.25)
    r = reconstruction_error_report(g, f, 0.25, p, trials=trials, seed=seed)
    return [_check(f"alpha=0.25,p={p}", r["lhs"], r["rhs"], r["holds"], se=r["se_lhs"])]


def suite_prules(**_):
    checks = []
    rows = p_rule_table()
    bad = [r["alpha"] for r in rows if r["p_rand"] > r["p_uni"]]
    checks.append(_check("p_rand<=p_uni", len(bad), 0, not bad, failing=bad))
    target = math.exp(-0.25) + 1e-9
    worst = max(r["decay"] for r in rows)
    checks.append(_check("decay<=exp(-1/4)", worst, target, worst <= target))
    for alpha, want in ((0.1, 5), (0.25, 2), (0.5, 1)):
        pu, pr = select_p_uniform(alpha), select_p_random(alpha)
        checks.append(_check(f"alpha={alpha}", [pu, pr], [want, want], pu == want and pr == want))
    return checks


_RUNNERS = {
    "lemma1": suite_lemma1,
    "lemma4": suite_lemma4,
    "theorem1": suite_theorem1,
    "ep": suite_ep,
    "lemma2": suite_lemma2,
    "prules": suite_prules,
}


def run_suite(name: str, seed: int = 0, trials: int | None = None) -> dict:
    if name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose one of {SUITES}")
    kwargs = {"seed": seed}
    if trials is not None:
        kwargs["trials"] = trials
    checks = _RUNNERS[name](**kwargs)
    passed = all(c["pass"] for c in checks if c["assert"])
    return {"suite": name, "seed": seed, "passed": passed, "checks": checks}
