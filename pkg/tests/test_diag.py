import csv
import math

import numpy as np
import pytest

from conftest import path_graph, star_graph
from pcsampling.diag import (
    mc_expected_norm,
    operator_norm_prz,
    p_rule_table,
    reconstruction_error_report,
    spectral_radius_prz,
    truncation_error,
    write_p_rule_csv,
)
from pcsampling.graph import build_knn_graph, connected_components
from pcsampling.operator import build_z
from pcsampling.pc_io import rgb_to_yuv
from pcsampling.recon import glr_reconstruct
from pcsampling.synthetic import random_cloud, random_knn_graph, smooth_colors


def _connected_cloud_graph(n, seed, depth=5, k=6):
    rng = np.random.default_rng(seed)
    while True:
        pc = random_cloud(n, int(rng.integers(2**31)), depth=depth)
        g = build_knn_graph(pc, k)
        if connected_components(g).max() == 0:
            return pc, g


def test_norm_of_empty_rest(path3):
    assert operator_norm_prz(build_z(path3), np.zeros(3, bool)).value == 0.0
    assert operator_norm_prz(build_z(path3), []).value == 0.0


def test_norm_single_row(path3):
    est = operator_norm_prz(build_z(path3), [1])
    assert est.value == pytest.approx(math.sqrt(0.375), rel=1e-10)
    assert est.tol == 1e-10 and est.iterations >= 1


@pytest.mark.parametrize("seed", range(10))
def test_norm_matches_dense_svd(seed):
    rng = np.random.default_rng(seed)
    g = random_knn_graph(int(rng.integers(10, 101)), 5, seed=seed)
    z = build_z(g)
    rest = rng.random(g.n) < 0.7
    dense = np.linalg.norm(z.dense() * rest[:, None], 2)
    assert operator_norm_prz(z, rest).value == pytest.approx(dense, rel=1e-8)
    d = g.degrees
    w = np.sqrt(d)[:, None] * (z.dense() * rest[:, None]) / np.sqrt(d)[None, :]
    assert operator_norm_prz(z, rest, weights=d).value == pytest.approx(np.linalg.norm(w, 2), rel=1e-8)


def test_contraction_on_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(10, 101))
        g = random_knn_graph(n, 5, seed=int(rng.integers(2**31)))
        z = build_z(g)
        sampled = np.zeros(n, bool)
        sampled[rng.choice(n, size=int(rng.integers(1, n)), replace=False)] = True
        rest = ~sampled
        assert operator_norm_prz(z, rest, weights=g.degrees).value < 1 - 1e-12
        assert spectral_radius_prz(z, rest) < 1 - 1e-12


def test_euclidean_norm_can_exceed_one():
    # Z is not symmetric, so its plain spectral norm is not bounded by 1
    g = star_graph(3)
    z = build_z(g)
    rest = np.array([True, False, True, True])
    assert np.linalg.norm(z.dense(), 2) > 1
    assert operator_norm_prz(z, rest).value == pytest.approx(1.0281317376, rel=1e-9)
    assert operator_norm_prz(z, rest, weights=g.degrees).value < 1
    assert spectral_radius_prz(z, rest) < 1


def test_mc_bounds_hold():
    g = random_knn_graph(100, 5, seed=0)
    r = mc_expected_norm(build_z(g), 0.25, 2, trials=300, seed=1)
    assert r["root"] >= math.sqrt(0.75) - 3 * r["se_root"]
    assert r["root"] <= math.sqrt(0.75) + math.sqrt(r["sigma"]) + 3 * r["se_root"]
    assert r["lower_ok"] and r["upper_ok"]
    assert r["lower"] == pytest.approx(math.sqrt(0.75))


def test_mc_full_rate_empties_rest():
    g = random_knn_graph(30, 4, seed=0)
    r = mc_expected_norm(build_z(g), 1.0, 2, trials=100, seed=0)
    assert r["mean_norm_p"] == 0.0 and r["lower"] == 0.0


def test_mc_near_full_rate_is_small():
    g = random_knn_graph(30, 4, seed=0)
    assert mc_expected_norm(build_z(g), 0.99, 2, trials=500, seed=0)["mean_norm_p"] < 0.3


def test_mc_input_checks(path3):
    z = build_z(path3)
    with pytest.raises(ValueError):
        mc_expected_norm(z, 0.5, 1, trials=100)
    with pytest.raises(ValueError):
        mc_expected_norm(z, 0.5, 2, trials=10)


def test_truncation_error_cases():
    g = random_knn_graph(60, 5, seed=2)
    z = build_z(g)
    idx = np.random.default_rng(0).choice(60, 15, replace=False)
    assert truncation_error(z, idx, 1) == 0.0
    assert truncation_error(z, np.arange(60), 3) == 0.0
    for p in (2, 3):
        assert math.isfinite(truncation_error(z, idx, p))
    with pytest.raises(ValueError):
        truncation_error(z, idx, 0)


def test_truncation_error_far_apart_samples():
    g = path_graph(20)
    z = build_z(g)
    # samples more than p hops apart: value is reported, not asserted
    e = truncation_error(z, [0, 10], 3)
    assert math.isfinite(e) and e >= 0


def test_truncation_error_guard():
    g = random_knn_graph(2001, 3, seed=0, depth=7, connected=False)
    with pytest.raises(ValueError, match="2000"):
        truncation_error(build_z(g), [0], 2)


def test_error_report_constant_signal():
    # the exact interpolation reproduces constants; the truncated series only
    # approaches them as the order grows
    _, g = _connected_cloud_graph(80, 1)
    f = np.full(g.n, 42.0)
    lhs = []
    for p in (2, 20, 400):
        r = reconstruction_error_report(g, f, 0.25, p, trials=50, seed=0)
        assert r["mean_exact_error"] == pytest.approx(0.0, abs=1e-12)
        lhs.append(r["lhs"])
    assert lhs[0] > lhs[1] > lhs[2]
    assert lhs[2] < 1e-6


def test_error_report_large_order_reaches_exact_error():
    pc, g = _connected_cloud_graph(80, 2)
    f = rgb_to_yuv(smooth_colors(pc.positions, 0))[0]
    r = reconstruction_error_report(g, f, 0.4, 400, trials=30, seed=3)
    assert r["lhs"] == pytest.approx(r["mean_exact_error"], rel=1e-3, abs=1e-6)


def test_error_bound_on_random_geometric_graph():
    pc, g = _connected_cloud_graph(200, 3)
    f = rgb_to_yuv(smooth_colors(pc.positions, 3, cycles=1.5))[0]
    r = reconstruction_error_report(g, f, 0.25, 2, trials=200, seed=0)
    assert r["holds"], r


def test_p_rule_table_and_csv(tmp_path):
    rows = p_rule_table()
    assert len(rows) == 99
    assert max(r["decay"] for r in rows) <= math.exp(-0.25) + 1e-9
    write_p_rule_csv(tmp_path / "p.csv")
    with open(tmp_path / "p.csv") as fh:
        got = list(csv.DictReader(fh))
    assert got[9]["alpha"] == "0.1" and got[9]["p_uni"] == "5" and got[9]["p_rand"] == "5"


def test_exact_reconstruction_used_by_report_is_consistent():
    pc, g = _connected_cloud_graph(60, 4)
    f = rgb_to_yuv(smooth_colors(pc.positions, 1))[0]
    fhat = glr_reconstruct(g, np.arange(0, 60, 3), f[::3]).fhat
    assert np.all(np.isfinite(fhat))
