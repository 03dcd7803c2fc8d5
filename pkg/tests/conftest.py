import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import HealthCheck, settings

from pcsampling.graph import graph_from_adjacency

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def path_graph(n, w=1.0):
    a = np.zeros((n, n))
    for i in range(n - 1):
        a[i, i + 1] = a[i + 1, i] = w
    return graph_from_adjacency(a)


def star_graph(leaves):
    a = np.zeros((leaves + 1, leaves + 1))
    a[0, 1:] = a[1:, 0] = 1.0
    return graph_from_adjacency(a)


def hop_distances(g):
    """All-pairs hop counts by breadth-first search (inf when unreachable)."""
    adj = g.adjacency
    n = g.n
    out = np.full((n, n), np.inf)
    for s in range(n):
        out[s, s] = 0
        frontier = [s]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for u in frontier:
                for v in adj.indices[adj.indptr[u]:adj.indptr[u + 1]]:
                    if out[s, v] == np.inf:
                        out[s, v] = d
                        nxt.append(v)
            frontier = nxt
    return out


@pytest.fixture
def path3():
    return path_graph(3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def dense_adjacency(g):
    return g.adjacency.toarray() if sp.issparse(g.adjacency) else np.asarray(g.adjacency)


ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion."""

    def record(number, ok, detail):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        ACCEPTANCE[number] = f"criterion {number:>2}: {status}  {detail}"
        print(ACCEPTANCE[number])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
