"""Reconstruction-aware greedy sampling on a whole graph, plus baselines."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import SparseGraph, connected_components
from .operator import InterpolatorGram, build_gram, build_q, build_z
from .pc_io import PointCloud

__all__ = [
    "SamplingBudget",
    "SamplingResult",
    "select_p_uniform",
    "select_p_random",
    "resolve_p",
    "sample_count",
    "greedy_select",
    "component_budgets",
    "rags_sample",
    "uniform_sample",
    "random_sample",
    "save_sampling_set",
    "load_sampling_set",
    "UNIFORM_RATES",
    "TIE_RTOL",
]

UNIFORM_RATES = (0.5, 0.25, 0.125)
# criterion values this close (relative) to the maximum count as ties
TIE_RTOL = 1e-12


def select_p_uniform(alpha: float) -> int:
    """Smallest hop count that reaches every node under regular sampling at rate alpha."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return math.ceil(1.0 / (2.0 * alpha))


def select_p_random(alpha: float) -> int:
    """Order for Bernoulli sampling at rate alpha: ``ceil(-1 / (2 log(1 - alpha)))``."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return math.ceil(-1.0 / (2.0 * math.log1p(-alpha)))


def resolve_p(rule, alpha: float) -> int:
    """Turn ``"uni"``, ``"rand"``, ``"fixed:k"`` or an int into an interpolator order."""
    if isinstance(rule, (int, np.integer)) and not isinstance(rule, bool):
        p = int(rule)
    elif rule in ("uni", "uniform"):
        p = select_p_uniform(alpha)
    elif rule in ("rand", "random"):
        p = select_p_random(alpha)
    elif isinstance(rule, str) and rule.startswith("fixed:"):
        try:
            p = int(rule.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad p rule {rule!r}") from None
    else:
        raise ValueError(f"unknown p rule {rule!r}")
    if p < 1:
        raise ValueError("p must be at least 1")
    return p


def sample_count(alpha: float, n: int) -> int:
    """``floor(alpha * n)``, immune to products like 0.29 * 100 = 28.999..."""
    return int(math.floor(alpha * n * (1 + 1e-12)))


@dataclass
class SamplingBudget:
    """Target rate, sample count and interpolator order.

    ``s`` defaults to ``floor(alpha * N)``; ``p`` may be an int or a rule
    (``"uni"``, ``"rand"``, ``"fixed:k"``).
    """

    alpha: float
    p: int | str = "uni"
    s: int | None = None

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")

    def order(self) -> int:
        return resolve_p(self.p, self.alpha)

    def count(self, n: int) -> int:
        s = sample_count(self.alpha, n) if self.s is None else int(self.s)
        if not 1 <= s <= n:
            raise ValueError(f"sample count {s} infeasible for {n} nodes")
        return s


@dataclass
class SamplingResult:
    indices: np.ndarray
    method: str = ""
    alpha: float | None = None
    p: int | None = None
    seed: int | None = None
    timings: dict = field(default_factory=lambda: {"preparation": 0.0, "selection": 0.0})
    objective_trace: np.ndarray | None = None
    per_block: dict | None = None

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)

    def __len__(self):
        return len(self.indices)

    @property
    def total_time(self) -> float:
        return float(self.timings.get("preparation", 0.0) + self.timings.get("selection", 0.0))

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        m[self.indices] = True
        return m


def _first_max(crit: np.ndarray) -> int:
    top = crit.max()
    return int(np.argmax(crit >= top - TIE_RTOL * abs(top)))


def greedy_select(gram: InterpolatorGram, s: int, candidates=None, strategy: str = "incremental"):
    """Greedy approximate volume maximization over the columns of Q(p).

    Each step picks the candidate ``x`` maximizing
    ``|q_x|^2 - sum_{y in S} <q_y, q_x>^2 / |q_y|^2``. Values within
    ``TIE_RTOL`` of the maximum are ties and go to the lowest index, so exact
    ties are not decided by round-off.

    ``strategy="incremental"`` keeps a running sum per candidate;
    ``"recompute"`` rebuilds the sum over the whole sampling set every step.
    Both add the terms in selection order and so make identical choices.

    Returns
    -------
    indices : ndarray
        Selected nodes in order of selection.
    trace : ndarray
        Criterion value of each pick.
    """
    n = gram.n
    norms2 = gram.norms2
    indptr, cols, vals = gram.inner.indptr, gram.inner.indices, gram.inner.data
    allowed = np.ones(n, dtype=bool) if candidates is None else np.zeros(n, dtype=bool)
    if candidates is not None:
        allowed[np.asarray(candidates)] = True
    if not 0 <= s <= int(allowed.sum()):
        raise ValueError(f"cannot select {s} of {int(allowed.sum())} candidates")
    if strategy not in ("incremental", "recompute"):
        raise ValueError(f"unknown strategy {strategy!r}")

    picked = np.empty(s, dtype=np.int64)
    trace = np.empty(s)
    if strategy == "incremental":
        acc = np.zeros(n)
        crit = np.where(allowed, norms2, -np.inf)
        for t in range(s):
            x = _first_max(crit)
            picked[t] = x
            trace[t] = crit[x]
            lo, hi = indptr[x], indptr[x + 1]
            nb = cols[lo:hi]
            acc[nb] += vals[lo:hi] ** 2 / norms2[x]
            crit[nb] = np.where(allowed[nb], norms2[nb] - acc[nb], -np.inf)
            allowed[x] = False
            crit[x] = -np.inf
    else:
        for t in range(s):
            acc = np.zeros(n)
            for y in picked[:t]:
                lo, hi = indptr[y], indptr[y + 1]
                acc[cols[lo:hi]] += vals[lo:hi] ** 2 / norms2[y]
            crit = np.where(allowed, norms2 - acc, -np.inf)
            x = _first_max(crit)
            picked[t] = x
            trace[t] = crit[x]
            allowed[x] = False
    return picked, trace


def component_budgets(sizes, s: int) -> np.ndarray:
    """Split ``s`` samples over components proportionally to their sizes.

    Floors first, at least one per component, leftovers to the largest
    components (lower label first on equal size).
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    n = int(sizes.sum())
    if s < len(sizes):
        raise ValueError(
            f"{s} samples cannot cover {len(sizes)} connected components"
        )
    if s > n:
        raise ValueError(f"sample count {s} exceeds node count {n}")
    budget = np.maximum(np.floor(s * sizes / n).astype(np.int64), 1)
    budget = np.minimum(budget, sizes)
    by_size = np.lexsort((np.arange(len(sizes)), -sizes))
    while budget.sum() < s:
        for c in by_size:
            if budget.sum() == s:
                break
            if budget[c] < sizes[c]:
                budget[c] += 1
    while budget.sum() > s:
        for c in by_size:
            if budget.sum() == s:
                break
            if budget[c] > 1:
                budget[c] -= 1
    return budget


def _prepare(g: SparseGraph, p: int) -> InterpolatorGram:
    z = build_z(g, with_selfloops=True)
    return build_gram(build_q(z, p), p)


def rags_sample(g: SparseGraph, budget: SamplingBudget, strategy: str = "incremental") -> SamplingResult:
    """Reconstruction-aware greedy sampling over the whole graph.

    Node weights stored on ``g`` (if any) enter the degree used by Z. Graphs with
    several connected components get per-component budgets with at least one
    sample each, since a component without samples cannot be reconstructed.
    """
    if g.n == 0:
        raise ValueError("empty graph")
    s = budget.count(g.n)
    p = budget.order()
    t0 = time.perf_counter()
    gram = _prepare(g, p)
    labels = connected_components(g)
    t1 = time.perf_counter()
    ncomp = int(labels.max()) + 1
    if ncomp == 1:
        idx, trace = greedy_select(gram, s, strategy=strategy)
    else:
        sizes = np.bincount(labels)
        parts = component_budgets(sizes, s)
        picks, traces = [], []
        for c in range(ncomp):
            members = np.flatnonzero(labels == c)
            i, tr = greedy_select(gram, int(parts[c]), candidates=members, strategy=strategy)
            picks.append(i)
            traces.append(tr)
        idx, trace = np.concatenate(picks), np.concatenate(traces)
    t2 = time.perf_counter()
    return SamplingResult(
        idx,
        method="rags",
        alpha=budget.alpha,
        p=p,
        timings={"preparation": t1 - t0, "selection": t2 - t1},
        objective_trace=trace,
    )


def uniform_sample(pc: PointCloud, alpha: float) -> SamplingResult:
    """Keep the points on a regular sub-lattice of the voxel grid.

    0.5 keeps even coordinate sums, 0.25 keeps even y and z, 0.125 keeps even
    x, y and z. Other rates are not expressible this way.
    """
    t0 = time.perf_counter()
    pos = pc.positions
    even = pos % 2 == 0
    if math.isclose(alpha, 0.5):
        keep = pos.sum(axis=1) % 2 == 0
    elif math.isclose(alpha, 0.25):
        keep = even[:, 1] & even[:, 2]
    elif math.isclose(alpha, 0.125):
        keep = even.all(axis=1)
    else:
        raise ValueError(f"unsupported uniform rate {alpha}; choose one of {UNIFORM_RATES}")
    idx = np.flatnonzero(keep)
    return SamplingResult(
        idx, method="uniform", alpha=alpha,
        timings={"preparation": 0.0, "selection": time.perf_counter() - t0},
    )


def random_sample(n: int, alpha: float, seed: int = 0, mode: str = "fixed-size") -> SamplingResult:
    """Random baseline: Bernoulli(alpha) per node, or a uniform floor(alpha*n)-subset."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    if mode == "bernoulli":
        idx = np.flatnonzero(rng.random(n) < alpha)
    elif mode == "fixed-size":
        idx = np.sort(rng.choice(n, size=sample_count(alpha, n), replace=False))
    else:
        raise ValueError(f"unknown random mode {mode!r}")
    return SamplingResult(
        idx, method="random", alpha=alpha, seed=seed,
        timings={"preparation": 0.0, "selection": time.perf_counter() - t0},
    )


def save_sampling_set(result: SamplingResult, path, extra: dict | None = None) -> Path:
    """Write indices one per line to ``path`` and metadata to ``path + '.json'``."""
    path = Path(path)
    path.write_text("".join(f"{i}\n" for i in result.indices))
    meta = {
        "method": result.method,
        "alpha": result.alpha,
        "p": result.p,
        "seed": result.seed,
        "count": int(len(result.indices)),
        "timings": {k: float(v) for k, v in result.timings.items()},
    }
    if result.per_block is not None:
        meta["per_block"] = {str(k): [int(i) for i in v] for k, v in result.per_block.items()}
    if extra:
        meta.update(extra)
    sidecar = path.with_name(path.name + ".json")
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return sidecar


def load_sampling_set(path) -> np.ndarray:
    text = Path(path).read_text().split()
    idx = np.array([int(t) for t in text], dtype=np.int64)
    if idx.size and idx.min() < 0:
        raise ValueError("negative node index in sampling set")
    if len(np.unique(idx)) != len(idx):
        raise ValueError("duplicate node index in sampling set")
    return idx
