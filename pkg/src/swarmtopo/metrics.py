"""Diversity, load-balance and centrality metrics plus experiment helpers."""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .netmodel import (
    CapacityTable,
    LinkIndex,
    NetworkSnapshot,
    build_link_index,
    compute_capacities,
    node_loads,
)
from .qubo import ObjectiveParams, build_qubo, evaluate_decomposed
from .samplers import Sampler, SamplerConfig, sa_sample, solve_qubo

log = logging.getLogger(__name__)


def diversity(topologies: Sequence[np.ndarray]) -> float:
    """Mean pairwise Hamming distance, normalised by the vector length."""
    if len(topologies) < 2:
        raise ValueError("diversity needs at least two topologies")
    arr = np.asarray([np.asarray(t, dtype=np.int64) for t in topologies])
    if arr.ndim != 2:
        raise ValueError("topologies must have equal length")
    k, m = arr.shape
    if m == 0:
        return 0.0
    # per-bit: number of (0, 1) pairs = ones * zeros
    ones = arr.sum(axis=0)
    differing = float(np.sum(ones * (k - ones)))
    return differing / (k * (k - 1) / 2) / m


def load_std(topology: np.ndarray, caps: CapacityTable, index: LinkIndex) -> float:
    """Population standard deviation of node loads."""
    return float(np.std(node_loads(topology, caps, index)))


def _adjacency(topology: np.ndarray, index: LinkIndex) -> list[list[int]]:
    adj = [[] for _ in range(index.num_nodes)]
    for e in np.flatnonzero(np.asarray(topology)):
        i, j = index.pair(e)
        adj[i].append(j)
        adj[j].append(i)
    return adj


def betweenness(topology: np.ndarray, index: LinkIndex) -> np.ndarray:
    """Normalised node betweenness (Brandes, unweighted, undirected).

    Scores are divided by ``(N-1)(N-2)/2``. Pairs in different components
    contribute nothing.
    """
    n = index.num_nodes
    adj = _adjacency(topology, index)
    cb = np.zeros(n)
    for s in range(n):
        stack, pred = [], [[] for _ in range(n)]
        sigma = np.zeros(n)
        sigma[s] = 1.0
        dist = np.full(n, -1)
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    pred[w].append(v)
        delta = np.zeros(n)
        while stack:
            w = stack.pop()
            for v in pred[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                cb[w] += delta[w]
    # each unordered pair was counted from both endpoints
    cb /= 2.0
    if n > 2:
        cb /= (n - 1) * (n - 2) / 2.0
    else:
        cb[:] = 0.0
    return cb


def is_connected(topology: np.ndarray, index: LinkIndex) -> bool:
    adj = _adjacency(topology, index)
    seen, queue = {0}, deque([0])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == index.num_nodes


def max_betweenness(topology: np.ndarray, index: LinkIndex) -> float:
    if not is_connected(topology, index):
        log.debug("max_betweenness on a disconnected graph; counting within components")
    return float(betweenness(topology, index).max())


@dataclass(frozen=True)
class BatchStats:
    mean: float
    std: float
    ci_low: float
    ci_high: float
    n: int
    confidence: float = 0.95

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def to_dict(self) -> dict:
        def f(v):
            return None if math.isnan(v) else v

        return {
            "mean": self.mean, "std": f(self.std), "ci_low": f(self.ci_low),
            "ci_high": f(self.ci_high), "n": self.n, "confidence": self.confidence,
        }


def summarize(runs: Sequence[float], confidence: float = 0.95) -> BatchStats:
    """Mean, sample std and two-sided Student-t interval."""
    x = np.asarray(runs, dtype=float)
    if x.size < 2:
        raise ValueError("summarize needs at least two runs")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    mean = float(x.mean())
    std = float(x.std(ddof=1))
    half = float(stats.t.ppf(0.5 + confidence / 2, x.size - 1)) * std / np.sqrt(x.size)
    return BatchStats(mean, std, mean - half, mean + half, int(x.size), confidence)


# ---------------------------------------------------------------- scenarios

FAMILY_TARGETS = {"I0": 0.2, "I1": 0.4, "I2": 0.6, "I3": 0.8, "I4": 1.0}
FAMILY_BIAS = {"I0": 0.0, "I1": 0.25, "I2": 0.5, "I3": 0.75, "I4": 1.0}
ACCEPT_TOLERANCE = 0.15
MAX_RETRIES = 50


class ScenarioGenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioFamily:
    label: str
    hub_bias: float
    target_betweenness: float
    range_m: float = 400.0
    area_m: float = 1000.0
    altitude_m: float = 100.0

    @classmethod
    def from_label(cls, label: str, **kw) -> "ScenarioFamily":
        if label not in FAMILY_TARGETS:
            raise ValueError(f"unknown scenario family {label!r}; valid: {sorted(FAMILY_TARGETS)}")
        return cls(label, FAMILY_BIAS[label], FAMILY_TARGETS[label], **kw)


# unit petal directions: 3-D cross, neighbours 90 degrees apart
_PETALS = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float
)


def petal_count(hub_bias: float) -> int:
    """Number of petals for a positive hub bias (2 at 0.25 up to 6 at 1.0)."""
    return 1 + int(round(5 * hub_bias))


def _place_nodes(family: ScenarioFamily, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform placement for zero bias, otherwise a hub-and-petals layout.

    Petals sit at 0.88 * range along axis directions around the hub (node 0),
    so petal members reach the hub and each other but not other petals.
    More petals means more pairs whose shortest path crosses the hub.
    """
    r = family.range_m
    centre = np.array([0.0, 0.0, family.altitude_m + r])
    if family.hub_bias <= 0:
        half = family.area_m / 2
        pos = rng.uniform(-half, half, size=(n, 3))
        pos[:, 2] = rng.uniform(-r, r, size=n)
        return pos + centre
    petals = _PETALS[: petal_count(family.hub_bias)]
    petal_of = rng.integers(len(petals), size=n - 1)
    # uniform in a ball of radius 0.1 * range around each petal centre
    direction = rng.normal(size=(n - 1, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = 0.1 * r * rng.uniform(size=(n - 1, 1)) ** (1 / 3)
    members = centre + 0.88 * r * petals[petal_of] + direction * radius
    return np.vstack([centre, members])


def throughput_optimal_topology(snapshot: NetworkSnapshot) -> np.ndarray:
    index = build_link_index(snapshot)
    caps = compute_capacities(snapshot, index)
    q = build_qubo(snapshot, index, caps, ObjectiveParams(alpha=1.0, beta=0.0))
    x, _ = solve_qubo(q)
    return x


def gen_scenario(
    family: ScenarioFamily | str, n: int, seed: int, radio: dict | None = None
) -> tuple[NetworkSnapshot, dict]:
    """Place ``n`` UAVs so the beta=0 optimum hits the family's centralisation.

    Returns the snapshot and a report with the achieved maximum betweenness,
    the full betweenness vector and the attempt count.
    """
    if isinstance(family, str):
        family = ScenarioFamily.from_label(family)
    if n < 4:
        raise ValueError("scenario generation needs at least 4 nodes")
    radio = dict(radio or {})
    radio.setdefault("max_range_m", family.range_m)
    tried = []
    for attempt in range(MAX_RETRIES):
        rng = np.random.default_rng([seed, attempt])
        snap = NetworkSnapshot(_place_nodes(family, n, rng), **radio)
        x = throughput_optimal_topology(snap)
        index = build_link_index(snap)
        bc = betweenness(x, index)
        achieved = float(bc.max())
        tried.append(achieved)
        if abs(achieved - family.target_betweenness) <= ACCEPT_TOLERANCE + 1e-9:
            return snap, {
                "family": family.label,
                "seed": seed,
                "attempts": attempt + 1,
                "max_betweenness": achieved,
                "betweenness": bc.tolist(),
                "connected": is_connected(x, index),
            }
    raise ScenarioGenerationError(
        f"family {family.label} (target {family.target_betweenness}) not reached in "
        f"{MAX_RETRIES} attempts; achieved max betweenness in "
        f"[{min(tried):.3f}, {max(tried):.3f}], mean {np.mean(tried):.3f}"
    )


# ---------------------------------------------------------------- beta sweep

@dataclass(frozen=True)
class SweepRow:
    beta: float
    mean_throughput: float
    mean_load_std: float


def beta_sweep(
    snapshot: NetworkSnapshot,
    betas: Sequence[float],
    sampler: Sampler = sa_sample,
    seeds: Sequence[int] = range(20),
    alpha: float = 1.0,
    scfg: SamplerConfig | None = None,
) -> list[SweepRow]:
    """Best topology per seed for each beta, averaged over seeds."""
    betas = list(betas)
    if betas != sorted(betas):
        raise ValueError("betas must be sorted ascending")
    scfg = scfg or SamplerConfig(num_samples=1)
    index = build_link_index(snapshot)
    caps = compute_capacities(snapshot, index)
    rows = []
    for beta in betas:
        params = ObjectiveParams(alpha=alpha, beta=beta)
        q = build_qubo(snapshot, index, caps, params)
        thr, std = [], []
        for seed in seeds:
            batch = sampler(q, scfg.with_seed(int(seed)))
            x = batch.topologies[int(np.argmin(batch.energies))]
            thr.append(evaluate_decomposed(x, caps, index, params)[0])
            std.append(load_std(x, caps, index))
        rows.append(SweepRow(float(beta), float(np.mean(thr)), float(np.mean(std))))
    return rows
