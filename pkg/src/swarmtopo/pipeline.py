"""End-to-end helpers: offline portfolio construction and the paired
performance-retention experiment."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .metrics import BatchStats, diversity, summarize, throughput_optimal_topology
from .netmodel import NetworkSnapshot, build_link_index, compute_capacities
from .offline import CandidateSet, DiversityConfig, generate_candidates, select_portfolio
from .online import SwitchPolicy, UtilityWeights
from .qubo import ObjectiveParams, QuboMatrix, build_qubo
from .samplers import Sampler, SamplerConfig, sa_sample
from .sim import ScenarioSpec, SimTrace, run_dynamic, run_static

log = logging.getLogger(__name__)


@dataclass
class OfflineResult:
    q0: QuboMatrix
    candidates: CandidateSet
    portfolio: CandidateSet


def build_problem(snapshot: NetworkSnapshot, params: ObjectiveParams = ObjectiveParams()) -> QuboMatrix:
    index = build_link_index(snapshot)
    return build_qubo(snapshot, index, compute_capacities(snapshot, index), params)


def run_offline(
    snapshot: NetworkSnapshot,
    params: ObjectiveParams = ObjectiveParams(),
    dcfg: DiversityConfig = DiversityConfig(),
    scfg: SamplerConfig = SamplerConfig(),
    portfolio_size: int = 10,
    sampler: Sampler = sa_sample,
) -> OfflineResult:
    """Build the QUBO, run the penalised sampling rounds and pick a portfolio."""
    q0 = build_problem(snapshot, params)
    cset = generate_candidates(q0, sampler, dcfg, scfg, snapshot_id=snapshot.snapshot_id)
    portfolio = select_portfolio(cset, portfolio_size)
    if len(portfolio) < portfolio_size:
        log.warning(
            "only %d distinct candidates for a portfolio of %d", len(portfolio), portfolio_size
        )
    if len(portfolio) > 1:
        log.info("portfolio of %d, diversity %.4f", len(portfolio), diversity(portfolio.topologies))
    return OfflineResult(q0, cset, portfolio)


@dataclass
class PRExperiment:
    seeds: list[int]
    dynamic: list[SimTrace]
    static: list[SimTrace]
    pr_dynamic: BatchStats
    pr_static: BatchStats
    difference: BatchStats  # paired PR(dynamic) - PR(static)

    @property
    def relative_improvement(self) -> float:
        return self.pr_dynamic.mean / self.pr_static.mean - 1.0

    def summary(self) -> dict:
        return {
            "seeds": self.seeds,
            "pr_dynamic": self.pr_dynamic.to_dict(),
            "pr_static": self.pr_static.to_dict(),
            "pr_difference": self.difference.to_dict(),
            "relative_improvement": self.relative_improvement,
            "num_switches": [t.num_switches for t in self.dynamic],
        }


def _pair(args):
    scenario, portfolio, baseline, weights, policy = args
    return (
        run_dynamic(scenario, portfolio, weights, policy),
        run_static(scenario, baseline),
    )


def _usable_pr(trace: SimTrace) -> float:
    if trace.pr is None:
        raise ValueError("zero initial throughput; PR undefined for this run")
    return trace.pr


def pr_experiment(
    template: ScenarioSpec,
    portfolio: Sequence[np.ndarray],
    baseline: np.ndarray | None = None,
    runs: int = 20,
    weights: UtilityWeights | None = None,
    policy: SwitchPolicy | None = None,
    jobs: int = 1,
) -> PRExperiment:
    """Dynamic portfolio vs. a fixed topology over ``runs`` environment seeds.

    Run ``r`` uses root seed ``template.seed + r`` for both arms, so they see
    the same mobility, shadowing and disturbance draws. ``baseline`` defaults
    to the throughput-optimal topology of the snapshot.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    if baseline is None:
        baseline = throughput_optimal_topology(template.snapshot)
    seeds = [template.seed + r for r in range(runs)]
    tasks = [(replace(template, seed=s), list(portfolio), baseline, weights, policy) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(_pair, tasks))
    else:
        pairs = [_pair(t) for t in tasks]
    dyn = [p[0] for p in pairs]
    sta = [p[1] for p in pairs]
    pd = np.array([_usable_pr(t) for t in dyn])
    ps = np.array([_usable_pr(t) for t in sta])
    return PRExperiment(seeds, dyn, sta, describe(pd), describe(ps), describe(pd - ps))


def describe(x: np.ndarray) -> BatchStats:
    """``summarize`` that tolerates a single run (interval left undefined)."""
    if len(x) >= 2:
        return summarize(x)
    nan = float("nan")
    return BatchStats(float(np.mean(x)), nan, nan, nan, len(x))


def throughput_band(traces: Sequence[SimTrace], confidence: float = 0.95) -> list[tuple]:
    """Per-step ``(t, mean, ci_lo, ci_hi)`` of normalised throughput."""
    norm = np.array([t.normalized() for t in traces])
    times = [r.t for r in traces[0].records]
    rows = []
    for k, t in enumerate(times):
        s = summarize(norm[:, k], confidence)
        rows.append((t, s.mean, s.ci_low, s.ci_high))
    return rows
