"""Offline stage: multi-round candidate generation with frequency penalties."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .metrics import diversity
from .qubo import QuboMatrix, apply_frequency_penalty, evaluate_base
from .samplers import Sampler, SamplerConfig, sa_sample

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiversityConfig:
    rounds: int = 3
    samples_per_round: int = 10
    lam: float | None = None  # None -> default_lambda(q0)
    dedupe: bool = True

    def __post_init__(self):
        if self.rounds < 1 or self.samples_per_round < 1:
            raise ValueError("rounds and samples_per_round must be >= 1")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lambda must be non-negative")


@dataclass
class Candidate:
    topology: np.ndarray
    objective: float
    round: int
    sample_index: int


@dataclass
class CandidateSet:
    entries: list[Candidate]
    snapshot_id: str | None = None
    penalty: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i) -> Candidate:
        return self.entries[i]

    @property
    def topologies(self) -> list[np.ndarray]:
        return [c.topology for c in self.entries]

    @property
    def num_links(self) -> int:
        return len(self.entries[0].topology) if self.entries else 0

    def to_dict(self) -> dict:
        return {
            "snapshot_id": self.snapshot_id,
            "candidates": [
                {
                    "bits": [int(b) for b in c.topology],
                    "objective": float(c.objective),
                    "round": int(c.round),
                    "sample_index": int(c.sample_index),
                }
                for c in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CandidateSet":
        entries = [
            Candidate(
                np.asarray(c["bits"], dtype=np.uint8),
                float(c["objective"]),
                int(c.get("round", 0)),
                int(c.get("sample_index", i)),
            )
            for i, c in enumerate(data["candidates"])
        ]
        lengths = {len(c.topology) for c in entries}
        if len(lengths) > 1:
            raise ValueError("candidates have inconsistent lengths")
        return cls(entries, data.get("snapshot_id"))


def default_lambda(q0: QuboMatrix) -> float:
    return 0.5 * float(np.mean(np.abs(np.diag(q0.base))))


def generate_candidates(
    q0: QuboMatrix,
    sampler: Sampler = sa_sample,
    dcfg: DiversityConfig = DiversityConfig(),
    scfg: SamplerConfig = SamplerConfig(),
    snapshot_id: str | None = None,
) -> CandidateSet:
    """Sample ``rounds`` batches, penalising frequently used links between rounds.

    Round ``r`` (0-based) samples with seed ``scfg.seed + r``. Candidates
    are scored against the un-penalised matrix. ``q0`` is not modified; the
    accumulated penalty is returned on the result.
    """
    if np.any(q0.penalty_accum):
        raise ValueError("initial QUBO must be penalty-free")
    lam = default_lambda(q0) if dcfg.lam is None else dcfg.lam
    q = q0.copy()
    k = dcfg.samples_per_round
    entries: list[Candidate] = []
    for r in range(dcfg.rounds):
        cfg = SamplerConfig(num_samples=k, seed=scfg.seed + r, sa=scfg.sa)
        batch = sampler(q, cfg)
        if len(batch) != k:
            raise RuntimeError(f"sampler returned {len(batch)} states, expected {k}")
        round_entries = [
            Candidate(np.asarray(x, dtype=np.uint8), evaluate_base(x, q0), r, m)
            for m, x in enumerate(batch.topologies)
        ]
        entries.extend(round_entries)
        apply_frequency_penalty(q, batch.topologies, lam)
        log.info(
            "round %d: best objective %.6g, running diversity %.4f",
            r, min(c.objective for c in round_entries), _running_diversity(entries),
        )
    if dcfg.dedupe:
        entries = dedupe_candidates(entries)
    return CandidateSet(entries, snapshot_id, penalty=q.penalty_accum.copy())


def _running_diversity(entries) -> float:
    if len(entries) < 2:
        return 0.0
    return diversity([c.topology for c in entries])


def dedupe_candidates(entries: list[Candidate]) -> list[Candidate]:
    seen, out = set(), []
    for c in entries:
        key = c.topology.tobytes()
        if key not in seen:
            seen.add(key)
            out.append(c)
    return out


def select_portfolio(cset: CandidateSet, size: int) -> CandidateSet:
    """Greedy max-min Hamming subset, seeded with the best objective.

    Each step adds the candidate whose minimum normalised Hamming distance to
    the already chosen ones is largest; ties go to the better objective, then
    to the earlier entry.
    """
    if size < 1:
        raise ValueError("portfolio size must be >= 1")
    if len(cset) == 0:
        raise ValueError("cannot select a portfolio from an empty candidate set")
    pool = dedupe_candidates(cset.entries)
    bits = np.array([c.topology for c in pool], dtype=float)
    objs = np.array([c.objective for c in pool])
    m = max(bits.shape[1], 1)
    n = len(pool)
    target = min(size, n)
    first = min(range(n), key=lambda i: (objs[i], i))
    chosen = [first]
    min_dist = np.abs(bits - bits[first]).sum(axis=1) / m
    available = np.ones(n, dtype=bool)
    available[first] = False
    while len(chosen) < target:
        cands = np.flatnonzero(available)
        nxt = min(cands, key=lambda i: (-min_dist[i], objs[i], i))
        chosen.append(int(nxt))
        available[nxt] = False
        min_dist = np.minimum(min_dist, np.abs(bits - bits[nxt]).sum(axis=1) / m)
    return CandidateSet([pool[i] for i in chosen], cset.snapshot_id, cset.penalty)
