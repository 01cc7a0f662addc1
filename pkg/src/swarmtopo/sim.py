"""Discrete-time swarm simulator for the performance-retention experiment.

Environment randomness (mobility, shadowing, disturbance draws) comes from
named streams derived from one root seed and is consumed identically no
matter which topology is deployed, so a static and a dynamic run with the
same seed see the same world.
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .netmodel import (
    LinkIndex,
    NetworkSnapshot,
    active_degrees,
    build_link_index,
    link_distances,
    shannon_capacity,
    snr_db,
)
from .online import (
    LinkStateSample,
    SwitchPolicy,
    UtilityWeights,
    score_candidates,
    select_topology,
)

STREAMS = {"mobility": 1, "shadowing": 2, "disturbance": 3, "sampler": 4}


def stream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(STREAMS[name],)))


def sampler_seed(seed: int) -> int:
    """Integer seed for the annealer, taken from the ``sampler`` stream."""
    return int(stream(seed, "sampler").integers(2**31))


@dataclass(frozen=True)
class MobilityParams:
    max_speed_mps: float = 5.0
    waypoint_pause_s: float = 0.0
    # None -> snapshot bounding box padded by ``margin_m``
    area_lo: tuple[float, float, float] | None = None
    area_hi: tuple[float, float, float] | None = None
    margin_m: float = 50.0
    # when set, each UAV draws waypoints within this distance of its start
    home_radius_m: float | None = None


@dataclass(frozen=True)
class EnergyParams:
    initial_j: float | tuple[float, ...] = 1000.0
    idle_w: float = 1.0
    tx_j_per_bit: float = 1.0


DISTURBANCE_MODES = ("node", "link")


@dataclass(frozen=True)
class Disturbance:
    """Masks ``affected_fraction`` of the deployed links for ``duration_steps``.

    ``mode="link"`` picks the links independently. ``mode="node"`` takes
    UAVs in random order and masks all their deployed links until the
    fraction is covered, as when one airframe manoeuvres or is shadowed.
    """

    time_s: float
    affected_fraction: float = 0.3
    duration_steps: int = 2
    mode: str = "node"

    def __post_init__(self):
        if not 0 <= self.affected_fraction <= 1:
            raise ValueError("affected_fraction must lie in [0, 1]")
        if self.mode not in DISTURBANCE_MODES:
            raise ValueError(f"disturbance mode must be one of {DISTURBANCE_MODES}")
        if self.duration_steps < 0:
            raise ValueError("duration_steps must be non-negative")


DEFAULT_DISTURBANCES = (Disturbance(12.0), Disturbance(19.0), Disturbance(25.0))


@dataclass(frozen=True)
class ScenarioSpec:
    snapshot: NetworkSnapshot
    horizon_s: float = 30.0
    step_s: float = 1.0
    mobility: MobilityParams = field(default_factory=MobilityParams)
    shadowing_sigma_db: float = 4.0
    shadowing_rho: float = 0.9
    energy: EnergyParams = field(default_factory=EnergyParams)
    disturbances: tuple[Disturbance, ...] = DEFAULT_DISTURBANCES
    seed: int = 0

    def __post_init__(self):
        if not self.horizon_s > 0 or not self.step_s > 0:
            raise ValueError("horizon_s and step_s must be positive")
        if not 0 <= self.shadowing_rho <= 1 or self.shadowing_sigma_db < 0:
            raise ValueError("invalid shadowing parameters")
        object.__setattr__(self, "disturbances", tuple(self.disturbances))

    @property
    def num_steps(self) -> int:
        return int(round(self.horizon_s / self.step_s))

    def frozen(self) -> "ScenarioSpec":
        """Same scenario with no motion, no shadowing and no disturbances."""
        from dataclasses import replace

        return replace(
            self,
            mobility=replace(self.mobility, max_speed_mps=0.0),
            shadowing_sigma_db=0.0,
            disturbances=(),
        )


@dataclass(frozen=True)
class StepRecord:
    t: float
    topology_index: int
    throughput: float
    switched: bool
    outage_links: int
    min_energy_j: float


@dataclass
class SimTrace:
    records: list[StepRecord]
    pr: float | None
    num_switches: int
    degenerate: bool = False

    @property
    def throughput(self) -> np.ndarray:
        return np.array([r.throughput for r in self.records])

    def normalized(self) -> np.ndarray:
        thr = self.throughput
        return thr / thr[0] if thr[0] > 0 else np.full_like(thr, np.nan)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "thr", "thr_norm", "topo_idx", "switched", "outage_links", "min_energy"])
        thr0 = self.records[0].throughput if self.records else 0.0
        for r in self.records:
            norm = r.throughput / thr0 if thr0 > 0 else float("nan")
            w.writerow([
                repr(r.t), repr(r.throughput), repr(norm), r.topology_index,
                int(r.switched), r.outage_links, repr(r.min_energy_j),
            ])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "pr": self.pr,
            "num_switches": self.num_switches,
            "degenerate": self.degenerate,
            "thr0": self.records[0].throughput if self.records else None,
            "mean_thr": float(self.throughput.mean()) if self.records else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def performance_retention(throughput: Sequence[float]) -> float | None:
    """``mean(thr[1:]) / thr[0]``; ``None`` when ``thr[0]`` is zero.

    Evaluated in exact rational arithmetic and rounded once, so a constant
    trace gives exactly 1.0.
    """
    thr = np.asarray(throughput, dtype=float)
    if thr.size < 2:
        raise ValueError("need thr(0) and at least one later step")
    if np.any(thr < 0) or not np.all(np.isfinite(thr)):
        raise ValueError("throughput must be finite and non-negative")
    if thr[0] <= 0:
        return None
    total = sum(Fraction(float(v)) for v in thr[1:])
    return float(total / (Fraction(float(thr[0])) * (thr.size - 1)))


# ------------------------------------------------------------------ physics

class RandomWaypoint:
    def __init__(self, positions: np.ndarray, params: MobilityParams, rng: np.random.Generator):
        self.pos = np.array(positions, dtype=float)
        self.params = params
        self.rng = rng
        if params.area_lo is None or params.area_hi is None:
            self.lo = self.pos.min(axis=0) - params.margin_m
            self.hi = self.pos.max(axis=0) + params.margin_m
        else:
            self.lo = np.asarray(params.area_lo, dtype=float)
            self.hi = np.asarray(params.area_hi, dtype=float)
        n = len(self.pos)
        if params.home_radius_m is not None:
            r = params.home_radius_m
            self.lo = np.maximum(self.pos - r, self.lo)
            self.hi = np.minimum(self.pos + r, self.hi)
        self.target = rng.uniform(self.lo, self.hi, size=(n, 3))
        self.speed = rng.uniform(0.5, 1.0, size=n) * params.max_speed_mps
        self.pause = np.zeros(n)

    def step(self, dt: float) -> np.ndarray:
        n = len(self.pos)
        # fixed draw count per step keeps the stream aligned across runs
        new_targets = self.rng.uniform(self.lo, self.hi, size=self.pos.shape)
        new_speeds = self.rng.uniform(0.5, 1.0, size=n) * self.params.max_speed_mps
        if self.params.max_speed_mps <= 0:
            return self.pos
        for i in range(n):
            if self.pause[i] > 0:
                self.pause[i] = max(0.0, self.pause[i] - dt)
                continue
            delta = self.target[i] - self.pos[i]
            dist = float(np.linalg.norm(delta))
            travel = self.speed[i] * dt
            if dist <= travel:
                self.pos[i] = self.target[i]
                self.target[i] = new_targets[i]
                self.speed[i] = new_speeds[i]
                self.pause[i] = self.params.waypoint_pause_s
            else:
                self.pos[i] += delta * (travel / dist)
        return self.pos


def step_shadowing(prev: np.ndarray | None, m: int, sigma_db: float, rho: float,
                   rng: np.random.Generator) -> np.ndarray:
    """AR(1) log-normal shadowing in dB; stationary start when ``prev`` is None."""
    z = rng.standard_normal(m)
    if prev is None:
        return sigma_db * z
    return rho * prev + math.sqrt(1.0 - rho * rho) * sigma_db * z


def step_channel(
    snapshot: NetworkSnapshot,
    index: LinkIndex,
    positions: np.ndarray,
    prev_shadowing: np.ndarray | None,
    rng: np.random.Generator,
    sigma_db: float = 4.0,
    rho: float = 0.9,
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(sinr_linear, shadowing_db)`` for every indexed link."""
    shadow = step_shadowing(prev_shadowing, index.num_links, sigma_db, rho, rng)
    dist = link_distances(positions, index)
    sinr_db = snr_db(snapshot, dist) + shadow
    return 10.0 ** (sinr_db / 10.0), shadow


def effective_rates(topology: np.ndarray, caps: np.ndarray, outage: np.ndarray,
                    index: LinkIndex) -> np.ndarray:
    """Per-link TDMA rate ``C * min(1/deg_i, 1/deg_j)``.

    Degrees count every scheduled (active) link, including ones that are
    currently in outage: the slot is still spent, it just carries nothing.
    """
    x = np.asarray(topology).astype(bool)
    deg = active_degrees(x, index)
    rates = np.zeros(index.num_links)
    if not x.any():
        return rates
    i, j = index.pairs[:, 0], index.pairs[:, 1]
    live = x & ~np.asarray(outage, dtype=bool)
    share = 1.0 / np.maximum(np.maximum(deg[i], deg[j]), 1)
    rates[live] = caps[live] * share[live]
    return rates


def tdma_throughput(topology: np.ndarray, state: LinkStateSample, caps: np.ndarray,
                    index: LinkIndex) -> float:
    return float(effective_rates(topology, caps, state.outage_mask, index).sum())


def step_energy(energy: np.ndarray, rates: np.ndarray, params: EnergyParams, step_s: float,
                index: LinkIndex) -> np.ndarray:
    per_node = np.zeros(index.num_nodes)
    np.add.at(per_node, index.pairs[:, 0], rates)
    np.add.at(per_node, index.pairs[:, 1], rates)
    drain = (params.idle_w + params.tx_j_per_bit * per_node) * step_s
    return np.maximum(0.0, energy - drain)


def depleted_outage(energy: np.ndarray, index: LinkIndex) -> np.ndarray:
    dead = energy <= 0
    return dead[index.pairs[:, 0]] | dead[index.pairs[:, 1]]


def disturbance_hits(d: Disturbance, active: np.ndarray, draws, index: LinkIndex) -> np.ndarray:
    """Link ids masked by ``d`` given its pre-drawn ``(uniforms, node order)``."""
    u, order = draws
    live = np.flatnonzero(active)
    n_hit = int(round(d.affected_fraction * live.size))
    if n_hit == 0:
        return np.empty(0, dtype=np.int64)
    if d.mode == "link":
        return live[np.argsort(u[live], kind="stable")[:n_hit]]
    hit = np.zeros(index.num_links, dtype=bool)
    for node in order:
        hit |= active & ((index.pairs[:, 0] == node) | (index.pairs[:, 1] == node))
        if np.count_nonzero(hit) >= n_hit:
            break
    return np.flatnonzero(hit)


# ------------------------------------------------------------------- runner

def _initial_energy(params: EnergyParams, n: int) -> np.ndarray:
    e = np.broadcast_to(np.asarray(params.initial_j, dtype=float), (n,)).copy()
    if np.any(e < 0):
        raise ValueError("initial energies must be non-negative")
    return e


def _simulate(
    scenario: ScenarioSpec,
    candidates: Sequence[np.ndarray],
    weights: UtilityWeights | None,
    policy: SwitchPolicy | None,
    select: bool,
) -> SimTrace:
    snap = scenario.snapshot
    index = build_link_index(snap)
    m = index.num_links
    cands = [np.asarray(c, dtype=np.uint8) for c in candidates]
    if not cands:
        raise ValueError("candidate set is empty")
    for c in cands:
        if c.shape != (m,):
            raise ValueError(f"candidate has {c.shape[0]} links, snapshot indexes {m}")
    weights = weights or UtilityWeights()
    policy = policy or SwitchPolicy()

    mob = RandomWaypoint(snap.node_positions, scenario.mobility, stream(scenario.seed, "mobility"))
    shadow_rng = stream(scenario.seed, "shadowing")
    dist_rng = stream(scenario.seed, "disturbance")
    steps = scenario.num_steps
    dt = scenario.step_s
    # disturbance draws fixed up front so they never depend on the topology
    events = {}
    for d in scenario.disturbances:
        k = int(round(d.time_s / dt))
        draws = (dist_rng.uniform(size=m), dist_rng.permutation(snap.num_nodes))
        events.setdefault(k, []).append((d, draws))

    energy = _initial_energy(scenario.energy, snap.num_nodes)
    shadow = None
    masked_until = np.full(m, -1)
    current, since_switch, outage_left = 0, 0.0, 0.0
    records, switches = [], 0

    for t in range(steps + 1):
        positions = snap.node_positions if t == 0 else mob.step(dt)
        sinr, shadow = step_channel(
            snap, index, positions, shadow, shadow_rng,
            scenario.shadowing_sigma_db, scenario.shadowing_rho,
        )
        active = cands[current].astype(bool)
        for d, draws in events.get(t, []):
            hit = disturbance_hits(d, active, draws, index)
            if hit.size and d.duration_steps:
                masked_until[hit] = np.maximum(masked_until[hit], t + d.duration_steps - 1)
        outage = (masked_until >= t) | depleted_outage(energy, index)
        if snap.max_range_m is not None:
            outage |= link_distances(positions, index) > snap.max_range_m
        state = LinkStateSample(t * dt, sinr, energy.copy(), outage)

        switched = False
        if select and len(cands) > 1:
            if t == 0:
                current = int(np.argmax(score_candidates(cands, state, weights, index)))
            else:
                current, switched = select_topology(
                    cands, state, weights, current, since_switch, policy, index
                )
        if switched:
            switches += 1
            since_switch = 0.0
            outage_left = policy.switch_outage_steps
        caps = shannon_capacity(sinr, snap.bandwidth_hz, snap.capacity_gap)
        rates = effective_rates(cands[current], caps, outage, index)
        if outage_left > 0:
            # whole outage steps carry nothing; a fractional remainder scales the step
            rates *= max(0.0, 1.0 - outage_left)
            outage_left = max(0.0, outage_left - 1.0)
        thr = float(rates.sum())
        records.append(StepRecord(
            t * dt, current, thr, switched, int(np.count_nonzero(outage & cands[current].astype(bool))),
            float(energy.min()),
        ))
        energy = step_energy(energy, rates, scenario.energy, dt, index)
        since_switch += dt

    pr = performance_retention([r.throughput for r in records])
    return SimTrace(records, pr, switches, degenerate=pr is None)


def run_dynamic(
    scenario: ScenarioSpec,
    candidates: Sequence[np.ndarray],
    weights: UtilityWeights | None = None,
    policy: SwitchPolicy | None = None,
) -> SimTrace:
    """Online selection over ``candidates`` with switching guards."""
    return _simulate(scenario, candidates, weights, policy, select=True)


def run_static(scenario: ScenarioSpec, single: np.ndarray) -> SimTrace:
    """Hold one topology for the whole horizon."""
    return _simulate(scenario, [single], None, None, select=False)
