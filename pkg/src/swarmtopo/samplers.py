"""Samplers that return ``k`` low-energy topologies for a QUBO.

Every sampler follows the same call shape, ``sampler(q, cfg) -> SampleBatch``,
so the offline loop does not care whether the states come from simulated
annealing, exhaustive enumeration or a remote annealer.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Protocol

import numba
import numpy as np

from .qubo import QuboMatrix, evaluate_objective

MAX_BRUTE_FORCE_DIM = 22


class SamplerConfigError(ValueError):
    pass


class ProblemTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class SAParams:
    """Annealing schedule. ``None`` temperatures are derived from the matrix:
    ``t_initial = max|q|`` and ``t_final = 1e-3 * t_initial``."""

    sweeps: int = 2000
    t_initial: float | None = None
    t_final: float | None = None
    restarts_per_sample: int = 1

    def __post_init__(self):
        if self.sweeps < 1:
            raise SamplerConfigError("sweeps must be >= 1")
        if self.restarts_per_sample < 1:
            raise SamplerConfigError("restarts_per_sample must be >= 1")
        ti, tf = self.t_initial, self.t_final
        if ti is not None and tf is not None and not ti > tf > 0:
            raise SamplerConfigError(f"need t_initial > t_final > 0, got {ti}, {tf}")
        if ti is not None and not ti > 0:
            raise SamplerConfigError("t_initial must be positive")
        if tf is not None and not tf > 0:
            raise SamplerConfigError("t_final must be positive")

    def schedule(self, q: np.ndarray) -> tuple[float, float]:
        ti = self.t_initial
        if ti is None:
            ti = float(np.max(np.abs(q))) if q.size else 1.0
            if ti == 0.0:
                ti = 1.0
        tf = self.t_final if self.t_final is not None else 1e-3 * ti
        if not ti > tf > 0:
            raise SamplerConfigError(f"need t_initial > t_final > 0, got {ti}, {tf}")
        return ti, tf


@dataclass(frozen=True)
class SamplerConfig:
    num_samples: int = 10
    seed: int = 0
    sa: SAParams = field(default_factory=SAParams)

    def __post_init__(self):
        if self.num_samples < 1:
            raise SamplerConfigError("num_samples must be >= 1")
        if not 0 <= self.seed < 2**63:
            raise SamplerConfigError("seed must be a non-negative 64-bit integer")

    def with_seed(self, seed: int) -> "SamplerConfig":
        return replace(self, seed=seed)


@dataclass
class SampleBatch:
    topologies: list[np.ndarray]
    energies: list[float]
    wall_time_s: float = 0.0

    def __post_init__(self):
        if len(self.topologies) != len(self.energies):
            raise ValueError("topologies and energies differ in length")

    def __len__(self):
        return len(self.topologies)


class Sampler(Protocol):
    def __call__(self, q: QuboMatrix, cfg: SamplerConfig) -> SampleBatch: ...


@numba.njit(cache=True)
def _anneal_chain(q, seed, temperatures):
    np.random.seed(seed)
    m = q.shape[0]
    x = np.zeros(m, dtype=np.uint8)
    for i in range(m):
        if np.random.random() < 0.5:
            x[i] = 1
    # field[i] = sum_{j != i} q[i, j] x[j]
    fld = np.zeros(m)
    for i in range(m):
        s = 0.0
        for j in range(m):
            if j != i and x[j]:
                s += q[i, j]
        fld[i] = s
    energy = 0.0
    for i in range(m):
        if x[i]:
            energy += q[i, i] + fld[i]
    best = x.copy()
    best_energy = energy
    for t in temperatures:
        for i in range(m):
            delta = q[i, i] + 2.0 * fld[i]
            sign = 1.0
            if x[i]:
                delta = -delta
                sign = -1.0
            if delta <= 0.0 or np.random.random() < np.exp(-delta / t):
                x[i] = 1 - x[i]
                energy += delta
                for j in range(m):
                    if j != i:
                        fld[j] += sign * q[j, i]
                if energy < best_energy - 1e-12:
                    best_energy = energy
                    best[:] = x
    return best


def _temperatures(sa: SAParams, q: np.ndarray) -> np.ndarray:
    ti, tf = sa.schedule(q)
    if sa.sweeps == 1:
        return np.array([tf])
    return ti * (tf / ti) ** (np.arange(sa.sweeps) / (sa.sweeps - 1))


def sa_sample(q: QuboMatrix, cfg: SamplerConfig) -> SampleBatch:
    """Simulated annealing, one independent chain per restart.

    Sample ``s`` is the best state over chains ``s*r .. s*r + r - 1`` where
    ``r = restarts_per_sample``; chain ``c`` is seeded with ``cfg.seed + c``.
    Energies are recomputed against ``q`` from the returned states.
    """
    if q.dim < 1:
        raise ValueError("cannot sample an empty QUBO")
    start = time.perf_counter()
    mat = np.ascontiguousarray(q.q)
    temps = _temperatures(cfg.sa, mat)
    restarts = cfg.sa.restarts_per_sample
    topologies, energies = [], []
    for s in range(cfg.num_samples):
        best_x, best_e = None, np.inf
        for r in range(restarts):
            chain_seed = (cfg.seed + s * restarts + r) % 2**32
            x = _anneal_chain(mat, chain_seed, temps)
            e = evaluate_objective(x, q)
            if e < best_e:
                best_x, best_e = x, e
        topologies.append(best_x)
        energies.append(best_e)
    return SampleBatch(topologies, energies, time.perf_counter() - start)


class BruteForceResult(NamedTuple):
    topology: np.ndarray
    energy: float
    spectrum: np.ndarray | None


def _state_bits(states: np.ndarray, dim: int) -> np.ndarray:
    return ((states[:, None] >> np.arange(dim)) & 1).astype(np.uint8)


def enumerate_energies(q: QuboMatrix, chunk: int = 1 << 16) -> np.ndarray:
    """Energy of every state, indexed by the little-endian integer value of x."""
    dim = q.dim
    if dim > MAX_BRUTE_FORCE_DIM:
        raise ProblemTooLargeError(
            f"exhaustive search limited to {MAX_BRUTE_FORCE_DIM} variables, got {dim}"
        )
    total = 1 << dim
    out = np.empty(total)
    for lo in range(0, total, chunk):
        states = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        bits = _state_bits(states, dim).astype(float)
        out[lo : lo + len(states)] = np.einsum("si,ij,sj->s", bits, q.q, bits, optimize=True)
    return out


def brute_force(q: QuboMatrix, return_spectrum: bool = False) -> BruteForceResult:
    """Exact minimum by enumeration; ties go to the lowest little-endian value."""
    energies = enumerate_energies(q)
    best = int(np.argmin(energies))
    x = _state_bits(np.array([best]), q.dim)[0]
    return BruteForceResult(x, evaluate_objective(x, q), energies if return_spectrum else None)


def brute_force_sample(q: QuboMatrix, cfg: SamplerConfig) -> SampleBatch:
    """The ``k`` lowest-energy states in ascending energy order (exact)."""
    start = time.perf_counter()
    energies = enumerate_energies(q)
    k = min(cfg.num_samples, energies.size)
    order = np.argsort(energies, kind="stable")[:k]
    topologies = list(_state_bits(order.astype(np.int64), q.dim))
    return SampleBatch(
        topologies, [evaluate_objective(x, q) for x in topologies], time.perf_counter() - start
    )


def solve_qubo(q: QuboMatrix, cfg: SamplerConfig | None = None) -> tuple[np.ndarray, float]:
    """Best single state. Separable (diagonal) problems are solved exactly."""
    off = q.q - np.diag(np.diag(q.q))
    if not np.any(off):
        x = (np.diag(q.q) < 0).astype(np.uint8)
        return x, evaluate_objective(x, q)
    if q.dim <= 12:
        res = brute_force(q)
        return res.topology, res.energy
    cfg = cfg or SamplerConfig(num_samples=1)
    batch = sa_sample(q, cfg)
    i = int(np.argmin(batch.energies))
    return batch.topologies[i], batch.energies[i]
