"""QUBO construction for the throughput / fragility objective.

Objective convention: ``E(x) = x @ q @ x`` with ``q`` symmetric, so an
off-diagonal coefficient ``q[e, f]`` is counted twice. For capacities ``c``
and the node-link incidence matrix ``A`` this gives

    q = -alpha * diag(c) + beta * (c c^T) * (A^T A)

where ``(A^T A)[e, f]`` is the number of nodes shared by links ``e`` and
``f`` (2 on the diagonal).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netmodel import CapacityTable, LinkIndex, NetworkSnapshot, node_loads


@dataclass(frozen=True)
class ObjectiveParams:
    alpha: float = 1.0
    beta: float = 0.01

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.alpha == 0 and self.beta == 0:
            raise ValueError("alpha and beta cannot both be zero")


class QuboMatrix:
    """Symmetric QUBO matrix with an accumulated diagonal penalty.

    ``q`` is always ``base + diag(penalty_accum)``. ``base`` is never
    modified after construction.
    """

    def __init__(self, base: np.ndarray, penalty_accum: np.ndarray | None = None):
        base = np.array(base, dtype=float)
        if base.ndim != 2 or base.shape[0] != base.shape[1]:
            raise ValueError(f"QUBO matrix must be square, got {base.shape}")
        if not np.allclose(base, base.T, rtol=0, atol=1e-12):
            raise ValueError("QUBO matrix must be symmetric")
        base = 0.5 * (base + base.T)
        base.setflags(write=False)
        self.base = base
        dim = base.shape[0]
        self.penalty_accum = (
            np.zeros(dim) if penalty_accum is None else np.array(penalty_accum, dtype=float)
        )
        if self.penalty_accum.shape != (dim,):
            raise ValueError("penalty vector must match matrix dimension")
        self.q = base.copy()
        self.q[np.diag_indices(dim)] += self.penalty_accum

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    def copy(self) -> "QuboMatrix":
        return QuboMatrix(self.base, self.penalty_accum.copy())

    def without_penalty(self) -> "QuboMatrix":
        return QuboMatrix(self.base)

    def __repr__(self):
        return f"QuboMatrix(dim={self.dim}, penalty_total={self.penalty_accum.sum():.4g})"


def build_qubo(
    snapshot: NetworkSnapshot,
    index: LinkIndex,
    caps: CapacityTable,
    params: ObjectiveParams,
) -> QuboMatrix:
    m = index.num_links
    if index.num_nodes != snapshot.num_nodes:
        raise ValueError("link index was built for a different snapshot")
    if caps.cap.shape != (m,):
        raise ValueError(f"capacity table has {caps.cap.shape[0]} entries, index has {m} links")
    c = np.asarray(caps.cap, dtype=float)
    inc = index.incidence()
    shared = inc.T @ inc
    q = params.beta * np.outer(c, c) * shared
    q[np.diag_indices(m)] -= params.alpha * c
    return QuboMatrix(q)


def _check_dim(x: np.ndarray, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise ValueError(f"topology length {x.shape} does not match QUBO dimension {dim}")
    return x


def evaluate_objective(x: np.ndarray, q: QuboMatrix) -> float:
    x = _check_dim(x, q.dim)
    return float(x @ q.q @ x)


def evaluate_base(x: np.ndarray, q: QuboMatrix) -> float:
    """Objective under the un-penalised matrix."""
    x = _check_dim(x, q.dim)
    return float(x @ q.base @ x)


def evaluate_decomposed(
    x: np.ndarray, caps: CapacityTable, index: LinkIndex, params: ObjectiveParams
) -> tuple[float, float, float]:
    """Return ``(throughput, fragility, objective)`` evaluated link by link."""
    x = _check_dim(x, index.num_links)
    throughput = float(np.dot(caps.cap, x))
    loads = node_loads(x, caps, index)
    fragility = float(np.dot(loads, loads))
    return throughput, fragility, -params.alpha * throughput + params.beta * fragility


def link_frequencies(samples) -> np.ndarray:
    arr = np.asarray([np.asarray(s, dtype=float) for s in samples])
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("need a non-empty list of equal-length samples")
    return arr.mean(axis=0)


def apply_frequency_penalty(q: QuboMatrix, samples, lam: float) -> QuboMatrix:
    """Add ``lam * f_e`` to each diagonal entry, ``f_e`` being the share of
    ``samples`` in which link ``e`` is active. Mutates and returns ``q``.
    """
    if lam < 0:
        raise ValueError("penalty weight must be non-negative")
    if len(samples) == 0:
        raise ValueError("cannot compute link frequencies from an empty sample list")
    freq = link_frequencies(samples)
    if freq.shape != (q.dim,):
        raise ValueError("sample length does not match QUBO dimension")
    increment = lam * freq
    q.penalty_accum += increment
    q.q[np.diag_indices(q.dim)] += increment
    return q


def to_exchange(q: QuboMatrix) -> dict:
    """Diagonal and upper-triangular non-zeros as ``[e, f, coeff]`` rows."""
    rows, cols = np.nonzero(np.triu(q.q))
    entries = [[int(r), int(c), float(q.q[r, c])] for r, c in zip(rows, cols)]
    return {"dim": q.dim, "entries": entries}


def from_exchange(data: dict) -> QuboMatrix:
    dim = int(data["dim"])
    mat = np.zeros((dim, dim))
    for e, f, coeff in data["entries"]:
        e, f = int(e), int(f)
        if not (0 <= e < dim and 0 <= f < dim):
            raise ValueError(f"entry ({e}, {f}) outside a {dim}-variable QUBO")
        mat[e, f] = coeff
        mat[f, e] = coeff
    return QuboMatrix(mat)
