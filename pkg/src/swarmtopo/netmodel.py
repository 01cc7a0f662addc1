"""Network graph, link indexing and channel capacities.

A snapshot holds UAV positions plus the radio parameters needed to turn
distances into link capacities. The :class:`LinkIndex` fixes the order of
the binary decision variables (one per candidate link) used everywhere else.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MIN_DISTANCE_M = 1.0
# 20*log10(4*pi/c) in dB, with d in metres and f in Hz
FSPL_CONSTANT_DB = -147.55


class InvalidSnapshotError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkSnapshot:
    """UAV positions (metres) and radio parameters at one instant.

    ``bandwidth_hz`` defaults to 1.0, i.e. capacities are reported as
    spectral efficiency (bit/s/Hz). This keeps the fragility weight on the
    same scale as the throughput term.
    """

    node_positions: np.ndarray
    tx_power_dbm: float = 20.0
    bandwidth_hz: float = 1.0
    noise_dbm: float = -90.0
    carrier_freq_hz: float = 2.4e9
    capacity_gap: float = 2.0
    max_range_m: float | None = None

    def __post_init__(self):
        pos = np.array(self.node_positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise InvalidSnapshotError(f"node_positions must be (N, 3), got {pos.shape}")
        if pos.shape[0] < 2:
            raise InvalidSnapshotError(f"need at least 2 nodes, got {pos.shape[0]}")
        if not np.all(np.isfinite(pos)):
            raise InvalidSnapshotError("node positions must be finite")
        if not self.bandwidth_hz > 0:
            raise InvalidSnapshotError("bandwidth_hz must be positive")
        if not self.capacity_gap >= 1:
            raise InvalidSnapshotError("capacity_gap must be >= 1")
        if self.max_range_m is not None and not self.max_range_m > 0:
            raise InvalidSnapshotError("max_range_m must be positive when set")
        pos.setflags(write=False)
        object.__setattr__(self, "node_positions", pos)

    @property
    def num_nodes(self) -> int:
        return self.node_positions.shape[0]

    def with_positions(self, positions: np.ndarray) -> "NetworkSnapshot":
        return NetworkSnapshot(
            positions,
            tx_power_dbm=self.tx_power_dbm,
            bandwidth_hz=self.bandwidth_hz,
            noise_dbm=self.noise_dbm,
            carrier_freq_hz=self.carrier_freq_hz,
            capacity_gap=self.capacity_gap,
            max_range_m=self.max_range_m,
        )

    def radio_dict(self) -> dict:
        return {
            "tx_power_dbm": self.tx_power_dbm,
            "bandwidth_hz": self.bandwidth_hz,
            "noise_dbm": self.noise_dbm,
            "carrier_freq_hz": self.carrier_freq_hz,
            "capacity_gap": self.capacity_gap,
            "max_range_m": self.max_range_m,
        }

    def to_dict(self) -> dict:
        return {"nodes": self.node_positions.tolist(), "radio": self.radio_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkSnapshot":
        if "nodes" not in data:
            raise InvalidSnapshotError("snapshot JSON lacks 'nodes'")
        radio = dict(data.get("radio", {}))
        allowed = set(cls.__dataclass_fields__) - {"node_positions"}
        unknown = set(radio) - allowed
        if unknown:
            raise InvalidSnapshotError(f"unknown radio fields: {sorted(unknown)}")
        return cls(np.asarray(data["nodes"], dtype=float), **radio)

    @property
    def snapshot_id(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class LinkIndex:
    """Ordered candidate links ``(i, j)`` with ``i < j``."""

    num_nodes: int
    pairs: np.ndarray  # (M, 2) int
    _lookup: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        if np.any(pairs[:, 0] >= pairs[:, 1]):
            raise ValueError("pairs must satisfy i < j")
        if pairs.size and (pairs.min() < 0 or pairs.max() >= self.num_nodes):
            raise ValueError("pair references a node out of range")
        lookup = {(int(i), int(j)): e for e, (i, j) in enumerate(pairs)}
        if len(lookup) != len(pairs):
            raise ValueError("duplicate pairs in link index")
        pairs.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "_lookup", lookup)

    @property
    def num_links(self) -> int:
        return self.pairs.shape[0]

    def __len__(self) -> int:
        return self.num_links

    def id(self, pair: Sequence[int]) -> int:
        i, j = int(pair[0]), int(pair[1])
        if i > j:
            i, j = j, i
        try:
            return self._lookup[(i, j)]
        except KeyError:
            raise KeyError(f"link {(i, j)} not in index") from None

    def pair(self, edge: int) -> tuple[int, int]:
        i, j = self.pairs[edge]
        return int(i), int(j)

    def incidence(self) -> np.ndarray:
        """Dense (N, M) node-link incidence matrix."""
        inc = np.zeros((self.num_nodes, self.num_links))
        cols = np.arange(self.num_links)
        inc[self.pairs[:, 0], cols] = 1.0
        inc[self.pairs[:, 1], cols] = 1.0
        return inc

    def incident_links(self, node: int) -> np.ndarray:
        return np.flatnonzero((self.pairs[:, 0] == node) | (self.pairs[:, 1] == node))


@dataclass(frozen=True)
class CapacityTable:
    cap: np.ndarray
    snr: np.ndarray


def pairwise_distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def build_link_index(snapshot: NetworkSnapshot) -> LinkIndex:
    n = snapshot.num_nodes
    if n < 2:
        raise InvalidSnapshotError("need at least 2 nodes")
    ii, jj = np.triu_indices(n, k=1)
    if snapshot.max_range_m is not None:
        dist = pairwise_distances(snapshot.node_positions)[ii, jj]
        keep = dist <= snapshot.max_range_m
        ii, jj = ii[keep], jj[keep]
    return LinkIndex(n, np.column_stack([ii, jj]))


def fspl_db(distance_m, freq_hz: float):
    d = np.maximum(np.asarray(distance_m, dtype=float), MIN_DISTANCE_M)
    return 20.0 * np.log10(d) + 20.0 * np.log10(freq_hz) + FSPL_CONSTANT_DB


def link_distances(positions: np.ndarray, index: LinkIndex) -> np.ndarray:
    diff = positions[index.pairs[:, 0]] - positions[index.pairs[:, 1]]
    return np.sqrt(np.sum(diff * diff, axis=1))


def snr_db(snapshot: NetworkSnapshot, distance_m) -> np.ndarray:
    return snapshot.tx_power_dbm - fspl_db(distance_m, snapshot.carrier_freq_hz) - snapshot.noise_dbm


def shannon_capacity(snr_linear, bandwidth_hz: float, gap: float):
    return bandwidth_hz * np.log2(1.0 + np.asarray(snr_linear) / gap)


def compute_capacities(snapshot: NetworkSnapshot, index: LinkIndex) -> CapacityTable:
    dist = link_distances(snapshot.node_positions, index)
    snr = 10.0 ** (snr_db(snapshot, dist) / 10.0)
    cap = shannon_capacity(snr, snapshot.bandwidth_hz, snapshot.capacity_gap)
    return CapacityTable(cap=cap, snr=snr)


def as_topology(bits: Iterable, num_links: int | None = None) -> np.ndarray:
    """Validate and normalise a link-activation vector to a uint8 array."""
    x = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
    if x.ndim != 1:
        raise ValueError("topology must be a 1-D vector")
    if num_links is not None and x.shape[0] != num_links:
        raise ValueError(f"topology length {x.shape[0]} != {num_links} links")
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("topology entries must be 0 or 1")
    return x.astype(np.uint8)


def node_loads(topology: np.ndarray, caps: CapacityTable, index: LinkIndex) -> np.ndarray:
    """Capacity-weighted load of every node; each active link counts at both ends."""
    flow = caps.cap * np.asarray(topology, dtype=float)
    loads = np.zeros(index.num_nodes)
    np.add.at(loads, index.pairs[:, 0], flow)
    np.add.at(loads, index.pairs[:, 1], flow)
    return loads


def node_load(topology: np.ndarray, caps: CapacityTable, index: LinkIndex, node: int) -> float:
    if not 0 <= node < index.num_nodes:
        raise IndexError(f"node {node} out of range [0, {index.num_nodes})")
    if len(topology) != index.num_links or len(caps.cap) != index.num_links:
        raise ValueError("topology / capacity / index dimensions disagree")
    return float(node_loads(topology, caps, index)[node])


def active_degrees(topology: np.ndarray, index: LinkIndex) -> np.ndarray:
    x = np.asarray(topology, dtype=np.int64)
    deg = np.zeros(index.num_nodes, dtype=np.int64)
    np.add.at(deg, index.pairs[:, 0], x)
    np.add.at(deg, index.pairs[:, 1], x)
    return deg
