"""Online stage: utility scoring and guarded topology switching."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .netmodel import LinkIndex


@dataclass(frozen=True)
class UtilityWeights:
    w_perf: float = 1.0
    w_life: float = 0.01

    def __post_init__(self):
        if self.w_perf < 0 or self.w_life < 0:
            raise ValueError("utility weights must be non-negative")
        if self.w_perf == 0 and self.w_life == 0:
            raise ValueError("utility weights cannot both be zero")


@dataclass(frozen=True)
class LinkStateSample:
    """Measurements available to the swarm at time ``time_s``."""

    time_s: float
    sinr_linear: np.ndarray
    energy_j: np.ndarray
    outage_mask: np.ndarray

    def __post_init__(self):
        sinr = np.asarray(self.sinr_linear, dtype=float)
        energy = np.asarray(self.energy_j, dtype=float)
        outage = np.asarray(self.outage_mask, dtype=bool)
        if np.any(sinr < 0) or np.any(energy < 0):
            raise ValueError("SINR and energy must be non-negative")
        if outage.shape != sinr.shape:
            raise ValueError("outage mask and SINR vector differ in length")
        object.__setattr__(self, "sinr_linear", sinr)
        object.__setattr__(self, "energy_j", energy)
        object.__setattr__(self, "outage_mask", outage)


@dataclass(frozen=True)
class SwitchPolicy:
    """Switching guards.

    ``switch_outage_steps`` is the reconfiguration blackout after a switch,
    in simulation steps. Whole steps carry no traffic; a fractional part
    scales that step's throughput by ``1 - fraction``.
    """

    hysteresis_margin: float = 0.05
    min_dwell_s: float = 3.0
    switch_outage_steps: float = 0.1

    def __post_init__(self):
        if self.hysteresis_margin < 0 or self.min_dwell_s < 0 or self.switch_outage_steps < 0:
            raise ValueError("switch policy parameters must be non-negative")


NO_GUARD = SwitchPolicy(0.0, 0.0, 0.0)


def utility_score(
    candidate: np.ndarray,
    state: LinkStateSample,
    weights: UtilityWeights,
    index: LinkIndex,
) -> float:
    """``w_perf * sum log2(1 + sinr)`` over usable active links plus
    ``w_life * min energy`` over nodes touched by an active link.

    Links in outage add nothing to the first term. With no active links the
    energy minimum is taken over all nodes.
    """
    x = np.asarray(candidate).astype(bool)
    if x.shape != state.sinr_linear.shape or x.shape[0] != index.num_links:
        raise ValueError("candidate, link state and index dimensions disagree")
    usable = x & ~state.outage_mask
    perf = float(np.sum(np.log2(1.0 + state.sinr_linear[usable])))
    if x.any():
        nodes = np.unique(index.pairs[x].ravel())
        life = float(state.energy_j[nodes].min())
    else:
        life = float(state.energy_j.min())
    return weights.w_perf * perf + weights.w_life * life


def score_candidates(
    candidates: Sequence[np.ndarray], state: LinkStateSample, weights: UtilityWeights,
    index: LinkIndex,
) -> np.ndarray:
    return np.array([utility_score(c, state, weights, index) for c in candidates])


def select_topology(
    candidates: Sequence[np.ndarray],
    state: LinkStateSample,
    weights: UtilityWeights,
    current: int,
    time_since_switch_s: float,
    policy: SwitchPolicy,
    index: LinkIndex,
) -> tuple[int, bool]:
    """Return ``(selected index, switched)`` for one decision epoch."""
    if len(candidates) == 0:
        raise ValueError("empty candidate set")
    if not 0 <= current < len(candidates):
        raise IndexError(f"current index {current} out of range")
    scores = score_candidates(candidates, state, weights, index)
    best = int(np.argmax(scores))  # first maximum -> lowest index
    return _apply_policy(scores, best, current, time_since_switch_s, policy)


def _apply_policy(scores, best, current, time_since_switch_s, policy):
    if best == current or time_since_switch_s < policy.min_dwell_s:
        return current, False
    s_cur, s_best = scores[current], scores[best]
    if s_cur > 0:
        ok = s_best >= (1.0 + policy.hysteresis_margin) * s_cur
    else:
        ok = s_best > s_cur
    if ok:
        return best, True
    return current, False
