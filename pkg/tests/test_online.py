import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swarmtopo.netmodel import LinkIndex
from swarmtopo.online import (
    NO_GUARD,
    LinkStateSample,
    SwitchPolicy,
    UtilityWeights,
    _apply_policy,
    score_candidates,
    select_topology,
    utility_score,
)

PATH = LinkIndex(3, [(0, 1), (1, 2), (0, 2)])


def state(sinr, energy=(100, 100, 100), outage=None):
    sinr = np.asarray(sinr, float)
    return LinkStateSample(0.0, sinr, np.asarray(energy, float),
                           np.zeros(sinr.size, bool) if outage is None else np.asarray(outage))


def test_performance_term():
    s = utility_score(np.array([1, 1, 0]), state([1, 3, 100]), UtilityWeights(1, 0), PATH)
    assert s == pytest.approx(3.0)


def test_lifetime_term_uses_incident_nodes():
    st_ = state([1, 1, 1], energy=(50, 80, 120))
    assert utility_score(np.array([1, 1, 0]), st_, UtilityWeights(0, 1), PATH) == 50
    st_ = state([1, 1, 1], energy=(120, 80, 50))
    # node 2 is not touched by link (0, 1)
    assert utility_score(np.array([1, 0, 0]), st_, UtilityWeights(0, 1), PATH) == 80


def test_outage_and_empty():
    st_ = state([1, 3, 7], outage=[True, True, True])
    assert utility_score(np.ones(3), st_, UtilityWeights(1, 0), PATH) == 0
    st_ = state([1, 3, 7], energy=(9, 4, 6))
    assert utility_score(np.zeros(3), st_, UtilityWeights(1, 1), PATH) == 4


def test_bad_inputs():
    with pytest.raises(ValueError):
        UtilityWeights(-1, 0)
    with pytest.raises(ValueError):
        UtilityWeights(0, 0)
    with pytest.raises(ValueError):
        state([-1, 0, 0])
    with pytest.raises(ValueError):
        utility_score(np.ones(2), state([1, 1, 1]), UtilityWeights(), PATH)
    with pytest.raises(ValueError):
        select_topology([], state([1, 1, 1]), UtilityWeights(), 0, 10, NO_GUARD, PATH)
    with pytest.raises(ValueError):
        SwitchPolicy(-0.1)


def test_hysteresis_arithmetic():
    policy = SwitchPolicy(0.05, 0.0, 0)
    assert _apply_policy(np.array([10.0, 10.4]), 1, 0, 99, policy) == (0, False)
    assert _apply_policy(np.array([10.0, 10.5]), 1, 0, 99, policy) == (1, True)
    # non-positive current score: any strict improvement switches
    assert _apply_policy(np.array([-1.0, -0.9]), 1, 0, 99, policy) == (1, True)


def test_dwell_gate():
    policy = SwitchPolicy(0.0, 3.0, 0)
    assert _apply_policy(np.array([1.0, 100.0]), 1, 0, 2.0, policy) == (0, False)
    assert _apply_policy(np.array([1.0, 100.0]), 1, 0, 3.0, policy) == (1, True)


def test_ties_go_to_lowest_index():
    cands = [np.array([1, 0, 0]), np.array([0, 1, 0]), np.array([0, 0, 1])]
    idx, switched = select_topology(cands, state([3, 3, 3]), UtilityWeights(1, 0), 2, 10, NO_GUARD, PATH)
    assert (idx, switched) == (0, True)


def _random_case(seed, k=5):
    rng = np.random.default_rng(seed)
    cands = [rng.integers(0, 2, 3) for _ in range(k)]
    st_ = state(rng.uniform(0, 50, 3), rng.uniform(0, 100, 3), rng.random(3) < 0.3)
    return rng, cands, st_


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_scale_invariance_of_argmax(seed, c):
    _, cands, st_ = _random_case(seed)
    w = UtilityWeights(1.0, 0.01)
    scaled = UtilityWeights(c * w.w_perf, c * w.w_life)
    a = select_topology(cands, st_, w, 0, 99, NO_GUARD, PATH)[0]
    b = select_topology(cands, st_, scaled, 0, 99, NO_GUARD, PATH)[0]
    sa, sb = score_candidates(cands, st_, w, PATH), score_candidates(cands, st_, scaled, PATH)
    assert sa[a] == sa.max() and sb[b] == sb.max()
    assert sa[b] == sa.max()


@given(st.integers(0, 2**32 - 1), st.integers(0, 4))
def test_unguarded_selection_is_argmax(seed, current):
    _, cands, st_ = _random_case(seed)
    idx, _ = select_topology(cands, st_, UtilityWeights(), current, 0.0, NO_GUARD, PATH)
    scores = score_candidates(cands, st_, UtilityWeights(), PATH)
    assert scores[idx] == scores.max()
    assert idx == current or not np.any(scores > scores[idx])


@given(st.integers(0, 2**32 - 1), st.floats(0, 100))
def test_raising_own_link_sinr_never_hurts(seed, boost):
    rng, _, st_ = _random_case(seed)
    a = np.array([1, 0, 0])
    w = UtilityWeights(1.0, 0.01)
    before = utility_score(a, st_, w, PATH)
    sinr = st_.sinr_linear.copy()
    sinr[0] += boost
    after = utility_score(a, LinkStateSample(0, sinr, st_.energy_j, st_.outage_mask), w, PATH)
    assert after >= before


@given(st.integers(0, 2**32 - 1), st.floats(0.5, 5))
def test_never_switches_twice_within_dwell(seed, dwell):
    rng = np.random.default_rng(seed)
    cands = [rng.integers(0, 2, 3) for _ in range(4)]
    policy = SwitchPolicy(0.0, dwell, 0)
    current, since, last_switch, dt = 0, 0.0, None, 0.5
    for step in range(60):
        st_ = state(rng.uniform(0, 50, 3), rng.uniform(10, 100, 3))
        current, switched = select_topology(cands, st_, UtilityWeights(), current, since, policy, PATH)
        t = step * dt
        if switched:
            assert last_switch is None or t - last_switch >= dwell - 1e-9
            last_switch, since = t, 0.0
        since += dt
