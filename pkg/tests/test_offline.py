import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swarmtopo.metrics import diversity, gen_scenario
from swarmtopo.netmodel import build_link_index, compute_capacities
from swarmtopo.offline import (
    Candidate,
    CandidateSet,
    DiversityConfig,
    default_lambda,
    generate_candidates,
    select_portfolio,
)
from swarmtopo.qubo import ObjectiveParams, QuboMatrix, build_qubo, link_frequencies
from swarmtopo.samplers import SampleBatch, SamplerConfig, SAParams, brute_force_sample, sa_sample


@pytest.fixture(scope="module")
def ref_q():
    snap, _ = gen_scenario("I2", 10, 0)
    index = build_link_index(snap)
    return build_qubo(snap, index, compute_capacities(snap, index), ObjectiveParams())


SCFG = SamplerConfig(num_samples=10, seed=5, sa=SAParams(sweeps=100))


def test_single_round_without_penalty_equals_one_call(ref_q):
    cset = generate_candidates(ref_q, sa_sample, DiversityConfig(1, 10, 0.0, dedupe=False), SCFG)
    batch = sa_sample(ref_q, SCFG)
    assert [c.topology.tolist() for c in cset] == [x.tolist() for x in batch.topologies]
    assert [c.objective for c in cset] == batch.energies


def test_set_size_before_dedupe(ref_q):
    cset = generate_candidates(ref_q, sa_sample, DiversityConfig(3, 10, dedupe=False), SCFG)
    assert len(cset) == 30
    assert [c.round for c in cset] == [r for r in range(3) for _ in range(10)]
    deduped = generate_candidates(ref_q, sa_sample, DiversityConfig(3, 10), SCFG)
    assert len({c.topology.tobytes() for c in deduped}) == len(deduped) <= 30


def test_penalty_replays_recorded_samples(ref_q):
    dcfg = DiversityConfig(4, 6, lam=0.7, dedupe=False)
    cset = generate_candidates(ref_q, sa_sample, dcfg, SamplerConfig(6, 2, SAParams(sweeps=60)))
    expected = np.zeros(ref_q.dim)
    for r in range(4):
        expected += 0.7 * link_frequencies([c.topology for c in cset if c.round == r])
    np.testing.assert_allclose(cset.penalty, expected, rtol=1e-12)
    assert not np.any(ref_q.penalty_accum)


def test_candidates_scored_against_base(ref_q):
    from swarmtopo.qubo import evaluate_base

    cset = generate_candidates(ref_q, sa_sample, DiversityConfig(2, 5), SamplerConfig(5, 0, SAParams(sweeps=60)))
    for c in cset:
        assert c.objective == evaluate_base(c.topology, ref_q)


def test_second_round_avoids_penalised_link():
    # two links, each alone worth -1, together +1: two degenerate optima
    q0 = QuboMatrix(np.array([[-1.0, 1.5], [1.5, -1.0]]))
    # brute force returns (1,0) first on ties; penalty 2 makes it unprofitable
    dcfg = DiversityConfig(rounds=2, samples_per_round=1, lam=2.0, dedupe=False)
    cset = generate_candidates(q0, brute_force_sample, dcfg, SamplerConfig(num_samples=1))
    assert cset[0].topology.tolist() == [1, 0]
    assert cset[1].topology.tolist() == [0, 1]


def test_penalised_start_rejected(ref_q):
    q = ref_q.copy()
    q.penalty_accum[0] = 1.0
    with pytest.raises(ValueError):
        generate_candidates(q, sa_sample)


def test_sampler_failure_leaves_no_result(ref_q):
    calls = []

    def flaky(q, cfg):
        calls.append(1)
        if len(calls) == 2:
            raise RuntimeError("annealer down")
        return sa_sample(q, cfg)

    with pytest.raises(RuntimeError):
        generate_candidates(ref_q, flaky, DiversityConfig(3, 2), SamplerConfig(2, 0, SAParams(sweeps=20)))

    def short(q, cfg):
        return SampleBatch([np.zeros(q.dim, np.uint8)], [0.0])

    with pytest.raises(RuntimeError, match="expected 2"):
        generate_candidates(ref_q, short, DiversityConfig(1, 2), SamplerConfig(2))


def test_default_lambda(ref_q):
    assert default_lambda(ref_q) == pytest.approx(0.5 * np.mean(np.abs(np.diag(ref_q.base))))


def _cset(vectors, objectives=None):
    objectives = objectives or [0.0] * len(vectors)
    return CandidateSet([Candidate(np.array(v, np.uint8), o, 0, i)
                         for i, (v, o) in enumerate(zip(vectors, objectives))])


def test_portfolio_duplicates_and_size():
    x, y = [1, 0, 0, 0], [0, 1, 1, 0]
    port = select_portfolio(_cset([x, x, y], [-1.0, -1.0, 0.0]), 2)
    assert [c.topology.tolist() for c in port] == [x, y]
    assert len(select_portfolio(_cset([x, x, y]), 10)) == 2
    with pytest.raises(ValueError):
        select_portfolio(_cset([]), 2)


def test_portfolio_greedy_farthest():
    # 10 bits; distances a-b 0.1, a-c 0.5, b-c 0.6
    a = [0] * 10
    b = [1] + [0] * 9
    c = [0] * 5 + [1] * 5
    c[0] = 0
    b_c = sum(u != v for u, v in zip(b, c)) / 10
    assert b_c == pytest.approx(0.6)
    port = select_portfolio(_cset([b, a, c], [-1.0, -2.0, -0.5]), 2)
    assert [p.topology.tolist() for p in port] == [a, c]


def test_candidate_set_json_roundtrip():
    cset = _cset([[1, 0, 1], [0, 1, 1]], [-1.5, -2.0])
    cset.snapshot_id = "abc"
    back = CandidateSet.from_dict(cset.to_dict())
    assert back.snapshot_id == "abc"
    assert [c.topology.tolist() for c in back] == [[1, 0, 1], [0, 1, 1]]
    assert [c.objective for c in back] == [-1.5, -2.0]
    with pytest.raises(ValueError):
        CandidateSet.from_dict({"candidates": [{"bits": [1], "objective": 0}, {"bits": [1, 0], "objective": 0}]})


@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_portfolio_properties(seed, size):
    rng = np.random.default_rng(seed)
    vecs = rng.integers(0, 2, size=(15, 8))
    # identical topologies must carry identical objectives
    objs = list(vecs @ rng.normal(size=8))
    port = select_portfolio(_cset(vecs.tolist(), objs), size)
    keys = [c.topology.tobytes() for c in port]
    assert len(keys) == len(set(keys)) == min(size, len({v.tobytes() for v in vecs.astype(np.uint8)}))
    assert port[0].objective == min(objs)


def test_penalty_raises_diversity_on_reference(ref_q):
    wins = 0
    for s in range(20):
        scfg = SamplerConfig(10, s, SAParams(sweeps=100))
        pen = generate_candidates(ref_q, sa_sample, DiversityConfig(3, 10, dedupe=False), scfg)
        base = generate_candidates(ref_q, sa_sample, DiversityConfig(3, 10, 0.0, dedupe=False), scfg)
        wins += diversity(pen.topologies) > diversity(base.topologies)
    assert wins > 10
