import numpy as np
import pytest

from swarmtopo.metrics import gen_scenario, throughput_optimal_topology
from swarmtopo.offline import DiversityConfig
from swarmtopo.pipeline import describe, pr_experiment, run_offline, throughput_band
from swarmtopo.samplers import SamplerConfig, SAParams, brute_force_sample
from swarmtopo.sim import ScenarioSpec


@pytest.fixture(scope="module")
def small():
    snap, _ = gen_scenario("I2", 6, 1)
    return snap


def test_brute_force_portfolio_holds_optimum(small):
    from swarmtopo.pipeline import build_problem
    from swarmtopo.samplers import brute_force

    res = run_offline(small, dcfg=DiversityConfig(3, 10), scfg=SamplerConfig(10), sampler=brute_force_sample)
    opt = brute_force(build_problem(small)).topology
    assert any(np.array_equal(c.topology, opt) for c in res.portfolio)
    assert res.portfolio[0].objective == pytest.approx(min(c.objective for c in res.candidates))


def test_paired_experiment_shapes(small):
    res = run_offline(small, scfg=SamplerConfig(10, 0, SAParams(sweeps=100)))
    exp = pr_experiment(ScenarioSpec(small, seed=5), res.portfolio.topologies, runs=4)
    assert exp.seeds == [5, 6, 7, 8]
    assert exp.pr_dynamic.n == 4
    diff = np.array([d.pr - s.pr for d, s in zip(exp.dynamic, exp.static)])
    assert exp.difference.mean == pytest.approx(diff.mean())
    summary = exp.summary()
    assert set(summary) >= {"pr_dynamic", "pr_static", "relative_improvement"}
    rows = throughput_band(exp.dynamic)
    assert len(rows) == 31 and rows[0][1:] == (1.0, 1.0, 1.0)


def test_frozen_single_run(small):
    base = throughput_optimal_topology(small)
    exp = pr_experiment(ScenarioSpec(small, disturbances=()).frozen(), [base], runs=1)
    assert exp.pr_dynamic.mean == exp.pr_static.mean == 1.0
    assert exp.pr_dynamic.to_dict()["ci_low"] is None


def test_parallel_matches_serial(small):
    res = run_offline(small, scfg=SamplerConfig(10, 0, SAParams(sweeps=100)))
    scen = ScenarioSpec(small, seed=2)
    a = pr_experiment(scen, res.portfolio.topologies, runs=3)
    b = pr_experiment(scen, res.portfolio.topologies, runs=3, jobs=2)
    assert [t.to_csv() for t in a.dynamic] == [t.to_csv() for t in b.dynamic]
    assert a.summary() == b.summary()


def test_describe_single():
    s = describe(np.array([0.5]))
    assert s.mean == 0.5 and s.n == 1
