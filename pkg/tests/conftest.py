import sys
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from swarmtopo.netmodel import CapacityTable, LinkIndex, NetworkSnapshot

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def unit_caps(index: LinkIndex) -> CapacityTable:
    m = index.num_links
    return CapacityTable(cap=np.ones(m), snr=np.full(m, 2.0))


@pytest.fixture
def triangle_index():
    return LinkIndex(3, [(0, 1), (0, 2), (1, 2)])


@pytest.fixture
def triangle_snapshot():
    return NetworkSnapshot([[0, 0, 100], [100, 0, 100], [50, 80, 100]])


def star_index(leaves: int = 3) -> LinkIndex:
    return LinkIndex(leaves + 1, [(0, k) for k in range(1, leaves + 1)])


def random_snapshot(rng: np.random.Generator, n: int, **radio) -> NetworkSnapshot:
    return NetworkSnapshot(rng.uniform(0, 500, size=(n, 3)), **radio)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
