import numpy as np
import pytest

from cellular_ia.channels import AntennaConfig, sample_channels
from cellular_ia.topology import InterferenceGraph, orient, total_order

ACCEPTANCE_RESULTS = []


@pytest.fixture
def cycle3():
    return InterferenceGraph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def cycle3_system(cycle3):
    """Uplink channels (M = N = 2, seed 7), order 0 < 1 < 2 and its orientation."""
    ch = sample_channels(cycle3, AntennaConfig(2, 2), seed=7)
    pi = total_order([0, 1, 2])
    return ch, pi, orient(cycle3, pi)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
