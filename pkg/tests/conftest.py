from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hetfx import from_arrays

settings.register_profile("hetfx", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("hetfx")


def pytest_collection_modifyitems(config, items):
    # the Monte Carlo acceptance runs go last so quick failures surface first
    items.sort(key=lambda it: "slow" in it.keywords)


@pytest.fixture
def six_rows():
    """Single covariate cell; cell means 2 and 5, propensities 1/3 and 2/3."""
    y = [1, 2, 3, 4, 5, 6]
    d = [0, 0, 1, 0, 1, 1]
    z = [0, 0, 0, 1, 1, 1]
    return from_arrays(y, d, z, np.ones((6, 1)), ("discrete",))


@pytest.fixture
def four_cont():
    return from_arrays([1.0, 2.5, 1.5, 3.0], [0, 1, 0, 1], [0, 1, 0, 1],
                       np.array([[0.1], [0.4], [0.6], [0.9]]), ("continuous",))


@pytest.fixture
def six_cont():
    return from_arrays([1.0, 2.6, 1.4, 2.0, 1.9, 3.3], [0, 1, 0, 0, 0, 1], [0, 1, 0, 1, 0, 1],
                       np.array([[0.1], [0.3], [0.45], [0.6], [0.8], [0.95]]), ("continuous",))


def small_discrete(seed: int = 0, n: int = 300, gamma: float = 0.0):
    from hetfx import DgpSpec, gen_dgp
    return gen_dgp(DgpSpec(2 if gamma else 1, n, 0.7, gamma, 0.5, seed))


def small_continuous(seed: int = 0, n: int = 200, gamma: float = 0.0):
    from hetfx import DgpSpec, gen_dgp
    return gen_dgp(DgpSpec(4 if gamma else 3, n, 0.7, gamma, 0.5, seed))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
