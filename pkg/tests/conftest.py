import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from greenlab import green, grid

settings.register_profile("greenlab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("greenlab")


@pytest.fixture(autouse=True)
def _fresh_cache():
    green.clear_cache()
    yield
    green.clear_cache()


@pytest.fixture
def unit_grid():
    return grid.build_grid((0.0, 1.0), 8)


@pytest.fixture
def cube16():
    return grid.full_box(grid.build_grid((-1.0, 1.0), 16))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
