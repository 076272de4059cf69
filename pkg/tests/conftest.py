import time

import pytest
from hypothesis import HealthCheck, settings

from gcflow.flow import FlowConfig, run

settings.register_profile("default", deadline=None, max_examples=30, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = {}


def record_acceptance(number, passed, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"


@pytest.fixture
def acceptance():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


class TimedRun:
    def __init__(self, config):
        self.config = config
        start = time.perf_counter()
        self.result = run(config)
        self.elapsed = time.perf_counter() - start


@pytest.fixture(scope="session")
def flow_n1():
    """Perturbed circle, alpha = 3/2, fixed volume, until lambda ratio - 1 < 1e-6."""
    return TimedRun(FlowConfig(n=1, alpha=1.5, resolution=256, init="perturbed",
                               ratio_tol=1e-6, max_steps=200000, cadence=2000))


@pytest.fixture(scope="session")
def flow_n2():
    """Ellipsoid (1.3, 1, 0.8), alpha = 1, 48x96, until lambda ratio - 1 < 1e-2."""
    return TimedRun(FlowConfig(n=2, alpha=1.0, resolution=(48, 96), init="ellipsoid",
                               axes=(1.3, 1.0, 0.8), ratio_tol=1e-2, max_steps=200000,
                               cadence=200))
