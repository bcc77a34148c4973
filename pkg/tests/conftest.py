import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


GENERATORS = {
    "zero": np.zeros((2, 2)),
    "diag": np.diag([-1.0, -2.0]),
    "rot": np.array([[0.0, 1.0], [-1.0, 0.0]]),
}

ORDERS = (1.25, 1.5, 1.75)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results, key=int):
        terminalreporter.write_line(results[key])
