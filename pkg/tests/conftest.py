import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from projbar.barriers import box, interval, simplex

settings.register_profile(
    "projbar", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("projbar")


@pytest.fixture
def unit_interval():
    return interval()


@pytest.fixture
def sym_interval():
    return interval(-1.0, 1.0)


@pytest.fixture
def triangle():
    return simplex(2)


@pytest.fixture
def square():
    return box(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
