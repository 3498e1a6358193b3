import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ffxnls.dataset import from_arrays

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def log_data():
    """200 noiseless rows of y = 3 log(x + 2) + 1.5."""
    x = np.linspace(-1.5, 5.0, 200)
    return from_arrays(x, 3 * np.log(x + 2) + 1.5)
