import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mlshe.noise import GridSpec

settings.register_profile(
    "mlshe", max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("mlshe")


@pytest.fixture
def small_grid():
    return GridSpec.from_spacing(-3.0, 3.0, 0.1, 0.25, 0.0025)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    from mlshe.acceptance import format_line

    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(format_line(mod.RESULTS[k]))
