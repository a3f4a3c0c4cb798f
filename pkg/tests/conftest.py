import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from finsler_lab import catalog as cat
from finsler_lab import runner

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def entries():
    return cat.load_catalog()


@pytest.fixture(scope="session")
def metric_entries(entries):
    return {k: e for k, e in entries.items() if e.kind == "metric"}


def sample_points(entry, count, seed=0, n=3):
    """Admissible (metric, x, y, us) tuples drawn the same way the runner draws them."""
    m = runner.make_metric(entry, n)
    return m, [runner.sample_metric_point(entry, m, g) for g in runner.sample_generators(seed, count)]


def rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
