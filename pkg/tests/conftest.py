import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_timelike_vectors(rng, count, dim=1):
    """Future-directed vectors with ``dt > |dx|`` and a spread of rapidities."""
    direction = rng.standard_normal((count, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    speed = rng.uniform(0.0, 0.95, count)
    dt = rng.uniform(0.1, 5.0, count)
    return np.c_[dt, (dt * speed)[:, None] * direction]


def pytest_configure(config):
    config.criteria_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "criteria_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion and fail on any broken check."""

    def report(number, title, checks):
        ok = all(passed for _, passed, _ in checks)
        detail = "; ".join(f"{name}={value}" for name, _, value in checks)
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})"
        request.config.criteria_lines.append(line)
        print(line)
        broken = [name for name, passed, _ in checks if not passed]
        assert not broken, f"criterion {number} failed checks: {broken}"

    return report
