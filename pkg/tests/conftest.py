import os

import pytest
from hypothesis import HealthCheck, settings

from congestion_ap.pressure import PressureLaw

settings.register_profile(
    "default",
    max_examples=int(os.environ.get("HYPOTHESIS_MAX_EXAMPLES", "60")),
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def law():
    """gamma = 2, rho_star = 1, epsilon = 1e-4 (so delta = 0.1)."""
    return PressureLaw(gamma=2.0, rho_star=1.0, epsilon=1e-4)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    The line is printed immediately and repeated in the terminal summary, so it
    shows up whether or not output capture is enabled.
    """
    def record(number, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        print(line)
        request.config.stash[_ACCEPTANCE].append((number, line))
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines, key=lambda t: t[0]):
            terminalreporter.write_line(line)
