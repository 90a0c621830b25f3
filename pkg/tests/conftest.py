import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def system_reports():
    """check_system(name, 20 points, seed 0) per system, computed once per session."""
    from heavenly.bihamiltonian import check_system

    cache = {}

    def get(system):
        if system not in cache:
            cache[system] = check_system(system, points=20, seed=0)
        return cache[system]

    return get


@pytest.fixture(scope="session")
def fits(system_reports):
    """fit_H0 results per system, taken from the cached reports."""
    return lambda system: system_reports(system).data["fit"]


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {title}")
