from pathlib import Path

import pytest

from splitswitch.dsl import load_network, parse_network

ROOT = Path(__file__).resolve().parents[1]
EXPERIMENTS = ROOT / "experiments"


@pytest.fixture(scope="session")
def dw():
    return load_network(EXPERIMENTS / "dw.crn")


@pytest.fixture(scope="session")
def moran_pair():
    return parse_network("A + B -> 2A @ 1\nA + B -> 2B @ 1")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
