import pytest

from fedmarket.clients import ClientState
from fedmarket.config import load_config
from fedmarket.mechanism import MechanismConfig

REFERENCE_VALUATIONS = (0.1, 0.5, 0.6)
REFERENCE_SHARES = (0.5, 0.4, 0.1)
REFERENCE_GRID = (0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0)


def reference_clients():
    return [ClientState(v, s) for v, s in zip(REFERENCE_VALUATIONS, REFERENCE_SHARES)]


@pytest.fixture
def reference_scenario():
    return reference_clients()


@pytest.fixture
def reference_config():
    return MechanismConfig(num_clients=3, num_rounds=6, rng_seed=0)


@pytest.fixture
def bundled_config():
    return load_config("paper_mnist_like")


# (criterion number, title, passed, detail) rows filled in by test_acceptance
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}: {detail}")
