import math

import pytest

from raptrain import ContinuousPulse, comb_train, digitize_matched, propagate_continuous, propagate_train


@pytest.fixture(scope="session")
def strong_chirp_pulse():
    return ContinuousPulse.from_area(5 * math.pi, chirp=291.6)


@pytest.fixture(scope="session")
def strong_chirp_train(strong_chirp_pulse):
    return digitize_matched(strong_chirp_pulse, 100, 100)


@pytest.fixture(scope="session")
def strong_chirp_runs(strong_chirp_pulse, strong_chirp_train):
    return propagate_continuous(strong_chirp_pulse), propagate_train(strong_chirp_train)


@pytest.fixture(scope="session")
def comb():
    return comb_train(100, 100)


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
