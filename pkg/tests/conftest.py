import numpy as np
import pytest

from gpsdec.codes import bch_build


@pytest.fixture(scope="session")
def bch7():
    return bch_build(7, 4)


@pytest.fixture(scope="session")
def bch31():
    return bch_build(31, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
