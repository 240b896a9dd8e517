import numpy as np
import pytest

from lagonn.instances import load_bundled


@pytest.fixture(scope="session")
def u20_01():
    return load_bundled("u20-01")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
