import numpy as np
import pytest

from chfs_lab import Rng


@pytest.fixture
def rng():
    return Rng(20261019)


def random_dm(n, rng, rank=None):
    d = 1 << n
    rank = rank or d
    g = rng.complex_normal((d, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
