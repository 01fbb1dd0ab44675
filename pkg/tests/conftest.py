import numpy as np
import pytest

from causality_kit.choi import PartySpec


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def qubits(names):
    return tuple(PartySpec(n, 2, 2) for n in names)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k].line())
