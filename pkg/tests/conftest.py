import json
from pathlib import Path

import pytest

from qpjacobi import almost_mathieu, extended_harper, free_laplacian
from qpjacobi.coeffs import GOLDEN

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture
def frozen():
    return FROZEN


@pytest.fixture
def amo():
    return almost_mathieu(3.0)


@pytest.fixture
def harper():
    return extended_harper(3.0, 0.5, 1.0, 0.5, GOLDEN)


@pytest.fixture
def free():
    return free_laplacian()


@pytest.fixture
def omega():
    return GOLDEN


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
