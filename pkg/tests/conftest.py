import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("drum", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("drum")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_square():
    from drumcorners.geometry import preset

    return preset("square")


QUARTER = math.pi / 2


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
