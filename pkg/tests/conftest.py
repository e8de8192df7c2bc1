import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from chsplit.harness import random_field
from chsplit.spectral import Grid2D, RealField

settings.register_profile("default", max_examples=30, deadline=None)
settings.load_profile("default")


@pytest.fixture
def grid32():
    return Grid2D(32)


def cos_x1(grid, k=1, a=1.0):
    return RealField.from_function(grid, lambda x1, x2: a * np.cos(k * x1))


# band-limited, mean-zero random fields drawn by seed
seeds = st.integers(min_value=0, max_value=2**31 - 1)
bands = st.integers(min_value=1, max_value=6)


def band_field(n, seed, band, h1=1.0):
    return random_field(Grid2D(n), seed, band, h1)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
