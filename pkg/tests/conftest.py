import sys

import numpy as np
import pytest
from hypothesis import strategies as st

from persuade_sim import BeliefSet, RewardGrid


@st.composite
def prob_vectors(draw, min_size=2, max_size=8, size=None, positive=True):
    n = size if size is not None else draw(st.integers(min_size, max_size))
    lo = 1e-3 if positive else 0.0
    raw = draw(st.lists(st.floats(lo, 1.0), min_size=n, max_size=n))
    raw = np.array(raw)
    if raw.sum() == 0:
        raw[0] = 1.0
    return raw / raw.sum()


@st.composite
def prob_pairs(draw, min_size=2, max_size=8):
    n = draw(st.integers(min_size, max_size))
    return draw(prob_vectors(size=n)), draw(prob_vectors(size=n))


alphas = st.floats(0.0, 1.0)
open_alphas = st.floats(0.01, 0.99)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_point_grid():
    return RewardGrid(np.array([0.0, 10.0]))


def grid_beliefs(means, grid=None):
    """Two-point grid beliefs on {0, 10} with the given per-choice means."""
    grid = grid or RewardGrid(np.array([0.0, 10.0]))
    rows = [[1 - m / 10, m / 10] for m in means]
    return BeliefSet.from_marginals(grid, rows)


def pytest_terminal_summary(terminalreporter):
    # only when the acceptance module was collected in this session
    mod = sys.modules.get("tests.test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
