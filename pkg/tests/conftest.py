import numpy as np
import pytest

from nichewave import Kernel, bump_growth, build_grid, rescale_kernel
from nichewave.operators import build_operator


@pytest.fixture
def tent():
    return Kernel("tent")


@pytest.fixture
def bump():
    return bump_growth(2.0, 1.0, -1.0)


@pytest.fixture
def ball_op(tent, bump):
    grid = build_grid(1, 8.0, 0.05, "ball-truncated")
    return build_operator(grid, rescale_kernel(tent, 1.0, 0.0), bump)


@pytest.fixture
def torus_op(tent):
    from nichewave import constant_growth

    grid = build_grid(1, 4.0, 0.125, "torus")
    return build_operator(grid, rescale_kernel(tent, 1.0, 0.0), constant_growth(1.5))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
