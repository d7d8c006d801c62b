import functools
import math

import numpy as np
import pytest

from hplateau.curves import bridged_circles, latitude_circle, symmetric_chain
from hplateau.domain import Ball
from hplateau.solver import SolveOptions, initialize_sweep, minimize_ih

CURVES = {
    "equator": lambda: latitude_circle(0.0, 2000),
    "rho09": lambda: latitude_circle(-math.sqrt(0.19), 2000),
    "gamma1": lambda: bridged_circles(resolution=2000),
    "gamma2": lambda: symmetric_chain(resolution=2000),
}


@functools.lru_cache(maxsize=None)
def curve(name):
    return CURVES[name]()


@functools.lru_cache(maxsize=None)
def solved(name, H, side="minus"):
    """Cached minimiser ``(disk, report)`` for a named curve in the unit ball."""
    c = curve(name)
    ball = Ball(1.0)
    opts = SolveOptions(side=side)
    return minimize_ih(initialize_sweep(c, ball, side), c, ball, H, opts)


@pytest.fixture(scope="session")
def solve():
    return solved


@pytest.fixture(scope="session")
def get_curve():
    return curve


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
