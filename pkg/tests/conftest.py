"""Shared fixtures: a small 2-D grid with a separated two-ball weight."""
import pytest

from nlhelm.numerics.grid_field import Grid
from nlhelm.operators.birman_schwinger import WeightedOperator, compute_constants
from nlhelm.operators.resolvent import build
from nlhelm.weights.profiles import WeightSpec, realize

# A_+ is a ball of radius 0.8 around (-1, 0); A_- holds the 5 nodes within 0.3 of (1, 0).
TWO_BALLS = {
    "plus_center": (-1.0, 0.0),
    "plus_radius": 0.8,
    "minus_center": (1.0, 0.0),
    "minus_radius": 0.3,
}


@pytest.fixture(scope="session")
def grid():
    return Grid(2, 32, 4.0)


@pytest.fixture(scope="session")
def resolvent(grid):
    return build(grid)


@pytest.fixture(scope="session")
def weight(grid):
    return realize(WeightSpec("two_balls", TWO_BALLS), grid)


@pytest.fixture(scope="session")
def focusing_weight(grid):
    return realize(WeightSpec("two_balls", {"plus_center": (0.0, 0.0), "plus_radius": 0.8}), grid)


@pytest.fixture(scope="session")
def op(resolvent, weight):
    return WeightedOperator.from_weight(resolvent, weight, 4.0)


@pytest.fixture(scope="session")
def consts(op):
    return compute_constants(op, 4)
