import numpy as np
import pytest

from hfbdyn.experiments.scenarios import STANDARD_SCENARIO, instantiate
from hfbdyn.lattice import make_grid
from hfbdyn.potentials import PotentialSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid16():
    return make_grid(1, 16, 2 * np.pi)


@pytest.fixture
def spec16():
    return PotentialSpec(0.5, 16.0)


@pytest.fixture(scope="session")
def standard_state():
    return instantiate(STANDARD_SCENARIO)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def random_field(rng, grid):
    return rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size)


def random_kernel(rng, grid):
    return rng.standard_normal((grid.size, grid.size)) + 1j * rng.standard_normal((grid.size, grid.size))
