import numpy as np
import pytest

from plateau.boundary import QPParams
from plateau.grid import EvalGrid, SynthSpec, generate_synthetic, lattice

# 20x20 lattice whose unit disk touches only one corner region; on a
# centred lattice both centres of gravity fall on the centre of symmetry.
OFFSET_BOUNDS = ((-0.5, 3.5), (-0.5, 3.5))


def circle_grid(seed=0, bounds=OFFSET_BOUNDS, shape=(20, 20), noise=1.0):
    spec = SynthSpec(shape, QPParams.circle(), 0.0, 10.0, noise, seed=seed, bounds=bounds)
    return generate_synthetic(spec)


def step_1d(rng, n, k, gap):
    u = np.sort(rng.normal(size=n))
    z = np.where(np.arange(n) < k, 0.0, gap) + rng.normal(size=n)
    return u, z


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def offset_circle():
    return circle_grid(seed=0)


@pytest.fixture
def unit_lattice():
    return EvalGrid(lattice((2, 2), ((0, 1), (0, 1))), np.arange(4.0))
