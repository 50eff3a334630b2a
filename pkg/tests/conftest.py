import numpy as np
import pytest

from latmech import sampling
from latmech.lattice import body_centred_cubic, diamond, simple_cubic


def random_symmetric_tensor4(rng) -> np.ndarray:
    """Random stiffness-like tensor with both index symmetries."""
    raw = rng.standard_normal((3, 3, 3, 3))
    minor = (raw + raw.transpose(1, 0, 2, 3) + raw.transpose(0, 1, 3, 2)
             + raw.transpose(1, 0, 3, 2)) / 4.0
    return (minor + minor.transpose(2, 3, 0, 1)) / 2.0


def random_symmetric_matrix(rng, n: int = 6) -> np.ndarray:
    raw = rng.standard_normal((n, n))
    return 0.5 * (raw + raw.T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240911)


@pytest.fixture
def rotations():
    return sampling.random_rotations(50, seed=101)


@pytest.fixture
def catalogue_lattices():
    return [simple_cubic(), body_centred_cubic(), diamond()]
