import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)


def random_hermitian(rng, n, scale=1.0):
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (G + G.conj().T) / 2.0


@pytest.fixture
def hermitian():
    return random_hermitian
