import numpy as np
import pytest

from usdkit.numkernel import haar_unitary, random_complex


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_invertible(n, rng):
    return random_complex((n, n), rng)


def random_passive(n, rng):
    """U diag(s) V^H with s drawn from (0.05, 1]."""
    s = np.sort(rng.uniform(0.05, 1.0, n))[::-1]
    return haar_unitary(n, rng) @ np.diag(s) @ haar_unitary(n, rng)


def random_density(n, rng):
    a = random_complex((n, n), rng)
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_orthogonal_pair(n, rng):
    a = random_complex(n, rng)
    b = random_complex(n, rng)
    b = b - a * (np.vdot(a, b) / np.vdot(a, a))
    return a, b
