import numpy as np
import pytest

from spinone.qalgebra import DensityMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_density(rng, sites: int, rank: int | None = None, real: bool = False) -> DensityMatrix:
    """Random full- or low-rank density matrix via a Wishart factor."""
    dim = 3**sites
    rank = rank or dim
    if real:
        a = rng.standard_normal((dim, rank))
    else:
        a = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix(rho, sites)


def singlet_vector() -> np.ndarray:
    """(|+1,-1> - |0,0> + |-1,+1>)/sqrt(3) in the flat 9-dim basis."""
    v = np.zeros(9)
    v[2] = 1.0
    v[4] = -1.0
    v[6] = 1.0
    return v / np.sqrt(3.0)
