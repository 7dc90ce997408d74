import numpy as np
import pytest

from diraclab import (
    ChargeConjugation,
    OneParticleModel,
    Region,
    SpinorLattice,
    build_model,
    positive_projector,
)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def flat8():
    return build_model(SpinorLattice(n_sites=8), mass=1.0)


@pytest.fixture
def ground8(flat8):
    return positive_projector(flat8)


@pytest.fixture
def half8(flat8):
    return Region.half(flat8.lattice)


def make_abstract_model(h: np.ndarray, theta: np.ndarray, n_sites: int = 2) -> OneParticleModel:
    """Wrap an explicit Hermitian matrix as a model (for diagonal examples)."""
    lam, vec = np.linalg.eigh(h)
    return OneParticleModel(
        lattice=SpinorLattice(n_sites=n_sites),
        h=h,
        conj=ChargeConjugation(theta),
        mass=1.0,
        eigenvalues=lam,
        eigenvectors=vec,
    )


def dispersion_energies(n_sites: int, spacing: float, mass: float) -> np.ndarray:
    """Closed-form spectrum of the flat periodic chain: +/- sqrt(k_hat^2 + m^2).

    Independent of the builder: momenta k = 2 pi j / (n a), lattice momentum
    k_hat = sin(k a) / a, one +/- pair per momentum.
    """
    j = np.arange(n_sites)
    k_hat = np.sin(2.0 * np.pi * j / n_sites) / spacing
    omega = np.sqrt(k_hat**2 + mass**2)
    return np.sort(np.concatenate([omega, -omega]))
