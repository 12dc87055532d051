import numpy as np
import pytest

from resodyn import FormFactor, SystemSpec, ThermalConfig


@pytest.fixture
def ohmic3d():
    """g(r) = r^{1/2} e^{-r} in d = 3: the reference quantum-optical profile."""
    return FormFactor.power_exp(p=0.5, m=1, amplitude=1.0, dimension=3)


@pytest.fixture
def infrared3d():
    """d = 3 profile at the infrared threshold p = -1/2 (xi(0) > 0)."""
    return FormFactor.power_exp(p=-0.5, m=2, amplitude=1.0, dimension=3)


@pytest.fixture
def line1d():
    """d = 1 boundary profile p = 1/2 with Gaussian UV cutoff."""
    return FormFactor.power_exp(p=0.5, m=2, amplitude=1.0, dimension=1)


@pytest.fixture
def qubit():
    return SystemSpec((0.0, 1.0), np.array([[0.3, 0.5], [0.5, 0.7]], dtype=complex))


@pytest.fixture
def thermal():
    return ThermalConfig(beta=1.0, coupling_constant=1e-2)


def random_density(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_unit_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=n * n) + 1j * rng.normal(size=n * n)
    return v / np.linalg.norm(v)
