import numpy as np
import pytest

from quadflow.harmonics import harmonic_basis, so_generators, theta_coefficients
from quadflow.torus import abc_field, build_torus_tensor


@pytest.fixture(scope="session")
def abc():
    return abc_field(1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def abc_tensor(abc):
    return build_torus_tensor(abc)


@pytest.fixture(scope="session")
def s2_basis_deg1():
    return harmonic_basis(2, 1)


@pytest.fixture(scope="session")
def s2_basis_deg2():
    return harmonic_basis(2, 2)


@pytest.fixture(scope="session")
def s2_gens():
    return so_generators(2)


@pytest.fixture(scope="session")
def s2_theta_deg1(s2_basis_deg1, s2_gens):
    return theta_coefficients(s2_basis_deg1, s2_gens)


@pytest.fixture(scope="session")
def s2_theta_deg2(s2_basis_deg2, s2_gens):
    return theta_coefficients(s2_basis_deg2, s2_gens)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_unit(rng, dim):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)
