from fractions import Fraction

import pytest

from spheredual.eigenforms import compute_eigen_data
from spheredual.modspace import assemble_basis


@pytest.fixture(scope="session")
def basis_k4_n1():
    return assemble_basis(4, 1, 40)


@pytest.fixture(scope="session")
def basis_k8_n4():
    """M_8(Gamma0(4)) to q^20; forms E8, 16E8(2z), 256E8(4z), f, 16f(2z)."""
    return assemble_basis(8, 4, 20)


@pytest.fixture(scope="session")
def eigen_k8_n4(basis_k8_n4):
    return compute_eigen_data(basis_k8_n4)


@pytest.fixture(scope="session")
def basis_k12_n1():
    return assemble_basis(12, 1, 30)


# sole optimum of the level-4 program at T=3 (extremal theta series)
EXTREMAL_X = [Fraction(1, 136), Fraction(-121, 2176), Fraction(1, 136), Fraction(-60, 17), Fraction(-60, 17)]
# the Barnes-Wall optimum at T=2
BARNES_WALL_X = [Fraction(1, 17), Fraction(1, 17), Fraction(0), Fraction(-480, 17), Fraction(0)]


@pytest.fixture
def extremal_x():
    return list(EXTREMAL_X)


@pytest.fixture
def barnes_wall_x():
    return list(BARNES_WALL_X)
