import numpy as np
import pytest

from qpflow.fixtures import case_bytes
from qpflow.grid import build_quadratic_forms, parse_case


@pytest.fixture(scope="session")
def case3():
    return parse_case(case_bytes("case3"))


@pytest.fixture(scope="session")
def case5():
    return parse_case(case_bytes("case5"))


@pytest.fixture(scope="session")
def case14():
    return parse_case(case_bytes("case14"))


@pytest.fixture(scope="session")
def problem3(case3):
    return build_quadratic_forms(case3)


@pytest.fixture(scope="session")
def problem5(case5):
    return build_quadratic_forms(case5)


@pytest.fixture(scope="session")
def problem14(case14):
    return build_quadratic_forms(case14)


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return a + a.conj().T
