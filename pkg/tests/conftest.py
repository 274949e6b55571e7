import numpy as np
import pytest

from ida_fec.galois_bch import CodeSpec, build_field
from ida_fec.orbgrand import generate_pattern_book


@pytest.fixture(scope="session")
def spec():
    return CodeSpec()


@pytest.fixture(scope="session")
def tables():
    return build_field()


@pytest.fixture(scope="session")
def book22():
    return generate_pattern_book(22)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
