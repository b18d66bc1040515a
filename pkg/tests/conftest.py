import random

import pytest

from kboxkit.mesh import make_uniform_mesh, sample_family


@pytest.fixture(scope="session")
def mesh23():
    return make_uniform_mesh(2, 3)


@pytest.fixture(scope="session")
def mesh25():
    return make_uniform_mesh(2, 5)


@pytest.fixture(scope="session")
def mesh33():
    return make_uniform_mesh(3, 3)


@pytest.fixture(scope="session")
def w23(mesh23):
    return sample_family("lukasiewicz", mesh23)


@pytest.fixture(scope="session")
def m23(mesh23):
    return sample_family("min", mesh23)


@pytest.fixture(scope="session")
def p23(mesh23):
    return sample_family("product", mesh23)


@pytest.fixture(scope="session")
def w33(mesh33):
    return sample_family("lukasiewicz", mesh33)


def seeded_rng(seed: int) -> random.Random:
    return random.Random(seed)
