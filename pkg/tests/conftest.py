"""Shared fixtures: small factorizations with known invariants."""

import random

import pytest

from mfkit.services import poly
from mfkit.services.bilinear import UNTWISTED, BilinearStructure
from mfkit.services.mf_core import (
    MatrixFactorization,
    identity_matrix,
    make_mf,
    mf_xy,
)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240601)


@pytest.fixture
def node() -> MatrixFactorization:
    """(x, y) of xy."""
    return mf_xy(1, 0)


@pytest.fixture
def node_rank_two() -> MatrixFactorization:
    """M_{1,1} = (diag(x, y), diag(y, x)) of xy."""
    return mf_xy(1, 1)


@pytest.fixture
def a2_block() -> MatrixFactorization:
    """(x, x^2) of x^3."""
    ring = poly.make_ring(["x"])
    (x,) = ring.gens
    return make_mf([[x]], [[x**2]], x**3, "A")


@pytest.fixture
def a2_swapped() -> MatrixFactorization:
    """(x^2, x) of x^3."""
    ring = poly.make_ring(["x"])
    (x,) = ring.gens
    return make_mf([[x**2]], [[x]], x**3, "B")


@pytest.fixture
def square() -> MatrixFactorization:
    """(z, z) of z^2."""
    ring = poly.make_ring(["z"])
    (z,) = ring.gens
    return make_mf([[z]], [[z]], z**2, "N")


@pytest.fixture
def node_rank_two_form(node_rank_two: MatrixFactorization) -> BilinearStructure:
    """The quadratic form b0 = 1, b1 = -1 on M_{1,1}."""
    one = identity_matrix(2, node_rank_two.ring)
    return BilinearStructure(UNTWISTED, 1, one, -one, node_rank_two, "q")


@pytest.fixture
def a2_form(a2_block: MatrixFactorization) -> BilinearStructure:
    """The quadratic form b0 = 1, b1 = -1 on (x, x^2)."""
    one = identity_matrix(1, a2_block.ring)
    return BilinearStructure(UNTWISTED, 1, one, -one, a2_block, "q")
