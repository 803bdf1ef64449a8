"""Tests for Knörrer's functor, its square and the versal family of the node."""

import pytest

from mfkit.errors import VariableCollisionError
from mfkit.services import poly
from mfkit.services.bilinear import (
    TWISTED,
    UNTWISTED,
    BilinearStructure,
    classify_brieskorn,
    verify_structure,
)
from mfkit.services.knorrer import (
    theta,
    theta_gauge_witness,
    theta_morphism,
    theta_squared,
    theta_structure,
    theta_via_tensor,
    theta_with_structure,
    versal_family,
)
from mfkit.services.mf_core import (
    GaugePair,
    gauge,
    identity_matrix,
    identity_morphism,
    is_morphism,
    make_mf,
    poly_matrix,
    random_rank_one,
    scalar_morphism,
    verify,
)


@pytest.fixture
def cusp():
    """(z, z^2) of z^3."""
    ring = poly.make_ring(["z"])
    (z,) = ring.gens
    return make_mf([[z]], [[z**2]], z**3, "M")


def _structure(square, kind, sign=1):
    one = identity_matrix(1, square.ring)
    b1 = one if kind == TWISTED else -one
    return BilinearStructure(kind, sign, one, b1, square, "b")


class TestTheta:
    """Test cases for theta on factorizations."""

    def test_cusp(self, cusp):
        """theta(z, z^2) factorizes xy - z^3 with rank 2."""
        output = theta(cusp)
        result = output.result
        z, x, y = result.ring.gens
        assert result.variables == ["z", "x", "y"]
        assert result.potential == x * y - z**3
        assert result.rank == 2
        assert verify(result).valid
        assert output.provenance.source == "M"

    def test_random_inputs(self, rng):
        for _ in range(10):
            m = random_rank_one(("z", "w"), rng)
            assert verify(theta(m, "s", "t").result).valid

    def test_equals_tensor_construction(self, cusp, node_rank_two):
        assert theta_via_tensor(cusp) == theta(cusp).result
        assert theta_via_tensor(node_rank_two, "u", "v") == (
            theta(node_rank_two, "u", "v").result
        )

    @pytest.mark.parametrize("names", [("x", "z"), ("x", "x")])
    def test_fresh_variables(self, cusp, names):
        with pytest.raises(VariableCollisionError):
            theta(cusp, *names)

    def test_morphisms(self, node_rank_two):
        """Closed morphisms go to closed morphisms of either parity."""
        x, y = node_rank_two.ring.gens
        for f in (identity_morphism(node_rank_two), scalar_morphism(node_rank_two, x)):
            moved = theta_morphism(f, "u", "v")
            assert is_morphism(moved)
            assert moved.source == theta(node_rank_two, "u", "v").result

    def test_gauge_witness(self, node_rank_two):
        ring = node_rank_two.ring
        g = GaugePair(
            poly_matrix([[1, 1], [0, 1]], ring), poly_matrix([[1, 0], [1, 1]], ring)
        )
        witness = theta_gauge_witness(node_rank_two, g, "u", "v")
        moved = gauge(node_rank_two, g).result
        left = gauge(theta(node_rank_two, "u", "v").result, witness).result
        assert left == theta(moved, "u", "v").result


class TestThetaStructures:
    """Test cases for transporting structures along theta."""

    @pytest.mark.parametrize(
        "kind,sign,expected",
        [
            (TWISTED, 1, (UNTWISTED, 1)),
            (UNTWISTED, 1, (TWISTED, -1)),
        ],
    )
    def test_kind_and_sign(self, square, kind, sign, expected):
        b = _structure(square, kind, sign)
        moved = theta_structure(square, b)
        assert (moved.kind, moved.sign) == expected
        assert verify_structure(moved).valid

    def test_with_structure(self, square):
        output = theta_with_structure(square, _structure(square, TWISTED))
        assert output.structure is not None
        assert output.provenance.kind == TWISTED
        assert output.structure.host == output.result

    def test_without_structure(self, cusp):
        assert theta_with_structure(cusp).structure is None


class TestThetaSquared:
    """Test cases for theta applied twice."""

    def test_normalized_potential(self, square):
        output = theta_squared(square)
        result = output.result
        z, x, y, u, v = result.ring.gens
        assert result.potential == x * y + u * v - z**2
        assert result.rank == 4
        assert verify(result).valid
        assert len(output.provenance.normalization) == 2

    def test_quadratic_block_becomes_symplectic(self):
        """theta twice turns the quadratic form on (x, x^2) into a symplectic one."""
        b = classify_brieskorn([(1, 3)]).witness
        output = theta_squared(b.host, b, ("s", "t", "u", "v"))
        assert output.structure is not None
        assert (output.structure.kind, output.structure.sign) == (UNTWISTED, -1)
        assert output.result.rank == 4
        assert verify(output.result).valid

    @pytest.mark.parametrize("kind", [TWISTED, UNTWISTED])
    def test_sign_flips(self, square, kind):
        """The structure keeps its kind and ends with the opposite sign."""
        output = theta_squared(square, _structure(square, kind))
        assert output.structure is not None
        assert (output.structure.kind, output.structure.sign) == (kind, -1)
        assert verify_structure(output.structure).valid


class TestVersalFamily:
    """Test cases for the versal family of the node."""

    @pytest.mark.parametrize("mode,tangent", [("plain", 2), ("orthogonal", 1)])
    def test_rank_one(self, mode, tangent):
        family = versal_family(1, mode)
        assert family.certificate.holds
        assert family.certificate.tangent_dim == tangent
        assert family.eliminated is not None
        assert verify(family.eliminated).valid

    def test_rank_two(self):
        family = versal_family(2)
        assert family.certificate.holds
        assert family.eliminated is None
        assert family.family.rank == 4

    def test_symplectic(self):
        assert versal_family(2, "symplectic").certificate.holds
        with pytest.raises(ValueError):
            versal_family(1, "symplectic")

    @pytest.mark.parametrize("r,mode", [(3, "plain"), (1, "unitary")])
    def test_unsupported(self, r, mode):
        with pytest.raises(ValueError):
            versal_family(r, mode)
