"""Tests for bilinear structures, adjoints and structure search."""

import pytest

from mfkit.errors import StructureError
from mfkit.services.bilinear import (
    TWISTED,
    UNTWISTED,
    BilinearStructure,
    _nonsingular_combination,
    adjoint,
    check_commutation,
    classify_brieskorn,
    gauge_structure,
    structure_from_matrix,
    structure_search,
    structure_summary,
    tensor_kind,
    tensor_structure,
    verify_structure,
    xy_quadratic,
)
from mfkit.services.mf_core import (
    GaugePair,
    identity_matrix,
    identity_morphism,
    is_morphism,
    matrices_equal,
    poly_matrix,
    random_morphism,
)


def _twisted_square(square):
    one = identity_matrix(1, square.ring)
    return BilinearStructure(TWISTED, 1, one, one, square, "t")


class TestVerification:
    """Test cases for checking structures."""

    def test_node_quadratic_form(self):
        b = xy_quadratic()
        assert verify_structure(b).valid
        assert b.describe().startswith("quadratic")

    def test_rank_two_form(self, node_rank_two_form):
        assert verify_structure(node_rank_two_form).valid

    def test_twisted_square(self, square):
        """q0 = q1 = 1 is a twisted quadratic structure on (z, z)."""
        b = _twisted_square(square)
        assert verify_structure(b).valid
        assert b.commutation_sign == -1

    def test_wrong_symmetry(self, node):
        """b0 = b1 = 1 satisfies neither sign."""
        one = identity_matrix(1, node.ring)
        for sign in (1, -1):
            b = BilinearStructure(UNTWISTED, sign, one, one, node)
            report = verify_structure(b)
            assert not report.valid

    def test_not_invertible(self, node):
        """The zero structure is flagged at the origin."""
        zero = poly_matrix([[0]], node.ring)
        report = verify_structure(BilinearStructure(UNTWISTED, 1, zero, zero, node))
        assert [v.identity for v in report.violations] == ["invertible at origin"]

    def test_bad_kind_and_sign(self, node):
        one = identity_matrix(1, node.ring)
        with pytest.raises(StructureError):
            BilinearStructure("skew", 1, one, one, node)
        with pytest.raises(StructureError):
            BilinearStructure(UNTWISTED, 2, one, one, node)

    def test_structure_from_matrix(self, node):
        """Off-block entries mean the matrix is not of the requested kind."""
        full = poly_matrix([[0, -1], [1, 0]], node.ring)
        b = structure_from_matrix(UNTWISTED, 1, full, node)
        assert b is not None
        assert verify_structure(b).valid
        assert structure_from_matrix(TWISTED, 1, full, node) is None

    def test_summary(self):
        assert "b0=" in structure_summary(xy_quadratic())


class TestAdjoints:
    """Test cases for adjoints and the commutation rule."""

    def test_identity_is_selfadjoint(self, node_rank_two, node_rank_two_form):
        f = identity_morphism(node_rank_two)
        result = adjoint(f, node_rank_two_form, node_rank_two_form)
        assert matrices_equal(result.full(), f.full())

    def test_adjoint_of_closed_is_closed(self, node_rank_two, node_rank_two_form, rng):
        for odd in (False, True):
            f = random_morphism(node_rank_two, node_rank_two, odd, rng)
            g = adjoint(f, node_rank_two_form, node_rank_two_form)
            assert g.odd == odd
            if is_morphism(f):
                assert is_morphism(g)

    @pytest.mark.parametrize("odd", [False, True])
    @pytest.mark.parametrize("host", ["rank_two", "rank_one"])
    def test_commutation_untwisted(self, node_rank_two_form, rng, host, odd):
        """D(f)^adj = (-1)^|f| D(f^adj) for random morphisms."""
        b = node_rank_two_form if host == "rank_two" else xy_quadratic()
        for _ in range(20):
            f = random_morphism(b.host, b.host, odd, rng)
            report = check_commutation(f, b, b)
            assert report.holds, report.violations
            assert report.sign == 1

    @pytest.mark.parametrize("odd", [False, True])
    def test_commutation_twisted(self, square, rng, odd):
        """Twisted structures pick up the extra sign -1."""
        b = _twisted_square(square)
        for _ in range(20):
            f = random_morphism(square, square, odd, rng)
            report = check_commutation(f, b, b)
            assert report.holds, report.violations
            assert report.sign == -1

    def test_kinds_must_match(self, square):
        twisted = _twisted_square(square)
        one = identity_matrix(1, square.ring)
        untwisted = BilinearStructure(UNTWISTED, 1, one, -one, square)
        with pytest.raises(StructureError):
            adjoint(identity_morphism(square), twisted, untwisted)


class TestTensorAndGauge:
    """Test cases for tensor products and gauges of structures."""

    @pytest.mark.parametrize(
        "first,second,expected",
        [
            ((UNTWISTED, 1), (UNTWISTED, 1), (TWISTED, -1)),
            ((UNTWISTED, -1), (UNTWISTED, 1), (TWISTED, 1)),
            ((TWISTED, 1), (TWISTED, -1), (TWISTED, -1)),
            ((TWISTED, -1), (UNTWISTED, 1), (UNTWISTED, -1)),
        ],
    )
    def test_tensor_kind(self, node, first, second, expected):
        one = identity_matrix(1, node.ring)
        a = BilinearStructure(first[0], first[1], one, one, node)
        b = BilinearStructure(second[0], second[1], one, one, node)
        assert tensor_kind(a, b) == expected

    def test_tensor_of_two_quadratic_forms(self):
        """(x, y) ⊗ (u, v) carries a twisted symplectic structure."""
        result = tensor_structure(xy_quadratic("x", "y"), xy_quadratic("u", "v"))
        assert (result.kind, result.sign) == (TWISTED, -1)
        assert verify_structure(result).valid
        assert result.host.variables == ["x", "y", "u", "v"]

    def test_tensor_twisted_with_quadratic(self, square):
        result = tensor_structure(_twisted_square(square), xy_quadratic())
        assert (result.kind, result.sign) == (UNTWISTED, 1)
        assert verify_structure(result).valid

    def test_gauge_keeps_validity(self, node_rank_two, node_rank_two_form):
        ring = node_rank_two.ring
        g = GaugePair(
            poly_matrix([[1, 1], [0, 1]], ring), poly_matrix([[2, 0], [1, 1]], ring)
        )
        moved = gauge_structure(node_rank_two_form, g)
        assert verify_structure(moved).valid


class TestSearch:
    """Test cases for structure search and Brieskorn classification."""

    def test_node_has_only_quadratic_structures(self, node):
        space = structure_search(node, UNTWISTED)
        assert (len(space.plus), len(space.minus)) == (1, 0)
        assert space.signs == [1]
        assert all(verify_structure(b).valid for b in space.invertible())

    def test_node_has_no_twisted_structure(self, node):
        space = structure_search(node, TWISTED)
        assert space.dimension == 0
        assert space.invertible() == []

    def test_square_has_both_kinds(self, square):
        assert structure_search(square, TWISTED).signs == [1]
        assert structure_search(square, UNTWISTED).signs == [1]

    def test_combination_avoiding_a_singular_choice(self, node):
        """diag(2t1 - t2, t3) is singular at (1, 2, 3) but not identically."""
        ring = node.ring
        matrices = [
            poly_matrix([[2, 0], [0, 0]], ring),
            poly_matrix([[-1, 0], [0, 0]], ring),
            poly_matrix([[0, 0], [0, 1]], ring),
        ]
        point = _nonsingular_combination(matrices)
        assert point is not None
        assert (2 * point[0] - point[1]) * point[2] != 0

    def test_no_combination_when_determinant_vanishes(self, node):
        ring = node.ring
        matrices = [
            poly_matrix([[1, 0], [0, 0]], ring),
            poly_matrix([[2, node.ring.gens[0]], [0, 0]], ring),
        ]
        assert _nonsingular_combination(matrices) is None

    def test_unknown_kind(self, node):
        with pytest.raises(StructureError):
            structure_search(node, "skew")

    @pytest.mark.parametrize(
        "d,kind,sign",
        [
            (1, UNTWISTED, 1),
            (2, TWISTED, -1),
            (3, UNTWISTED, -1),
            (4, TWISTED, 1),
        ],
    )
    def test_brieskorn(self, d, kind, sign):
        """The sign is (-1)^(d // 2) and the kind alternates with d."""
        result = classify_brieskorn([(1, 3)] * d)
        assert (result.kind, result.sign) == (kind, sign)
        assert result.m_parity == (d // 2) % 2
        assert verify_structure(result.witness).valid

    def test_brieskorn_range(self):
        with pytest.raises(ValueError):
            classify_brieskorn([(1, 3)] * 5)

    @pytest.mark.parametrize("d", [1, 2])
    def test_brieskorn_commutation(self, d, rng):
        b = classify_brieskorn([(1, 3)] * d).witness
        for odd in (False, True):
            for _ in range(20):
                f = random_morphism(b.host, b.host, odd, rng)
                report = check_commutation(f, b, b)
                assert report.holds
                assert report.sign == (1 if d == 1 else -1)


class TestTensorTable:
    """Test cases for every kind and sign combination of tensor structures."""

    @pytest.fixture(scope="class")
    def brieskorn_structures(self):
        return {d: classify_brieskorn([(1, 3)] * d).witness for d in (1, 2, 3, 4)}

    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    @pytest.mark.parametrize("second", ["node", "square"])
    def test_predicted_kind_and_sign(self, brieskorn_structures, square, d, second):
        first = brieskorn_structures[d]
        other = xy_quadratic("u", "v") if second == "node" else _twisted_square(square)
        result = tensor_structure(first, other)
        assert (result.kind, result.sign) == tensor_kind(first, other)
        assert verify_structure(result).valid
