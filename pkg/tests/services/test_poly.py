"""Tests for polynomial rings, parsing, Gröbner bases and Tjurina algebras."""

import random

import pytest
from sympy.polys.domains import QQ

from mfkit.errors import BudgetExceededError, DocumentError, VariableMismatchError
from mfkit.services import poly


class TestRings:
    """Test cases for ring construction and variable handling."""

    @pytest.mark.parametrize(
        "variables,order",
        [
            ([], "grevlex"),
            (["x", "x"], "grevlex"),
            (["1x"], "grevlex"),
            (["x"], "deglex"),
        ],
    )
    def test_invalid_rings(self, variables, order):
        """Empty, repeated or malformed variable lists are rejected."""
        with pytest.raises(ValueError):
            poly.make_ring(variables, order)

    def test_merge_keeps_first_order(self):
        """Merged rings list the first ring's variables first."""
        first = poly.make_ring(["y", "x"])
        merged = poly.merge_rings(first, poly.make_ring(["x", "z"]))
        assert poly.variable_names(merged) == ["y", "x", "z"]

    def test_embed(self):
        """Embedding moves exponents to the matching variables."""
        source = poly.make_ring(["x"])
        target = poly.make_ring(["y", "x"])
        (x,) = source.gens
        y2, x2 = target.gens
        assert poly.embed(x**2 + 1, target) == x2**2 + 1
        with pytest.raises(VariableMismatchError):
            poly.embed(y2, source)


class TestParsing:
    """Test cases for the polynomial text syntax."""

    def test_parse_and_format(self):
        """Canonical output re-parses to the same polynomial."""
        ring = poly.make_ring(["x", "y", "z"])
        p = poly.parse_polynomial("x^2*y - 1/2*z", ring)
        assert poly.format_polynomial(p) == "x^2*y - 1/2*z"
        assert poly.parse_polynomial(poly.format_polynomial(p), ring) == p

    def test_zero_and_constants(self):
        """Zero prints as 0 and constants keep their sign."""
        ring = poly.make_ring(["x"])
        assert poly.format_polynomial(ring.zero) == "0"
        assert poly.format_polynomial(ring(-3)) == "-3"

    def test_unicode_minus(self):
        """The typographic minus sign is accepted."""
        ring = poly.make_ring(["x", "y"])
        x, y = ring.gens
        assert poly.parse_polynomial("x − y", ring) == x - y

    @pytest.mark.parametrize("text", ["", "x + w", "1.5*x", "x +* y", "x; y"])
    def test_malformed(self, text):
        """Unknown names, floats and syntax errors raise DocumentError."""
        ring = poly.make_ring(["x", "y"])
        with pytest.raises(DocumentError):
            poly.parse_polynomial(text, ring)

    def test_arith_needs_same_variables(self):
        """Arithmetic refuses operands over different variable lists."""
        first = poly.make_ring(["x"])
        second = poly.make_ring(["x", "y"])
        with pytest.raises(VariableMismatchError):
            poly.arith(first.gens[0], second.gens[0], "add")
        x = first.gens[0]
        assert poly.arith(x, x, "mul") == x**2
        with pytest.raises(ValueError):
            poly.arith(x, x, "div")


class TestDegrees:
    """Test cases for degrees, truncation and monomial enumeration."""

    def test_weighted_degree(self):
        ring = poly.make_ring(["x", "y"])
        x, y = ring.gens
        assert poly.total_degree(x**2 * y) == 3
        assert poly.total_degree(x**2 * y, [2, 3]) == 7
        assert poly.total_degree(ring.zero) == -1

    def test_monomials_up_to(self):
        """All monomials of bounded (weighted) degree are listed once."""
        assert len(poly.monomials_up_to(2, 2)) == 6
        assert len(poly.monomials_up_to(2, 6, [2, 3])) == 7
        assert poly.monomials_up_to(2, -1) == []
        assert poly.monomials_up_to(2, 2)[0] == (0, 0)

    def test_truncate(self):
        ring = poly.make_ring(["x", "y"])
        x, y = ring.gens
        assert poly.truncate(1 + x + x * y + x**3, 2) == 1 + x + x * y

    def test_truncated_inverse(self):
        """1 + x inverts only as a series; constants invert exactly."""
        ring = poly.make_ring(["x"])
        (x,) = ring.gens
        inverse, exact = poly.truncated_inverse(1 + x, 3)
        assert inverse == 1 - x + x**2 - x**3
        assert not exact
        inverse, exact = poly.truncated_inverse(ring(2), 0)
        assert exact
        with pytest.raises(ZeroDivisionError):
            poly.truncated_inverse(x, 2)

    def test_random_polynomial_without_constant(self):
        """constant=False draws polynomials vanishing at the origin."""
        ring = poly.make_ring(["x", "y"])
        rng = random.Random(7)
        for _ in range(20):
            p = poly.random_polynomial(ring, rng, degree=2, terms=3, constant=False)
            assert p
            assert poly.vanishes_at_origin(p)


class TestGroebner:
    """Test cases for Buchberger's algorithm and normal forms."""

    def test_reduced_basis_is_monic(self):
        ring = poly.make_ring(["x", "y"])
        x, y = ring.gens
        basis = poly.buchberger([2 * x**2 - 2 * y, x * y - 1])
        assert all(g.LC == 1 for g in basis)
        quotient = poly.groebner(poly.make_ideal([x**2 - y, x * y - 1]))
        assert poly.contains(quotient, y**3 - 1)

    def test_normal_form(self):
        """x^2 reduces to y modulo x^2 - y."""
        ring = poly.make_ring(["x", "y"])
        x, y = ring.gens
        quotient = poly.groebner(poly.make_ideal([x**2 - y]))
        assert poly.normal_form(x**2, quotient) == y
        assert not quotient.is_finite

    def test_budget(self):
        """A zero pair budget stops the computation."""
        ring = poly.make_ring(["x", "y"])
        x, y = ring.gens
        with pytest.raises(BudgetExceededError):
            poly.buchberger([x**2 - y, x * y - 1], budget=0)

    def test_unit_ideal(self):
        """An ideal containing 1 has an empty standard basis."""
        ring = poly.make_ring(["x"])
        (x,) = ring.gens
        quotient = poly.groebner(poly.make_ideal([x, x + 1]))
        assert quotient.dimension == 0

    def test_coordinates_and_products(self):
        """Coordinates are taken on the standard monomials 1, x of Q[x]/(x^2)."""
        ring = poly.make_ring(["x"])
        (x,) = ring.gens
        quotient, dimension = poly.tjurina(x**3)
        assert dimension == 2
        assert poly.coordinates(2 * x + 3 + x**5, quotient) == [QQ(3), QQ(2)]
        assert poly.quotient_multiply(quotient, x, x) == ring.zero


class TestSingularities:
    """Test cases for Tjurina and Milnor numbers."""

    @pytest.mark.parametrize(
        "variables,text,expected",
        [
            (["x"], "x^3", 2),
            (["x", "y"], "x*y", 1),
            (["z", "x", "y"], "x*y - z^3", 2),
            (["x1", "x2"], "x1^3 + x2^3", 4),
        ],
    )
    def test_tjurina_numbers(self, variables, text, expected):
        ring = poly.make_ring(variables)
        w = poly.parse_polynomial(text, ring)
        assert poly.tjurina(w)[1] == expected
        assert poly.milnor(w)[1] == expected

    def test_non_isolated(self):
        """x^2 in two variables is singular along the y axis."""
        ring = poly.make_ring(["x", "y"])
        x, _ = ring.gens
        _, dimension = poly.tjurina(x**2)
        assert dimension is None
        with pytest.raises(ValueError):
            poly.require_isolated(x**2)

    def test_potential_must_vanish(self):
        ring = poly.make_ring(["x"])
        (x,) = ring.gens
        with pytest.raises(ValueError):
            poly.tjurina(x + 1)

    def test_substitute(self):
        ring = poly.make_ring(["x", "y"])
        x, y = ring.gens
        assert poly.substitute(x * y, {"x": y**2}) == y**3
