"""Tests for exact rational linear algebra."""

import pytest
from sympy.polys.domains import QQ

from mfkit.errors import BudgetExceededError, DimensionMismatchError
from mfkit.services import linalg
from mfkit.services.linalg import RationalMatrix


class TestRationalMatrix:
    """Test cases for the sparse matrix container."""

    def test_zero_entries_are_dropped(self):
        m = RationalMatrix.from_rows([[1, 0], [0, 0]])
        assert m.entries == {(0, 0): QQ(1)}
        assert m.entry(1, 1) == 0

    def test_out_of_range_entry(self):
        with pytest.raises(DimensionMismatchError):
            RationalMatrix(1, 1, {(0, 1): 1})

    def test_ragged_rows(self):
        with pytest.raises(DimensionMismatchError):
            RationalMatrix.from_rows([[1, 2], [3]])

    def test_transpose_and_matvec(self):
        m = RationalMatrix.from_rows([[1, 2], [3, 4]])
        assert m.transpose().dense() == [[1, 3], [2, 4]]
        assert m.matvec([1, 1]) == (QQ(3), QQ(7))
        with pytest.raises(DimensionMismatchError):
            m.matvec([1])

    def test_select_rows(self):
        m = RationalMatrix.from_rows([[1], [2], [3]])
        assert m.select_rows([0, 2]).dense() == [[1], [3]]


class TestElimination:
    """Test cases for rank, kernels and solving."""

    def test_rank_and_kernel(self):
        """[[1, 2], [2, 4]] has rank one and kernel spanned by (-2, 1)."""
        m = RationalMatrix.from_rows([[1, 2], [2, 4]])
        assert linalg.rank(m) == 1
        assert linalg.kernel_basis(m) == [(QQ(-2), QQ(1))]
        assert linalg.cokernel_dimension(m) == 1
        assert linalg.pivot_columns(m) == (0,)

    def test_rational_entries(self):
        m = RationalMatrix.from_rows([[QQ(1, 2), QQ(1, 3)]])
        kernel = linalg.kernel_basis(m)
        assert kernel == [(QQ(-2, 3), QQ(1))]

    def test_empty_matrix(self):
        m = RationalMatrix.zeros(2, 3)
        assert linalg.rank(m) == 0
        assert len(linalg.kernel_basis(m)) == 3

    def test_solve(self):
        m = RationalMatrix.from_rows([[1, 1], [1, -1]])
        assert linalg.solve(m, [2, 0]) == (QQ(1), QQ(1))

    def test_inconsistent_system(self):
        m = RationalMatrix.from_rows([[1], [1]])
        assert linalg.solve(m, [1, 2]) is None
        with pytest.raises(DimensionMismatchError):
            linalg.solve(m, [1])

    def test_inverse(self):
        m = RationalMatrix.from_rows([[1, 2], [3, 4]])
        result = linalg.inverse(m)
        assert result is not None
        assert result.dense() == [[QQ(-2), QQ(1)], [QQ(3, 2), QQ(-1, 2)]]
        assert linalg.inverse(RationalMatrix.from_rows([[1, 2], [2, 4]])) is None

    def test_span_rank(self):
        assert linalg.span_rank([{0: 1}, {0: 2}, {1: 1}], 2) == 2
        assert linalg.span_rank([], 4) == 0

    def test_budget(self):
        """Systems with more unknowns than the budget are refused."""
        m = RationalMatrix.identity(3)
        with pytest.raises(BudgetExceededError):
            linalg.rank(m, budget=2)
