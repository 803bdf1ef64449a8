"""Tests for tangent and obstruction dimensions of deformations."""

from unittest.mock import patch

import pytest

from mfkit.errors import NonStabilizationError
from mfkit.services.deform import (
    is_closed_ideal,
    obstruction_dims,
    q_exact_ideal,
    tangent_dims,
    tangent_dims_structured,
)


class TestQExactIdeal:
    """Test cases for the Q-exact classes of the Tjurina algebra."""

    def test_node_has_no_exact_classes(self, node):
        """On (x, y) the constant 1 survives in Ext^0."""
        ideal = q_exact_ideal(node)
        assert ideal.tjurina_dim == 1
        assert ideal.dimension == 0
        assert ideal.image_dim == 1
        assert is_closed_ideal(ideal)

    def test_a2_block(self, a2_block):
        """x is Q-exact on (x, x^2) while 1 is not."""
        ideal = q_exact_ideal(a2_block)
        assert ideal.tjurina_dim == 2
        assert ideal.dimension == 1
        (h,) = ideal.basis
        (x,) = a2_block.ring.gens
        assert h == x
        assert is_closed_ideal(ideal)

    def test_low_truncation(self, a2_block):
        with pytest.raises(NonStabilizationError):
            q_exact_ideal(a2_block, max_degree=1, window=4)


class TestDimensions:
    """Test cases for tangent and obstruction dimensions."""

    @pytest.mark.parametrize(
        "fixture,ext1,ideal,tangent,obstruction",
        [
            ("node", 0, 0, 0, 0),
            ("node_rank_two", 2, 0, 2, 1),
            ("a2_block", 1, 1, 2, 0),
        ],
    )
    def test_known_values(self, request, fixture, ext1, ideal, tangent, obstruction):
        m = request.getfixturevalue(fixture)
        with patch("mfkit.services.deform.logger") as mock_logger:
            report = tangent_dims(m)
        assert report.ext1_dim == ext1
        assert report.ideal_dim == ideal
        assert report.tangent_dim == tangent
        assert report.obstruction_dim == obstruction
        assert report.rigid_tangent_dim == ext1
        assert report.stabilized
        mock_logger.info.assert_called()

    def test_obstruction_dims(self, node_rank_two):
        assert obstruction_dims(node_rank_two) == 1

    def test_structured_node(self, node_rank_two, node_rank_two_form):
        """Only the anti-selfadjoint half of Ext^1 deforms the quadratic form."""
        report = tangent_dims_structured(node_rank_two, node_rank_two_form)
        structured = report.structured
        assert structured is not None
        assert structured.kind == "untwisted"
        assert structured.rigid_tangent_dim == 1
        assert structured.tangent_dim == 1
        assert structured.split.ext1 == report.ext1_dim == 2

    def test_structured_a2_block(self, a2_block, a2_form):
        report = tangent_dims_structured(a2_block, a2_form)
        structured = report.structured
        assert structured is not None
        assert structured.kind == "untwisted"
        assert (structured.split.ext1_plus, structured.split.ext1_minus) == (0, 1)
        assert structured.tangent_dim == 2
        assert structured.obstruction_dim == 0
