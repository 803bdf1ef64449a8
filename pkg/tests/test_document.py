"""Tests for parsing and printing input documents."""

from pathlib import Path

import pytest

from mfkit.commands import bundled_examples, load_example
from mfkit.document import build_document, emit_document, parse
from mfkit.errors import DocumentError
from mfkit.services.bilinear import TWISTED, UNTWISTED, verify_structure
from mfkit.services.mf_core import make_mf, mf_xy, verify

NODE = """\
# the node
vars: x y
potential "w": x*y   # trailing comment
mf "M" potential "w" {
  phi: [[x]]
  psi: [[y]]
}
structure "q" on "M" { kind: untwisted; sign: +1; b0: [[1]]; b1: [[-1]] }
morphism "f" from "M" to "M" degree odd { S: [[1]], T: [[-1]] }
"""


def _error(text: str) -> DocumentError:
    with pytest.raises(DocumentError) as info:
        parse(text)
    return info.value


class TestParse:
    """Test cases for reading documents."""

    def test_node(self):
        document = parse(NODE)
        assert document.variables == ("x", "y")
        m = document.mf("M")
        assert verify(m).valid
        assert document.mf_potentials == {"M": "w"}
        q = document.structure("q")
        assert (q.kind, q.sign) == (UNTWISTED, 1)
        assert verify_structure(q).valid
        f = document.morphism("f")
        assert f.odd
        assert f.source is m

    def test_positions(self):
        document = parse(NODE)
        assert document.positions["w"] == (3, 11)
        assert document.positions["M"] == (4, 4)

    def test_multiline_entries(self):
        document = parse(
            'vars: x y\npotential "w": x*y\n'
            'mf "M" potential "w" { phi: [[x,\n 0], [0, y]]\n psi: [[y, 0],\n'
            " [0, (x)]] }\n"
        )
        assert document.mf("M").rank == 2

    def test_from_path(self, tmp_path: Path):
        path = tmp_path / "node.mf"
        path.write_text(NODE, encoding="utf-8")
        assert parse(path) == parse(NODE)

    def test_undefined_lookup(self):
        document = parse(NODE)
        with pytest.raises(DocumentError):
            document.mf("N")
        with pytest.raises(DocumentError):
            document.structure("t")
        with pytest.raises(DocumentError):
            document.morphism("g")


class TestErrors:
    """Test cases for error messages and positions."""

    def test_keyword_before_vars(self):
        error = _error('potential "w": x\n')
        assert (error.line, error.column) == (1, 1)

    def test_unknown_keyword(self):
        error = _error("vars: x\nmatrix\n")
        assert (error.line, error.column) == (2, 1)
        assert "Expected" in error.message

    def test_unknown_variable(self):
        error = _error('vars: x y\npotential "w": x*z\n')
        assert (error.line, error.column) == (2, 16)
        assert "'z'" in error.message

    def test_undefined_potential(self):
        error = _error('vars: x y\npotential "w": x*y\nmf "M" potential "v" {\n')
        assert (error.line, error.column) == (3, 18)
        assert "Undefined potential" in error.message

    def test_ragged_matrix(self):
        error = _error(
            'vars: x y\npotential "w": x*y\nmf "M" potential "w" {\n'
            "  phi: [[x, y], [x]]\n  psi: [[y]]\n}\n"
        )
        assert (error.line, error.column) == (4, 17)

    def test_duplicate_name(self):
        error = _error(NODE + 'potential "M": x\n')
        assert "first defined at line 4" in error.message
        assert error.line == 10

    def test_duplicate_field(self):
        error = _error(
            'vars: x y\npotential "w": x*y\n'
            'mf "M" potential "w" { phi: [[x]] phi: [[x]] }\n'
        )
        assert "Duplicate field" in error.message

    def test_missing_field(self):
        error = _error(
            'vars: x y\npotential "w": x*y\nmf "M" potential "w" { phi: [[x]] }\n'
        )
        assert "psi" in error.message

    def test_shape_error_is_positioned(self):
        error = _error(
            'vars: x y\npotential "w": x*y\n'
            'mf "M" potential "w" { phi: [[x]] psi: [[y, 0], [0, y]] }\n'
        )
        assert (error.line, error.column) == (3, 4)

    def test_bad_sign(self):
        error = _error(
            NODE.split("structure")[0]
            + 'structure "q" on "M" { kind: twisted; sign: 2; b0: [[1]]; b1: [[1]] }\n'
        )
        assert "sign" in error.message

    def test_unterminated_matrix(self):
        error = _error(
            'vars: x y\npotential "w": x*y\nmf "M" potential "w" { phi: [[x\n'
        )
        assert "Unterminated" in error.message

    def test_duplicate_vars(self):
        error = _error("vars: x\nvars: y\n")
        assert error.line == 2


class TestEmit:
    """Test cases for canonical printing."""

    @pytest.mark.parametrize("name", sorted(bundled_examples()))
    def test_bundled_examples_reparse(self, name):
        document = load_example(name)
        assert document.mfs
        text = emit_document(document)
        assert parse(text) == document
        assert emit_document(parse(text)) == text

    def test_node_text(self):
        text = emit_document(parse(NODE))
        assert text.splitlines()[:5] == [
            "vars: x y",
            'potential "w": x*y',
            'mf "M" potential "w" {',
            "  phi: [[x]]",
            "  psi: [[y]]",
        ]
        assert "  kind: untwisted; sign: +1" in text
        assert 'morphism "f" from "M" to "M" degree odd {' in text

    def test_build_document_names_potentials(self):
        m = mf_xy(1, 1)
        x, y = m.ring.gens
        other = make_mf([[x**2]], [[y]], x**2 * y, "K")
        document = build_document([m, other])
        assert list(document.potentials) == ["w", "w2"]
        assert parse(emit_document(document)) == document

    def test_build_document_needs_one_ring(self, a2_block):
        with pytest.raises(DocumentError):
            build_document([mf_xy(1, 0), a2_block])

    def test_twisted_structure_survives(self):
        document = load_example("square")
        assert document.structure("t").kind == TWISTED
        assert parse(emit_document(document)).structure("t").kind == TWISTED
