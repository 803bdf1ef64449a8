"""Tests for command dispatch and report rendering."""

import json
from unittest.mock import patch

import pytest

from mfkit.commands import (
    COMMANDS,
    EXIT_INVALID,
    EXIT_OK,
    EXIT_UNSTABLE,
    bundled_examples,
    emit,
    load_example,
    run,
)
from mfkit.document import parse
from mfkit.errors import DocumentError
from mfkit.schemas import AdjointSplit, CommandFlags

BROKEN = """\
vars: x y
potential "w": x*y
mf "M" potential "w" {
  phi: [[x]]
  psi: [[x]]
}
"""


class TestFactorizationCommands:
    """Test cases for verify, dualities, sums and tensors."""

    def test_verify_valid(self):
        report = run("verify", load_example("node"))
        assert report.exit_code == EXIT_OK
        assert report.records[0].valid
        assert report.lines == ["M: valid"]

    def test_verify_invalid(self):
        report = run("verify", parse(BROKEN))
        assert report.exit_code == EXIT_INVALID
        assert report.records[0].violations

    def test_dual_details(self):
        report = run("dual", load_example("node"))
        record = report.records[0]
        assert record.valid
        assert record.details == {
            "equals_shifted_transpose": True,
            "equals_transposed_shift": True,
            "involutive": True,
        }
        assert parse(record.document).mfs

    def test_tensor_and_sum(self):
        document = load_example("a2_blocks")
        flags = CommandFlags(source="A", target="B")
        assert run("tensor", document, flags).records[0].valid
        assert run("direct-sum", document, flags).records[0].valid

    def test_ambiguous_input(self):
        with pytest.raises(DocumentError):
            run("shift", load_example("a2_blocks"))


class TestStructureCommands:
    """Test cases for structure verification, search and commutation."""

    def test_structure_verify(self):
        report = run("structure-verify", load_example("square"))
        assert [r.kind for r in report.records] == ["twisted", "untwisted"]
        assert report.exit_code == EXIT_OK

    def test_structure_search_on_node(self):
        report = run("structure-search", load_example("node"))
        dims = {r.kind: r.dims for r in report.records}
        assert dims == {"untwisted": [1, 0], "twisted": [0, 0]}
        assert report.records[0].sign == 1

    def test_commutation_check(self):
        flags = CommandFlags(samples=3, seed=5)
        report = run("commutation-check", load_example("node_rank_two"), flags)
        record = report.records[0]
        assert record.valid
        assert record.details["checked"] == 6

    def test_commutation_check_with_morphism(self):
        text = (
            'vars: x y\npotential "w": x*y\n'
            'mf "M" potential "w" { phi: [[x]] psi: [[y]] }\n'
            'structure "q" on "M" {\n'
            "  kind: untwisted; sign: +1; b0: [[1]]; b1: [[-1]]\n}\n"
            'morphism "f" from "M" to "M" degree even { S: [[x]] T: [[x]] }\n'
        )
        report = run("commutation-check", parse(text), CommandFlags(morphism="f"))
        assert report.records[0].valid


class TestExtCommands:
    """Test cases for ext and ext-split."""

    def test_ext(self):
        report = run("ext", load_example("node_rank_two"))
        record = report.records[0]
        assert record.dims == [2, 2]
        assert record.stabilized
        assert report.exit_code == EXIT_OK

    def test_ext_not_stabilized(self):
        flags = CommandFlags(max_degree=1, window=5)
        report = run("ext", load_example("node_rank_two"), flags)
        assert report.exit_code == EXIT_UNSTABLE
        assert "NOT stabilized" in report.lines[-1]

    def test_ext_split(self):
        report = run("ext-split", load_example("node_rank_two"))
        assert report.records[0].dims[2:] == [1, 1]

    def test_ext_split_reports_the_sweep_flag(self):
        split = AdjointSplit(
            ext0_plus=1,
            ext0_minus=0,
            ext1_plus=0,
            ext1_minus=1,
            ext0=1,
            ext1=1,
            stabilized=False,
        )
        with patch("mfkit.commands.ext_adjoint_split", return_value=split):
            report = run("ext-split", load_example("a2_blocks"))
        record = report.records[0]
        assert record.dims == [1, 0, 0, 1]
        assert record.stabilized is False


class TestKnorrerCommands:
    """Test cases for knorrer, knorrer-squared and versal."""

    def test_knorrer_on_cusp(self):
        flags = CommandFlags(new_vars=["x", "y"])
        record = run("knorrer", load_example("cusp"), flags).records[0]
        assert record.valid
        assert record.details["potential"] == "-z^3 + x*y"
        assert parse(record.document).variables == ("z", "x", "y")

    def test_knorrer_squared_with_structure(self):
        flags = CommandFlags(structures=["t"])
        record = run("knorrer-squared", load_example("square"), flags).records[0]
        assert (record.kind, record.sign) == ("twisted", -1)
        assert len(record.details["normalization"]) == 2

    def test_versal(self):
        record = run("versal", None, CommandFlags(rank=1)).records[0]
        assert record.valid
        assert record.details["tangent_dim"] == 2
        assert len(parse(record.document).mfs) == 2


class TestDeformCommands:
    """Test cases for deform and deform-structured."""

    def test_deform(self):
        flags = CommandFlags(name="A")
        record = run("deform", load_example("a2_blocks"), flags).records[0]
        assert record.dims == [1, 1, 2]
        assert record.details["obstruction_dim"] == 0

    def test_deform_structured(self):
        record = run("deform-structured", load_example("node_rank_two")).records[0]
        assert record.dims[0] == 1
        assert record.kind == "untwisted"


class TestDispatch:
    """Test cases for run, emit and bundled examples."""

    def test_unknown_command(self):
        with pytest.raises(DocumentError):
            run("factor", load_example("node"))

    def test_missing_document(self):
        with pytest.raises(DocumentError):
            run("verify")

    def test_every_command_is_listed(self):
        assert "deform-structured" in COMMANDS
        assert len(COMMANDS) == 16

    def test_records_are_deterministic(self):
        first = emit(run("ext", load_example("node")), "records")
        second = emit(run("ext", load_example("node")), "records")
        assert first == second
        record = json.loads(first.splitlines()[0])
        assert record["command"] == "ext"
        assert record["dims"] == [1, 0]
        assert "violations" not in record

    def test_unknown_format(self):
        with pytest.raises(DocumentError):
            emit(run("verify", load_example("node")), "yaml")

    def test_examples_listing(self):
        report = run("examples")
        names = [r.name for r in report.records]
        assert names == list(bundled_examples())
        assert all(r.details["summary"] for r in report.records)

    def test_single_example(self):
        report = run("examples", None, CommandFlags(name="cusp"))
        assert report.records[0].inputs == ["M"]

    def test_unknown_example(self):
        with pytest.raises(DocumentError):
            load_example("e8")
