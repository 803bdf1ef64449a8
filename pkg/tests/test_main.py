"""Tests for the command-line entry point and its exit codes."""

import io
import json
from pathlib import Path

import pytest

from mfkit.main import main, run_batch

INVALID = """\
vars: x y
potential "w": x*y
mf "M" potential "w" { phi: [[x]] psi: [[x]] }
"""


@pytest.fixture
def invalid_file(tmp_path: Path) -> Path:
    path = tmp_path / "invalid.mf"
    path.write_text(INVALID, encoding="utf-8")
    return path


class TestExitCodes:
    """Test cases for the 0/1/2/3 exit code contract."""

    def test_success(self, capsys):
        assert main(["verify", "--example", "node"]) == 0
        assert capsys.readouterr().out == "M: valid\n"

    def test_invalid_factorization(self, invalid_file, capsys):
        assert main(["verify", str(invalid_file)]) == 1
        assert "M: invalid" in capsys.readouterr().out

    def test_parse_error(self, tmp_path, capsys):
        path = tmp_path / "broken.mf"
        path.write_text("vars: x\nmf\n", encoding="utf-8")
        assert main(["verify", str(path)]) == 2
        assert capsys.readouterr().out == ""

    def test_missing_file(self, tmp_path):
        assert main(["verify", str(tmp_path / "absent.mf")]) == 2

    def test_invalid_option_value(self):
        assert main(["ext", "--example", "node", "--window", "0"]) == 2

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as info:
            main(["factor"])
        assert info.value.code == 2

    def test_not_stabilized(self):
        argv = ["ext", "--example", "node_rank_two", "--max-degree", "1"]
        assert main(argv + ["--window", "5"]) == 3

    def test_split_needs_stabilization(self):
        argv = ["ext-split", "--example", "node_rank_two", "--max-degree", "1"]
        assert main(argv + ["--window", "5"]) == 3

    def test_versal_out_of_range(self):
        assert main(["versal", "--rank", "3"]) == 2


class TestOutput:
    """Test cases for input sources and output formats."""

    def test_records(self, capsys):
        assert main(["ext", "--example", "node_rank_two", "--format", "records"]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["dims"] == [2, 2]
        assert record["stabilized"] is True

    def test_stdin(self, monkeypatch, capsys):
        monkeypatch.setattr("sys.stdin", io.StringIO(INVALID))
        assert main(["verify", "-"]) == 1

    def test_named_operands(self, capsys):
        argv = ["tensor", "--example", "a2_blocks", "--source", "A", "--target", "B"]
        assert main(argv) == 0
        assert "vars: x" in capsys.readouterr().out

    def test_knorrer_new_vars(self, capsys):
        assert main(["knorrer", "--example", "cusp", "--new-vars", "u", "v"]) == 0
        assert "vars: z u v" in capsys.readouterr().out

    def test_examples(self, capsys):
        assert main(["examples"]) == 0
        assert "node:" in capsys.readouterr().out
        assert main(["examples", "--example", "cusp"]) == 0
        assert 'mf "M"' in capsys.readouterr().out


class TestBatch:
    """Test cases for batch files."""

    def test_order_and_exit_code(self, tmp_path, invalid_file):
        batch = tmp_path / "jobs.txt"
        batch.write_text(
            "# comment\n"
            "verify --example node\n"
            f"verify {invalid_file}\n"
            "\n"
            "ext --example node\n",
            encoding="utf-8",
        )
        outputs, code = run_batch(batch)
        assert code == 1
        assert outputs[0] == "M: valid\n"
        assert outputs[1].startswith("M: invalid")
        assert outputs[2].startswith("Ext^0(M, M) = 1")

    def test_parallel_keeps_order(self, tmp_path):
        batch = tmp_path / "jobs.txt"
        batch.write_text(
            "ext --example node\nverify --example square\n", encoding="utf-8"
        )
        serial, _ = run_batch(batch)
        parallel, code = run_batch(batch, jobs=2)
        assert parallel == serial
        assert code == 0

    def test_nested_batch(self, tmp_path):
        batch = tmp_path / "jobs.txt"
        batch.write_text("batch other.txt\n", encoding="utf-8")
        assert run_batch(batch)[1] == 2

    def test_bad_line(self, tmp_path):
        batch = tmp_path / "jobs.txt"
        batch.write_text("verify --no-such-flag\n", encoding="utf-8")
        assert run_batch(batch)[1] == 2

    def test_main_batch(self, tmp_path, capsys):
        batch = tmp_path / "jobs.txt"
        batch.write_text("verify --example node\n", encoding="utf-8")
        assert main(["batch", str(batch)]) == 0
        assert capsys.readouterr().out == "M: valid\n"
        assert main(["batch"]) == 2
