"""Command-line entry point: ``mfkit <command> [document] [options]``.

Exit codes: 0 success, 1 a verification failed, 2 usage or parse error,
3 non-stabilization or budget exhaustion.
"""

import argparse
import logging
import shlex
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from pydantic import ValidationError

from mfkit import __version__, config
from mfkit.commands import (
    COMMANDS,
    EXIT_UNSTABLE,
    EXIT_USAGE,
    FORMATS,
    emit,
    load_example,
    run,
)
from mfkit.document import InputDocument, parse
from mfkit.errors import BudgetExceededError, NonStabilizationError
from mfkit.schemas import CommandFlags
from mfkit.services.bilinear import KINDS
from mfkit.services.knorrer import VERSAL_MODES

# Setup logging
logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfkit",
        description="Exact computations with matrix factorizations.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("command", choices=[*COMMANDS, "batch"])
    parser.add_argument(
        "file",
        nargs="?",
        help="Input document, '-' for stdin; for 'batch' a file of command lines",
    )
    parser.add_argument("--example", help="Use a bundled example as the document")
    parser.add_argument("--name", help="Factorization (or example) to act on")
    parser.add_argument("--source", help="Source or left factorization")
    parser.add_argument("--target", help="Target or right factorization")
    parser.add_argument(
        "--structure",
        dest="structures",
        action="append",
        help="Structure name; repeat for two structures",
    )
    parser.add_argument("--morphism", help="Morphism for commutation-check")
    parser.add_argument("--new-vars", nargs="+", help="Fresh variables for theta")
    parser.add_argument("--kind", choices=KINDS, help="Structure kind to search")
    parser.add_argument(
        "--structure-degree", type=int, help="Entry degree bound for structure search"
    )
    parser.add_argument(
        "--max-degree",
        type=int,
        help=f"Largest truncation degree (default {config.MAX_DEGREE})",
    )
    parser.add_argument(
        "--window",
        type=int,
        help=f"Equal dimensions needed to stop (default {config.WINDOW})",
    )
    parser.add_argument(
        "--budget", type=int, help="Step cap (default MFKIT_BUDGET or 200000)"
    )
    parser.add_argument("--weights", type=int, nargs="+", help="Variable weights")
    parser.add_argument("--slack", type=int, help="Coboundary degree slack")
    parser.add_argument("--rank", type=int, help="Half rank of the versal family")
    parser.add_argument("--mode", choices=VERSAL_MODES, help="Versal family mode")
    parser.add_argument("--samples", type=int, help="Random morphisms per parity")
    parser.add_argument("--seed", type=int, help="Seed for random morphisms")
    parser.add_argument("--format", choices=FORMATS, default="text")
    parser.add_argument(
        "--jobs", type=int, default=1, help="Worker processes for 'batch'"
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v info, -vv debug"
    )
    return parser


def _configure_logging(verbose: int) -> None:
    level: Union[int, str] = config.LOG_LEVEL.upper()
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    logging.basicConfig(
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _flags(args: argparse.Namespace) -> CommandFlags:
    values = {
        key: value
        for key, value in vars(args).items()
        if key in CommandFlags.model_fields and value is not None
    }
    if args.command == "examples" and args.example is not None:
        values["name"] = args.example
    return CommandFlags(**values)


def _document(args: argparse.Namespace) -> Optional[InputDocument]:
    if args.command == "examples":
        return None
    if args.example is not None:
        return load_example(args.example)
    if args.file is None:
        return None
    if args.file == "-":
        return parse(sys.stdin.read())
    return parse(Path(args.file))


def execute(args: argparse.Namespace) -> Tuple[str, int]:
    """Run one parsed invocation and return its output and exit code."""
    try:
        flags = _flags(args)
        report = run(args.command, _document(args), flags)
    except ValidationError as exc:
        return "", _fail(f"invalid option: {exc}", EXIT_USAGE)
    except (NonStabilizationError, BudgetExceededError) as exc:
        return "", _fail(str(exc), EXIT_UNSTABLE)
    except ValueError as exc:
        return "", _fail(str(exc), EXIT_USAGE)
    except OSError as exc:
        return "", _fail(f"cannot read input: {exc}", EXIT_USAGE)
    return emit(report, args.format), report.exit_code


def _fail(message: str, code: int) -> int:
    logger.error(message)
    return code


def _batch_line(line: str) -> Tuple[str, int]:
    parser = build_parser()
    try:
        args = parser.parse_args(shlex.split(line))
    except SystemExit:
        return "", _fail(f"cannot parse batch line: {line}", EXIT_USAGE)
    if args.command == "batch":
        return "", _fail("batch files cannot nest", EXIT_USAGE)
    return execute(args)


def run_batch(path: Path, jobs: int = 1) -> Tuple[List[str], int]:
    """Run every non-empty, non-comment line of a batch file.

    Lines may run in parallel worker processes; outputs keep input order.
    """
    lines = [
        line.strip()
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.strip().startswith("#")
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_batch_line, lines))
    else:
        results = [_batch_line(line) for line in lines]
    code = max((code for _, code in results), default=0)
    return [output for output, _ in results], code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Called as main function of the program."""
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    if args.command == "batch":
        if args.file is None:
            return _fail("batch needs a file of command lines", EXIT_USAGE)
        try:
            outputs, code = run_batch(Path(args.file), args.jobs)
        except OSError as exc:
            return _fail(f"cannot read batch file: {exc}", EXIT_USAGE)
        sys.stdout.write("".join(outputs))
        return code
    output, code = execute(args)
    sys.stdout.write(output)
    return code


if __name__ == "__main__":
    sys.exit(main())
