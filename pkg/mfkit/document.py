"""Input documents: variables, potentials, factorizations, structures, morphisms.

The format is line-oriented text::

    vars: x y
    potential "w": x*y
    mf "M" potential "w" { phi: [[x]] psi: [[y]] }
    structure "q" on "M" { kind: untwisted; sign: +1; b0: [[1]]; b1: [[-1]] }
    morphism "f" from "M" to "M" degree even { S: [[1]] T: [[1]] }

``#`` starts a comment. A potential expression runs to the end of its line;
fields inside braces may be separated by ``;`` or ``,``. Every name lives in
one namespace and must be defined before it is referenced.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

from sympy.polys.rings import PolyRing

from mfkit.errors import DocumentError, MFKitError
from mfkit.services import poly
from mfkit.services.bilinear import KINDS, BilinearStructure
from mfkit.services.mf_core import (
    MatrixFactorization,
    MorphismPair,
    format_matrix,
    matrices_equal,
    poly_matrix,
)
from mfkit.services.poly import Polynomial

# Setup logging
logger = logging.getLogger(__name__)

Position = Tuple[int, int]
Rows = List[List[Polynomial]]
T = TypeVar("T")

_KEYWORDS = ("vars", "potential", "mf", "structure", "morphism")


@dataclass(eq=False)
class InputDocument:
    """A parsed document; dictionaries keep definition order.

    ``mf_potentials`` maps each factorization to the name of its potential and
    ``positions`` records where every name was defined.
    """

    variables: Tuple[str, ...] = ()
    ring: Optional[PolyRing] = None
    potentials: Dict[str, Polynomial] = field(default_factory=dict)
    mfs: Dict[str, MatrixFactorization] = field(default_factory=dict)
    mf_potentials: Dict[str, str] = field(default_factory=dict)
    structures: Dict[str, BilinearStructure] = field(default_factory=dict)
    morphisms: Dict[str, MorphismPair] = field(default_factory=dict)
    positions: Dict[str, Position] = field(default_factory=dict)

    def mf(self, name: str) -> MatrixFactorization:
        if name not in self.mfs:
            raise DocumentError(f"Undefined factorization {name!r}")
        return self.mfs[name]

    def structure(self, name: str) -> BilinearStructure:
        if name not in self.structures:
            raise DocumentError(f"Undefined structure {name!r}")
        return self.structures[name]

    def morphism(self, name: str) -> MorphismPair:
        if name not in self.morphisms:
            raise DocumentError(f"Undefined morphism {name!r}")
        return self.morphisms[name]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InputDocument):
            return NotImplemented
        if (
            self.variables != other.variables
            or self.potentials != other.potentials
            or self.mf_potentials != other.mf_potentials
            or list(self.mfs) != list(other.mfs)
            or list(self.structures) != list(other.structures)
            or list(self.morphisms) != list(other.morphisms)
        ):
            return False
        if any(self.mfs[k] != other.mfs[k] for k in self.mfs):
            return False
        if any(self.morphisms[k] != other.morphisms[k] for k in self.morphisms):
            return False
        for key, b in self.structures.items():
            c = other.structures[key]
            if (
                (b.kind, b.sign, b.host.name) != (c.kind, c.sign, c.host.name)
                or not matrices_equal(b.b0, c.b0)
                or not matrices_equal(b.b1, c.b1)
            ):
                return False
        return True


class _Scanner:
    """Character cursor with line/column tracking and a few token readers."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.index = 0
        self.line = 1
        self.column = 1

    @property
    def position(self) -> Position:
        return self.line, self.column

    def error(self, message: str, at: Optional[Position] = None) -> DocumentError:
        line, column = at or self.position
        return DocumentError(message, line, column)

    def _advance(self, count: int = 1) -> None:
        for ch in self.text[self.index : self.index + count]:
            if ch == "\n":
                self.line += 1
                self.column = 1
            else:
                self.column += 1
        self.index += count

    def peek_char(self) -> str:
        return self.text[self.index] if self.index < len(self.text) else ""

    def skip(self, newlines: bool = True) -> None:
        while self.index < len(self.text):
            ch = self.text[self.index]
            if ch == "#":
                while self.index < len(self.text) and self.text[self.index] != "\n":
                    self._advance()
            elif ch in " \t\r" or (newlines and ch == "\n"):
                self._advance()
            else:
                break

    def mark(self) -> Position:
        self.skip()
        return self.position

    def at_end(self) -> bool:
        self.skip()
        return self.index >= len(self.text)

    def word(self) -> str:
        self.skip()
        start = self.index
        while self.index < len(self.text) and (
            self.text[self.index].isalnum() or self.text[self.index] == "_"
        ):
            self._advance()
        return self.text[start : self.index]

    def expect_word(self, *expected: str) -> str:
        at = self.mark()
        word = self.word()
        if word not in expected:
            found = repr(word) if word else repr(self.peek_char() or "end of input")
            raise self.error(f"Expected {' or '.join(expected)}, found {found}", at)
        return word

    def accept(self, symbol: str) -> bool:
        self.skip()
        if self.text.startswith(symbol, self.index):
            self._advance(len(symbol))
            return True
        return False

    def expect(self, symbol: str) -> None:
        self.skip()
        if not self.accept(symbol):
            found = self.peek_char() or "end of input"
            raise self.error(f"Expected {symbol!r}, found {found!r}")

    def string(self) -> Tuple[str, Position]:
        self.skip()
        at = self.position
        if self.peek_char() != '"':
            raise self.error(f"Expected a quoted name, found {self.peek_char()!r}")
        self._advance()
        start = self.index
        while self.peek_char() not in ('"', "\n", ""):
            self._advance()
        if self.peek_char() != '"':
            raise self.error("Unterminated quoted name", at)
        name = self.text[start : self.index]
        self._advance()
        if not name:
            raise self.error("Empty name", at)
        return name, at

    def rest_of_line(self) -> Tuple[str, Position]:
        self.skip(newlines=False)
        at = self.position
        start = self.index
        while self.peek_char() not in ("\n", "", "#"):
            self._advance()
        return self.text[start : self.index].strip(), at

    def expression(self) -> Tuple[str, Position]:
        """Read a matrix entry up to a top-level ',' or ']'."""
        self.skip()
        at = self.position
        start = self.index
        depth = 0
        while True:
            ch = self.peek_char()
            if ch == "":
                raise self.error("Unterminated matrix", at)
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif depth == 0 and ch in ",]":
                break
            elif ch in "[{}" and depth == 0:
                raise self.error(f"Unexpected {ch!r} in matrix entry")
            self._advance()
        return self.text[start : self.index].replace("\n", " ").strip(), at


class _Parser:
    def __init__(self, text: str) -> None:
        self.scanner = _Scanner(text)
        self.document = InputDocument()

    def parse(self) -> InputDocument:
        while not self.scanner.at_end():
            at = self.scanner.position
            keyword = self.scanner.expect_word(*_KEYWORDS)
            if keyword != "vars" and self.document.ring is None:
                raise self.scanner.error(f"'{keyword}' before 'vars:'", at)
            getattr(self, f"_{keyword}")(at)
        return self.document

    def _define(self, name: str, at: Position) -> None:
        if name in self.document.positions:
            line, column = self.document.positions[name]
            raise self.scanner.error(
                f"Duplicate name {name!r} (first defined at line {line}, "
                f"column {column})",
                at,
            )
        self.document.positions[name] = at

    def _vars(self, at: Position) -> None:
        if self.document.ring is not None:
            raise self.scanner.error("Duplicate 'vars:' declaration", at)
        self.scanner.expect(":")
        text, where = self.scanner.rest_of_line()
        names = text.split()
        try:
            ring = poly.make_ring(names)
        except ValueError as exc:
            raise self.scanner.error(str(exc), where) from exc
        self.document.variables = tuple(names)
        self.document.ring = ring

    def _polynomial(self, text: str, at: Position) -> Polynomial:
        assert self.document.ring is not None
        try:
            return poly.parse_polynomial(text, self.document.ring)
        except DocumentError as exc:
            raise self.scanner.error(exc.message, at) from exc

    def _potential(self, at: Position) -> None:
        name, where = self.scanner.string()
        self._define(name, where)
        self.scanner.expect(":")
        text, expr_at = self.scanner.rest_of_line()
        self.document.potentials[name] = self._polynomial(text, expr_at)

    def _matrix(self) -> Tuple[Rows, Position]:
        self.scanner.skip()
        at = self.scanner.position
        self.scanner.expect("[")
        rows: Rows = []
        width: Optional[int] = None
        while True:
            row_at = self.scanner.mark()
            self.scanner.expect("[")
            row = []
            while True:
                text, entry_at = self.scanner.expression()
                row.append(self._polynomial(text, entry_at))
                if not self.scanner.accept(","):
                    break
            self.scanner.expect("]")
            if width is not None and len(row) != width:
                raise self.scanner.error(
                    f"Row has {len(row)} entries, expected {width}", row_at
                )
            width = len(row)
            rows.append(row)
            if not self.scanner.accept(","):
                break
        self.scanner.expect("]")
        return rows, at

    def _fields(self, names: Sequence[str]) -> Dict[str, Tuple[Any, Position]]:
        """Read ``{ key: value ... }`` with each key of ``names`` exactly once."""
        self.scanner.expect("{")
        values: Dict[str, Tuple[Any, Position]] = {}
        while not self.scanner.accept("}"):
            at = self.scanner.mark()
            key = self.scanner.expect_word(*names)
            if key in values:
                raise self.scanner.error(f"Duplicate field {key!r}", at)
            self.scanner.expect(":")
            if key == "kind":
                values[key] = (self.scanner.expect_word(*KINDS), at)
            elif key == "sign":
                values[key] = (self._sign(), at)
            else:
                values[key] = self._matrix()
            if not self.scanner.accept(";"):
                self.scanner.accept(",")
        missing = [key for key in names if key not in values]
        if missing:
            raise self.scanner.error(f"Missing field(s) {', '.join(missing)}")
        return values

    def _sign(self) -> int:
        at = self.scanner.mark()
        negative = self.scanner.accept("-")
        if not negative:
            self.scanner.accept("+")
        if self.scanner.word() != "1":
            raise self.scanner.error("Expected sign +1 or -1", at)
        return -1 if negative else 1

    def _resolve(self, table: Dict[str, T], label: str) -> Tuple[str, T]:
        name, at = self.scanner.string()
        if name not in table:
            raise self.scanner.error(f"Undefined {label} {name!r}", at)
        return name, table[name]

    def _wrap(self, exc: MFKitError, at: Position) -> DocumentError:
        return self.scanner.error(str(exc), at)

    def _mf(self, at: Position) -> None:
        name, where = self.scanner.string()
        self._define(name, where)
        self.scanner.expect_word("potential")
        w_name, w = self._resolve(self.document.potentials, "potential")
        values = self._fields(("phi", "psi"))
        assert self.document.ring is not None
        try:
            m = MatrixFactorization(
                poly_matrix(values["phi"][0], self.document.ring),
                poly_matrix(values["psi"][0], self.document.ring),
                w,
                name,
            )
        except MFKitError as exc:
            raise self._wrap(exc, where) from exc
        self.document.mfs[name] = m
        self.document.mf_potentials[name] = w_name

    def _structure(self, at: Position) -> None:
        name, where = self.scanner.string()
        self._define(name, where)
        self.scanner.expect_word("on")
        _, host = self._resolve(self.document.mfs, "factorization")
        values = self._fields(("kind", "sign", "b0", "b1"))
        assert self.document.ring is not None
        ring = self.document.ring
        try:
            b = BilinearStructure(
                values["kind"][0],
                values["sign"][0],
                poly_matrix(values["b0"][0], ring),
                poly_matrix(values["b1"][0], ring),
                host,
                name,
            )
        except MFKitError as exc:
            raise self._wrap(exc, where) from exc
        self.document.structures[name] = b

    def _morphism(self, at: Position) -> None:
        name, where = self.scanner.string()
        self._define(name, where)
        self.scanner.expect_word("from")
        _, source = self._resolve(self.document.mfs, "factorization")
        self.scanner.expect_word("to")
        _, target = self._resolve(self.document.mfs, "factorization")
        self.scanner.expect_word("degree")
        odd = self.scanner.expect_word("even", "odd") == "odd"
        values = self._fields(("S", "T"))
        assert self.document.ring is not None
        ring = self.document.ring
        try:
            f = MorphismPair(
                source,
                target,
                odd,
                poly_matrix(values["S"][0], ring),
                poly_matrix(values["T"][0], ring),
            )
        except MFKitError as exc:
            raise self._wrap(exc, where) from exc
        self.document.morphisms[name] = f


def parse(source: Union[str, Path]) -> InputDocument:
    """Parse document text, or the file at ``source`` when given a Path.

    Raises:
        DocumentError: On syntax errors (with line and column), undefined or
            duplicate names, or shape errors in matrices
    """
    text = source.read_text(encoding="utf-8") if isinstance(source, Path) else source
    document = _Parser(text).parse()
    logger.debug(
        f"Parsed document over {list(document.variables)}: "
        f"{len(document.mfs)} factorizations, {len(document.structures)} "
        f"structures, {len(document.morphisms)} morphisms"
    )
    return document


def build_document(
    mfs: Sequence[MatrixFactorization],
    structures: Sequence[BilinearStructure] = (),
    morphisms: Sequence[Tuple[str, MorphismPair]] = (),
) -> InputDocument:
    """Assemble a document from computed objects over one ring.

    Potentials are named ``w``, ``w2``, ... in order of first appearance.

    Raises:
        DocumentError: If the objects use different variable lists or a
            structure or morphism refers to a factorization not listed
    """
    if not mfs:
        raise DocumentError("A document needs at least one factorization")
    ring = mfs[0].ring
    document = InputDocument(
        variables=tuple(poly.variable_names(ring)), ring=ring
    )
    for m in mfs:
        if m.ring != ring:
            raise DocumentError(
                f"{m.name} is over {m.variables}, expected {list(document.variables)}"
            )
        if m.name in document.positions:
            raise DocumentError(f"Duplicate name {m.name!r}")
        w_name = next(
            (k for k, w in document.potentials.items() if w == m.potential), None
        )
        if w_name is None:
            count = len(document.potentials)
            w_name = "w" if not count else f"w{count + 1}"
            document.potentials[w_name] = m.potential
            document.positions[w_name] = (0, 0)
        document.mfs[m.name] = m
        document.mf_potentials[m.name] = w_name
        document.positions[m.name] = (0, 0)
    for b in structures:
        if document.mfs.get(b.host.name) != b.host:
            raise DocumentError(f"Structure {b.name} lives on an unlisted host")
        document.structures[b.name] = b
        document.positions[b.name] = (0, 0)
    for name, f in morphisms:
        for end in (f.source, f.target):
            if document.mfs.get(end.name) != end:
                raise DocumentError(
                    f"Morphism {name} ends at an unlisted factorization"
                )
        document.morphisms[name] = f
        document.positions[name] = (0, 0)
    return document


def emit_document(document: InputDocument) -> str:
    """Print a document canonically; parsing the output gives an equal document."""
    lines = [f"vars: {' '.join(document.variables)}"]
    for name, w in document.potentials.items():
        lines.append(f'potential "{name}": {poly.format_polynomial(w)}')
    for name, m in document.mfs.items():
        lines += [
            f'mf "{name}" potential "{document.mf_potentials[name]}" {{',
            f"  phi: {format_matrix(m.phi)}",
            f"  psi: {format_matrix(m.psi)}",
            "}",
        ]
    for name, b in document.structures.items():
        lines += [
            f'structure "{name}" on "{b.host.name}" {{',
            f"  kind: {b.kind}; sign: {b.sign:+d}",
            f"  b0: {format_matrix(b.b0)}",
            f"  b1: {format_matrix(b.b1)}",
            "}",
        ]
    for name, f in document.morphisms.items():
        lines += [
            f'morphism "{name}" from "{f.source.name}" to "{f.target.name}" '
            f"degree {f.degree} {{",
            f"  S: {format_matrix(f.s)}",
            f"  T: {format_matrix(f.t)}",
            "}",
        ]
    return "\n".join(lines) + "\n"
