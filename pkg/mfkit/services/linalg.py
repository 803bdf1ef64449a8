"""Exact rational linear algebra.

Rank, kernel bases and particular solutions of linear systems over QQ. The
elimination is sympy's fraction-free (Bareiss) row reduction on sparse
``DomainMatrix`` values with denominators cleared row by row first.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from mfkit import config
from mfkit.errors import BudgetExceededError, DimensionMismatchError

# Setup logging
logger = logging.getLogger(__name__)

Vector = Tuple[object, ...]


@dataclass(frozen=True)
class RationalMatrix:
    """A rows × cols matrix over QQ stored as its nonzero entries."""

    rows: int
    cols: int
    entries: Mapping[Tuple[int, int], object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise DimensionMismatchError(
                f"Invalid shape {self.rows}x{self.cols}"
            )
        clean = {}
        for (i, j), value in self.entries.items():
            if not (0 <= i < self.rows and 0 <= j < self.cols):
                raise DimensionMismatchError(
                    f"Entry ({i}, {j}) outside a {self.rows}x{self.cols} matrix"
                )
            value = QQ.convert(value)
            if value:
                clean[(i, j)] = value
        object.__setattr__(self, "entries", clean)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[object]]) -> "RationalMatrix":
        """Build a matrix from a dense list of rows."""
        height = len(rows)
        width = len(rows[0]) if rows else 0
        if any(len(row) != width for row in rows):
            raise DimensionMismatchError("Rows of unequal length")
        return cls(
            height,
            width,
            {(i, j): v for i, row in enumerate(rows) for j, v in enumerate(row)},
        )

    @classmethod
    def from_columns(
        cls, rows: int, columns: Sequence[Mapping[int, object]]
    ) -> "RationalMatrix":
        """Build a matrix from sparse columns given as ``row -> value`` maps."""
        return cls(
            rows,
            len(columns),
            {(i, j): v for j, column in enumerate(columns) for i, v in column.items()},
        )

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls(n, n, {(i, i): QQ.one for i in range(n)})

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RationalMatrix":
        return cls(rows, cols, {})

    def entry(self, i: int, j: int) -> object:
        return self.entries.get((i, j), QQ.zero)

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(
            self.cols, self.rows, {(j, i): v for (i, j), v in self.entries.items()}
        )

    def select_rows(self, keep: Iterable[int]) -> "RationalMatrix":
        """Restrict to the given rows, renumbered in order."""
        index = {old: new for new, old in enumerate(keep)}
        return RationalMatrix(
            len(index),
            self.cols,
            {(index[i], j): v for (i, j), v in self.entries.items() if i in index},
        )

    def dense(self) -> List[List[object]]:
        grid = [[QQ.zero] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            grid[i][j] = v
        return grid

    def matvec(self, vector: Sequence[object]) -> Vector:
        """Multiply by a column vector."""
        if len(vector) != self.cols:
            raise DimensionMismatchError(
                f"Vector of length {len(vector)} for {self.cols} columns"
            )
        out = [QQ.zero] * self.rows
        for (i, j), v in self.entries.items():
            out[i] += v * QQ.convert(vector[j])
        return tuple(out)


def _check_budget(m: RationalMatrix, budget: Optional[int]) -> None:
    budget = config.budget_from_env() if budget is None else budget
    if m.cols > budget:
        raise BudgetExceededError(
            f"Linear system with {m.cols} unknowns exceeds the budget of {budget}"
        )


def _reduced_rows(
    m: RationalMatrix,
) -> Tuple[Dict[int, Dict[int, object]], Tuple[int, ...]]:
    """Fraction-free row reduction, normalized so pivots are 1.

    Returns the nonzero rows of the reduced row echelon form keyed by row
    index, and the pivot columns.
    """
    if not m.entries:
        return {}, ()
    rows: Dict[int, Dict[int, object]] = {}
    for (i, j), v in m.entries.items():
        rows.setdefault(i, {})[j] = v
    dm = DomainMatrix(rows, (m.rows, m.cols), QQ)
    rref, den, pivots = dm.rref_den(method="CD", keep_domain=False)
    domain = rref.domain
    scale = QQ.convert_from(den, domain)
    reduced = {
        i: {j: QQ.convert_from(v, domain) / scale for j, v in row.items()}
        for i, row in rref.to_sdm().items()
    }
    logger.debug(
        f"Reduced a {m.rows}x{m.cols} system with {len(m.entries)} entries: "
        f"rank {len(pivots)}"
    )
    return reduced, tuple(pivots)


def rank(m: RationalMatrix, budget: Optional[int] = None) -> int:
    """Return the exact rank of ``m``."""
    _check_budget(m, budget)
    return len(_reduced_rows(m)[1])


def pivot_columns(m: RationalMatrix, budget: Optional[int] = None) -> Tuple[int, ...]:
    """Return the pivot columns, i.e. the first maximal independent set of columns."""
    _check_budget(m, budget)
    return _reduced_rows(m)[1]


def kernel_basis(m: RationalMatrix, budget: Optional[int] = None) -> List[Vector]:
    """Return an exact basis of the right kernel of ``m``.

    Each basis vector has a 1 in one free column and zeros in the others.
    """
    _check_budget(m, budget)
    reduced, pivots = _reduced_rows(m)
    pivot_set = set(pivots)
    rows_by_pivot = [reduced.get(k, {}) for k in range(len(pivots))]
    basis: List[Vector] = []
    for free in range(m.cols):
        if free in pivot_set:
            continue
        vector = [QQ.zero] * m.cols
        vector[free] = QQ.one
        for k, p in enumerate(pivots):
            value = rows_by_pivot[k].get(free)
            if value:
                vector[p] = -value
        basis.append(tuple(vector))
    return basis


def solve(
    m: RationalMatrix, rhs: Sequence[object], budget: Optional[int] = None
) -> Optional[Vector]:
    """Return one exact solution of ``m · v = rhs``, or None when inconsistent.

    Raises:
        DimensionMismatchError: If ``rhs`` does not have one entry per row
    """
    if len(rhs) != m.rows:
        raise DimensionMismatchError(
            f"Right-hand side of length {len(rhs)} for {m.rows} rows"
        )
    _check_budget(m, budget)
    augmented = dict(m.entries)
    for i, v in enumerate(rhs):
        augmented[(i, m.cols)] = v
    reduced, pivots = _reduced_rows(RationalMatrix(m.rows, m.cols + 1, augmented))
    if m.cols in pivots:
        return None
    solution = [QQ.zero] * m.cols
    for k, p in enumerate(pivots):
        solution[p] = reduced.get(k, {}).get(m.cols, QQ.zero)
    return tuple(solution)


def inverse(m: RationalMatrix) -> Optional[RationalMatrix]:
    """Return the inverse of a square matrix, or None when it is singular."""
    if m.rows != m.cols:
        raise DimensionMismatchError(f"Cannot invert a {m.rows}x{m.cols} matrix")
    n = m.rows
    augmented = dict(m.entries)
    for i in range(n):
        augmented[(i, n + i)] = QQ.one
    reduced, pivots = _reduced_rows(RationalMatrix(n, 2 * n, augmented))
    if pivots[:n] != tuple(range(n)):
        return None
    return RationalMatrix(
        n,
        n,
        {
            (i, j - n): v
            for i, row in reduced.items()
            for j, v in row.items()
            if j >= n
        },
    )


def cokernel_dimension(m: RationalMatrix, budget: Optional[int] = None) -> int:
    """Return rows - rank, the dimension of the cokernel of ``m``."""
    return m.rows - rank(m, budget)


def span_rank(vectors: Sequence[Mapping[int, object]], length: int) -> int:
    """Return the dimension of the span of sparse vectors of a given length."""
    if not vectors:
        return 0
    return rank(RationalMatrix.from_columns(length, vectors))
