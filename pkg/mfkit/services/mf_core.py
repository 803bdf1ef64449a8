"""Matrix factorizations and their basic constructions.

A matrix factorization of a potential w is a pair of square polynomial
matrices (phi, psi) with phi*psi = psi*phi = w*1 whose entries vanish at the
origin. This module builds and verifies them, and implements shift, the two
dualities, direct sums, the Kronecker tensor product, morphisms, the gauge
action, cokernel presentations and the standard example families.

Polynomial matrices are sympy ``DomainMatrix`` values over ``QQ[vars]``.
"""

import logging
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.rings import PolyElement, PolyRing

from mfkit.errors import (
    DimensionMismatchError,
    NotInvertibleError,
    PotentialMismatchError,
    VariableMismatchError,
)
from mfkit.schemas import VerificationReport, Violation
from mfkit.services import linalg, poly
from mfkit.services.poly import Monomial, Polynomial

# Setup logging
logger = logging.getLogger(__name__)


# Polynomial matrices


def _coerce(entry: object, ring: PolyRing) -> Polynomial:
    if isinstance(entry, PolyElement):
        return poly.embed(entry, ring)
    return ring.ground_new(QQ.convert(entry))


def poly_matrix(rows: Sequence[Sequence[object]], ring: PolyRing) -> DomainMatrix:
    """Build a dense polynomial matrix over ``ring`` from rows of entries.

    Entries may be polynomials over a subring or rational constants.
    """
    data = [[_coerce(e, ring) for e in row] for row in rows]
    width = len(data[0]) if data else 0
    if any(len(row) != width for row in data):
        raise DimensionMismatchError("Matrix rows have unequal lengths")
    return DomainMatrix(data, (len(data), width), ring.to_domain())


def zero_matrix(rows: int, cols: int, ring: PolyRing) -> DomainMatrix:
    return poly_matrix([[ring.zero] * cols for _ in range(rows)], ring)


def scalar_matrix(n: int, value: Polynomial) -> DomainMatrix:
    """Return ``value`` times the n×n identity."""
    ring = value.ring
    return poly_matrix(
        [[value if i == j else ring.zero for j in range(n)] for i in range(n)], ring
    )


def identity_matrix(n: int, ring: PolyRing) -> DomainMatrix:
    return scalar_matrix(n, ring.one)


def matrix_ring(m: DomainMatrix) -> PolyRing:
    return m.domain.ring


def entries(m: DomainMatrix) -> List[List[Polynomial]]:
    return m.to_list()


def convert_matrix(m: DomainMatrix, ring: PolyRing) -> DomainMatrix:
    """Move every entry into ``ring``."""
    if matrix_ring(m) == ring:
        return m
    return poly_matrix(entries(m), ring)


def matrices_equal(a: DomainMatrix, b: DomainMatrix) -> bool:
    return a.shape == b.shape and entries(a) == entries(b)


def is_zero_matrix(m: DomainMatrix) -> bool:
    return all(not e for row in entries(m) for e in row)


def block(grid: Sequence[Sequence[DomainMatrix]]) -> DomainMatrix:
    """Assemble a block matrix from a grid of conforming blocks."""
    rows = []
    for row in grid:
        rows.append(row[0] if len(row) == 1 else row[0].hstack(*row[1:]))
    return rows[0] if len(rows) == 1 else rows[0].vstack(*rows[1:])


def submatrix(m: DomainMatrix, rows: range, cols: range) -> DomainMatrix:
    return m.extract(list(rows), list(cols))


def kron(a: DomainMatrix, b: DomainMatrix) -> DomainMatrix:
    """Kronecker product; the row index of ``a`` is the outer index."""
    ea, eb = entries(a), entries(b)
    (ra, ca), (rb, cb) = a.shape, b.shape
    rows = [
        [ea[i1][j1] * eb[i2][j2] for j1 in range(ca) for j2 in range(cb)]
        for i1 in range(ra)
        for i2 in range(rb)
    ]
    return poly_matrix(rows, matrix_ring(a))


def transpose(m: DomainMatrix) -> DomainMatrix:
    return m.transpose()


def map_entries(m: DomainMatrix, func) -> DomainMatrix:  # type: ignore[no-untyped-def]
    """Apply ``func`` to every entry, keeping the ring."""
    return poly_matrix([[func(e) for e in row] for row in entries(m)], matrix_ring(m))


def max_entry_degree(m: DomainMatrix, weights: Optional[Sequence[int]] = None) -> int:
    """Largest (weighted) degree among the entries; -1 for the zero matrix."""
    return max(
        (poly.total_degree(e, weights) for row in entries(m) for e in row), default=-1
    )


def truncate_matrix(
    m: DomainMatrix, degree: int, weights: Optional[Sequence[int]] = None
) -> DomainMatrix:
    return map_entries(m, lambda e: poly.truncate(e, degree, weights))


def constant_part(m: DomainMatrix) -> linalg.RationalMatrix:
    """Evaluate a polynomial matrix at the origin."""
    rows, cols = m.shape
    grid = entries(m)
    return linalg.RationalMatrix(
        rows,
        cols,
        {(i, j): grid[i][j].const() for i in range(rows) for j in range(cols)},
    )


def invertible_at_origin(m: DomainMatrix) -> bool:
    rows, cols = m.shape
    return rows == cols and linalg.rank(constant_part(m)) == rows


def matrix_inverse(
    m: DomainMatrix,
    degree: Optional[int] = None,
    weights: Optional[Sequence[int]] = None,
) -> Tuple[DomainMatrix, bool]:
    """Invert a matrix whose constant term is invertible.

    The inverse is the power series sum of (-S0^-1 N)^k S0^-1 with S = S0 + N,
    truncated at ``degree``. The default degree (n-1)·maxdeg(S) is enough to
    reach the polynomial inverse whenever one exists.

    Returns:
        Tuple of the (truncated) inverse and a flag that is True when it is an
        exact two-sided inverse

    Raises:
        NotInvertibleError: If the constant term is singular
    """
    rows, cols = m.shape
    if rows != cols:
        raise DimensionMismatchError(f"Cannot invert a {rows}x{cols} matrix")
    ring = matrix_ring(m)
    constant_inverse = linalg.inverse(constant_part(m))
    if constant_inverse is None:
        raise NotInvertibleError("Matrix is not invertible at the origin")
    if degree is None:
        degree = max(0, (rows - 1) * max_entry_degree(m, weights))

    start = poly_matrix(constant_inverse.dense(), ring)
    nilpotent = m - poly_matrix(constant_part(m).dense(), ring)
    step = -(start * nilpotent)
    term = start
    result = zero_matrix(rows, rows, ring)
    while not is_zero_matrix(term):
        result = result + term
        term = truncate_matrix(step * term, degree, weights)
    identity = identity_matrix(rows, ring)
    exact = matrices_equal(m * result, identity) and matrices_equal(
        result * m, identity
    )
    return result, exact


def format_matrix(m: DomainMatrix) -> str:
    """Print a matrix in the bracketed document syntax."""
    return (
        "["
        + ", ".join(
            "[" + ", ".join(poly.format_polynomial(e) for e in row) + "]"
            for row in entries(m)
        )
        + "]"
    )


# Matrix factorizations


@dataclass(frozen=True, eq=False)
class MatrixFactorization:
    """A pair (phi, psi) of r×r polynomial matrices with a declared potential.

    phi maps M0 to M1 and psi maps M1 back to M0.
    """

    phi: DomainMatrix
    psi: DomainMatrix
    potential: Polynomial
    name: str = "M"

    def __post_init__(self) -> None:
        if self.phi.shape != self.psi.shape:
            raise DimensionMismatchError(
                f"phi is {self.phi.shape} but psi is {self.psi.shape}"
            )
        rows, cols = self.phi.shape
        if rows != cols:
            raise DimensionMismatchError(f"phi must be square, got {rows}x{cols}")
        if rows < 1:
            raise DimensionMismatchError("Rank-0 factorizations are not allowed")
        ring = self.potential.ring
        if matrix_ring(self.phi) != ring or matrix_ring(self.psi) != ring:
            raise VariableMismatchError(
                "phi, psi and the potential must share one variable list"
            )

    @property
    def rank(self) -> int:
        return self.phi.shape[0]

    @property
    def ring(self) -> PolyRing:
        return self.potential.ring

    @property
    def variables(self) -> List[str]:
        return poly.variable_names(self.ring)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MatrixFactorization):
            return NotImplemented
        return (
            self.ring == other.ring
            and self.potential == other.potential
            and matrices_equal(self.phi, other.phi)
            and matrices_equal(self.psi, other.psi)
        )

    def renamed(self, name: str) -> "MatrixFactorization":
        return MatrixFactorization(self.phi, self.psi, self.potential, name)


def make_mf(
    phi: Sequence[Sequence[object]],
    psi: Sequence[Sequence[object]],
    potential: Polynomial,
    name: str = "M",
) -> MatrixFactorization:
    """Build a factorization from rows of entries over the potential's ring."""
    ring = potential.ring
    return MatrixFactorization(
        poly_matrix(phi, ring), poly_matrix(psi, ring), potential, name
    )


def convert_mf(m: MatrixFactorization, ring: PolyRing) -> MatrixFactorization:
    """Move a factorization into a ring containing its variables."""
    if m.ring == ring:
        return m
    return MatrixFactorization(
        convert_matrix(m.phi, ring),
        convert_matrix(m.psi, ring),
        poly.embed(m.potential, ring),
        m.name,
    )


def q_matrix(m: MatrixFactorization) -> DomainMatrix:
    """The odd operator Q = [[0, psi], [phi, 0]] on M0 ⊕ M1."""
    zero = zero_matrix(m.rank, m.rank, m.ring)
    return block([[zero, m.psi], [m.phi, zero]])


def verify(m: MatrixFactorization) -> VerificationReport:
    """Check phi*psi = psi*phi = w*1 and phi(0) = psi(0) = 0.

    Args:
        m: Factorization to check

    Returns:
        VerificationReport: One violation per offending entry; valid iff empty
    """
    violations: List[Violation] = []
    w = m.potential
    products = (
        ("phi*psi = w*1", m.phi * m.psi),
        ("psi*phi = w*1", m.psi * m.phi),
    )
    for label, product in products:
        for i, row in enumerate(entries(product)):
            for j, value in enumerate(row):
                diff = value - w if i == j else value
                if diff:
                    violations.append(
                        Violation(
                            identity=label,
                            row=i,
                            col=j,
                            detail=poly.format_polynomial(diff),
                        )
                    )
    for label, matrix in (("phi(0) = 0", m.phi), ("psi(0) = 0", m.psi)):
        for i, row in enumerate(entries(matrix)):
            for j, value in enumerate(row):
                if not poly.vanishes_at_origin(value):
                    violations.append(
                        Violation(
                            identity=label,
                            row=i,
                            col=j,
                            detail=poly.format_polynomial(value),
                        )
                    )
    if violations:
        logger.warning(f"{m.name} fails {len(violations)} factorization identities")
    return VerificationReport.from_violations(violations, m.name)


def shift(m: MatrixFactorization) -> MatrixFactorization:
    """The shifted factorization M[1] = (-psi, -phi)."""
    return MatrixFactorization(-m.psi, -m.phi, m.potential, f"{m.name}_shift")


def transpose_dual(m: MatrixFactorization) -> MatrixFactorization:
    """The transpose dual M^T = (psi^t, phi^t) on the dual modules."""
    return MatrixFactorization(
        transpose(m.psi), transpose(m.phi), m.potential, f"{m.name}_T"
    )


def dual(m: MatrixFactorization) -> MatrixFactorization:
    """The dual M^* = (-phi^t, -psi^t), equal to shift(transpose_dual(m))."""
    return MatrixFactorization(
        -transpose(m.phi), -transpose(m.psi), m.potential, f"{m.name}_dual"
    )


def direct_sum(
    m: MatrixFactorization, other: MatrixFactorization
) -> MatrixFactorization:
    """Block-diagonal sum of two factorizations of the same potential.

    Raises:
        VariableMismatchError: If the variable lists differ
        PotentialMismatchError: If the potentials differ
    """
    if m.ring != other.ring:
        raise VariableMismatchError(
            f"Direct sum over different variables: {m.variables} vs {other.variables}"
        )
    if m.potential != other.potential:
        raise PotentialMismatchError(
            f"Direct sum of factorizations of {poly.format_polynomial(m.potential)} "
            f"and {poly.format_polynomial(other.potential)}"
        )
    r, s = m.rank, other.rank
    upper = zero_matrix(r, s, m.ring)
    lower = zero_matrix(s, r, m.ring)
    return MatrixFactorization(
        block([[m.phi, upper], [lower, other.phi]]),
        block([[m.psi, upper], [lower, other.psi]]),
        m.potential,
        f"{m.name}_sum_{other.name}",
    )


def tensor(m: MatrixFactorization, other: MatrixFactorization) -> MatrixFactorization:
    """Tensor product of two factorizations, of potential w + w'.

    The blocks are
    Phi = [[1⊗phi', psi⊗1], [phi⊗1, -1⊗psi']] and
    Psi = [[1⊗psi', psi⊗1], [phi⊗1, -1⊗phi']], built from Kronecker products
    over the union of the two variable lists.
    """
    ring = poly.merge_rings(m.ring, other.ring)
    a, b = convert_mf(m, ring), convert_mf(other, ring)
    one_a = identity_matrix(a.rank, ring)
    one_b = identity_matrix(b.rank, ring)
    phi = block(
        [
            [kron(one_a, b.phi), kron(a.psi, one_b)],
            [kron(a.phi, one_b), -kron(one_a, b.psi)],
        ]
    )
    psi = block(
        [
            [kron(one_a, b.psi), kron(a.psi, one_b)],
            [kron(a.phi, one_b), -kron(one_a, b.phi)],
        ]
    )
    result = MatrixFactorization(
        phi, psi, a.potential + b.potential, f"{m.name}_tensor_{other.name}"
    )
    logger.info(
        f"Tensor {m.name} ⊗ {other.name}: rank {result.rank}, "
        f"potential {poly.format_polynomial(result.potential)}"
    )
    return result


def substitute_mf(
    m: MatrixFactorization, mapping: Dict[str, Polynomial]
) -> MatrixFactorization:
    """Apply a substitution of variables to every entry and to the potential."""
    return MatrixFactorization(
        map_entries(m.phi, lambda e: poly.substitute(e, mapping)),
        map_entries(m.psi, lambda e: poly.substitute(e, mapping)),
        poly.substitute(m.potential, mapping),
        m.name,
    )


def negate_potential(m: MatrixFactorization) -> MatrixFactorization:
    """The factorization (phi, -psi) of -w."""
    return MatrixFactorization(m.phi, -m.psi, -m.potential, m.name)


# Gauge action


@dataclass(frozen=True, eq=False)
class GaugePair:
    """A pair (S, T) of square matrices invertible at the origin."""

    s: DomainMatrix
    t: DomainMatrix

    def __post_init__(self) -> None:
        if self.s.shape != self.t.shape or self.s.shape[0] != self.s.shape[1]:
            raise DimensionMismatchError(
                f"Gauge blocks must be square of one size, got {self.s.shape} "
                f"and {self.t.shape}"
            )
        if not invertible_at_origin(self.s) or not invertible_at_origin(self.t):
            raise NotInvertibleError("Gauge blocks must be invertible at the origin")

    @property
    def rank(self) -> int:
        return self.s.shape[0]


def identity_gauge(m: MatrixFactorization) -> GaugePair:
    one = identity_matrix(m.rank, m.ring)
    return GaugePair(one, one)


@dataclass(frozen=True)
class GaugeResult:
    """A gauge-transformed factorization; ``exact`` is False when truncated."""

    result: MatrixFactorization
    exact: bool
    truncation_degree: Optional[int]


def gauge(
    m: MatrixFactorization,
    g: GaugePair,
    truncation_degree: Optional[int] = None,
) -> GaugeResult:
    """Apply (S, T)·(phi, psi) = (T phi S^-1, S psi T^-1).

    Args:
        m: Factorization
        g: Gauge pair of the same rank
        truncation_degree: Degree for power-series inverses when S or T has no
            polynomial inverse; defaults to the degree that reaches any
            polynomial inverse

    Returns:
        GaugeResult: The transformed factorization and its truncation marker
    """
    if g.rank != m.rank:
        raise DimensionMismatchError(
            f"Gauge of rank {g.rank} on a factorization of rank {m.rank}"
        )
    s = convert_matrix(g.s, m.ring)
    t = convert_matrix(g.t, m.ring)
    s_inv, s_exact = matrix_inverse(s, truncation_degree)
    t_inv, t_exact = matrix_inverse(t, truncation_degree)
    phi = t * m.phi * s_inv
    psi = s * m.psi * t_inv
    exact = s_exact and t_exact
    if not exact:
        degree = truncation_degree if truncation_degree is not None else max(
            max_entry_degree(m.phi) + max_entry_degree(s),
            max_entry_degree(m.psi) + max_entry_degree(t),
        )
        phi = truncate_matrix(phi, degree)
        psi = truncate_matrix(psi, degree)
        logger.warning(
            f"Gauge on {m.name} has no polynomial inverse; entries truncated at "
            f"degree {degree}"
        )
        return GaugeResult(
            MatrixFactorization(phi, psi, m.potential, m.name), False, degree
        )
    return GaugeResult(MatrixFactorization(phi, psi, m.potential, m.name), True, None)


def find_gauge_witness(
    m: MatrixFactorization, other: MatrixFactorization
) -> Optional[GaugePair]:
    """Search for a constant gauge pair sending ``m`` to ``other``.

    Solves T phi = phi' S and S psi = psi' T for constant S, T and returns the
    first invertible solution among basis vectors and fixed combinations of
    them, or None.
    """
    if m.rank != other.rank or m.ring != other.ring:
        return None
    if m.potential != other.potential:
        return None
    r = m.rank
    unknowns = 2 * r * r

    def s_index(i: int, j: int) -> int:
        return i * r + j

    def t_index(i: int, j: int) -> int:
        return r * r + i * r + j

    rows: Dict[Tuple[int, int, int, Monomial], Dict[int, object]] = {}

    def add(key: Tuple[int, int, int, Monomial], column: int, value: object) -> None:
        rows.setdefault(key, {})
        rows[key][column] = rows[key].get(column, QQ.zero) + value

    pairs = (
        (0, m.phi, other.phi, t_index, s_index),
        (1, m.psi, other.psi, s_index, t_index),
    )
    for eq, source, target, left, right in pairs:
        src, tgt = entries(source), entries(target)
        for a in range(r):
            for b in range(r):
                for c in range(r):
                    for monom, coeff in src[c][b].items():
                        add((eq, a, b, monom), left(a, c), coeff)
                    for monom, coeff in tgt[a][c].items():
                        add((eq, a, b, monom), right(c, b), -coeff)
    keys = sorted(rows)
    system = linalg.RationalMatrix(
        len(keys),
        unknowns,
        {(k, col): v for k, key in enumerate(keys) for col, v in rows[key].items()},
    )
    basis = linalg.kernel_basis(system)
    if not basis:
        return None

    def combination(power: int) -> Tuple[object, ...]:
        return tuple(
            sum((QQ((k + 1) ** power) * v[i] for k, v in enumerate(basis)), QQ.zero)
            for i in range(unknowns)
        )

    candidates = list(basis) + [combination(1), combination(2)]
    for vector in candidates:
        s_rows = [[vector[s_index(i, j)] for j in range(r)] for i in range(r)]
        t_rows = [[vector[t_index(i, j)] for j in range(r)] for i in range(r)]
        if (
            linalg.rank(linalg.RationalMatrix.from_rows(s_rows)) == r
            and linalg.rank(linalg.RationalMatrix.from_rows(t_rows)) == r
        ):
            return GaugePair(poly_matrix(s_rows, m.ring), poly_matrix(t_rows, m.ring))
    logger.warning(
        f"Constant intertwiners between {m.name} and {other.name} exist but none "
        f"of the tried combinations is invertible"
    )
    return None


# Morphisms


@dataclass(frozen=True, eq=False)
class MorphismPair:
    """A Z/2-graded map between factorizations over one ring.

    An even morphism is diag(S, T) with S: M0 -> M0' and T: M1 -> M1'. An odd
    one is [[0, S], [T, 0]] with S: M1 -> M0' and T: M0 -> M1'.
    """

    source: MatrixFactorization
    target: MatrixFactorization
    odd: bool
    s: DomainMatrix
    t: DomainMatrix

    def __post_init__(self) -> None:
        if self.source.ring != self.target.ring:
            raise VariableMismatchError(
                f"Morphism between different variable lists: {self.source.variables} "
                f"vs {self.target.variables}"
            )
        shape = (self.target.rank, self.source.rank)
        if self.s.shape != shape or self.t.shape != shape:
            raise DimensionMismatchError(
                f"Morphism blocks must be {shape[0]}x{shape[1]}, got {self.s.shape} "
                f"and {self.t.shape}"
            )

    @property
    def degree(self) -> str:
        return "odd" if self.odd else "even"

    @property
    def ring(self) -> PolyRing:
        return self.source.ring

    def full(self) -> DomainMatrix:
        """The map as one 2r'×2r matrix on M0 ⊕ M1."""
        zero = zero_matrix(self.target.rank, self.source.rank, self.ring)
        if self.odd:
            return block([[zero, self.s], [self.t, zero]])
        return block([[self.s, zero], [zero, self.t]])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MorphismPair):
            return NotImplemented
        return (
            self.odd == other.odd
            and self.source == other.source
            and self.target == other.target
            and matrices_equal(self.s, other.s)
            and matrices_equal(self.t, other.t)
        )


def morphism_from_full(
    source: MatrixFactorization,
    target: MatrixFactorization,
    odd: bool,
    matrix: DomainMatrix,
) -> MorphismPair:
    """Split a full 2r'×2r matrix into the blocks of a homogeneous morphism.

    Raises:
        DimensionMismatchError: If the shape is wrong or the matrix has
            nonzero blocks of the other parity
    """
    r, q = source.rank, target.rank
    if matrix.shape != (2 * q, 2 * r):
        raise DimensionMismatchError(
            f"Expected a {2 * q}x{2 * r} matrix, got {matrix.shape}"
        )
    top, bottom = range(q), range(q, 2 * q)
    left, right = range(r), range(r, 2 * r)
    if odd:
        s, t = submatrix(matrix, top, right), submatrix(matrix, bottom, left)
        rest = (submatrix(matrix, top, left), submatrix(matrix, bottom, right))
    else:
        s, t = submatrix(matrix, top, left), submatrix(matrix, bottom, right)
        rest = (submatrix(matrix, top, right), submatrix(matrix, bottom, left))
    if not all(is_zero_matrix(part) for part in rest):
        raise DimensionMismatchError(
            f"Matrix is not homogeneous of {'odd' if odd else 'even'} degree"
        )
    return MorphismPair(source, target, odd, s, t)


def identity_morphism(m: MatrixFactorization) -> MorphismPair:
    one = identity_matrix(m.rank, m.ring)
    return MorphismPair(m, m, False, one, one)


def zero_morphism(
    source: MatrixFactorization, target: MatrixFactorization, odd: bool
) -> MorphismPair:
    zero = zero_matrix(target.rank, source.rank, source.ring)
    return MorphismPair(source, target, odd, zero, zero)


def q_morphism(m: MatrixFactorization) -> MorphismPair:
    """Q viewed as an odd endomorphism: S = psi, T = phi."""
    return MorphismPair(m, m, True, m.psi, m.phi)


def scalar_morphism(m: MatrixFactorization, value: Polynomial) -> MorphismPair:
    """Multiplication by a function, h·1, as an even endomorphism."""
    h = scalar_matrix(m.rank, poly.embed(value, m.ring))
    return MorphismPair(m, m, False, h, h)


def compose(f: MorphismPair, g: MorphismPair) -> MorphismPair:
    """The composite f∘g of g: M -> M' and f: M' -> M''."""
    if not (g.target == f.source):
        raise DimensionMismatchError("Morphisms are not composable")
    return morphism_from_full(
        g.source, f.target, f.odd != g.odd, f.full() * g.full()
    )


def add_morphisms(f: MorphismPair, g: MorphismPair) -> MorphismPair:
    if f.odd != g.odd or not (f.source == g.source and f.target == g.target):
        raise DimensionMismatchError("Only parallel morphisms of one degree add")
    return MorphismPair(f.source, f.target, f.odd, f.s + g.s, f.t + g.t)


def scale_morphism(f: MorphismPair, value: object) -> MorphismPair:
    c = _coerce(value, f.ring)
    return MorphismPair(f.source, f.target, f.odd, f.s * c, f.t * c)


def is_morphism(f: MorphismPair) -> bool:
    """True when Q' f = (-1)^|f| f Q, i.e. f is closed.

    For even f this is phi' S = T phi and psi' T = S psi.
    """
    sign = -1 if f.odd else 1
    lhs = q_matrix(f.target) * f.full()
    rhs = f.full() * q_matrix(f.source)
    return matrices_equal(lhs, rhs * _coerce(sign, f.ring))


def gauge_morphism(
    f: MorphismPair,
    source_gauge: GaugePair,
    target_gauge: GaugePair,
    source_result: MatrixFactorization,
    target_result: MatrixFactorization,
) -> MorphismPair:
    """Transport a morphism along gauges of its source and target.

    With F = diag(S, T) on each side the transported map is F' f F^-1. The
    gauges must have polynomial inverses.
    """
    ring = f.ring

    def full_gauge(g: GaugePair, rank: int) -> DomainMatrix:
        zero = zero_matrix(rank, rank, ring)
        s, t = convert_matrix(g.s, ring), convert_matrix(g.t, ring)
        return block([[s, zero], [zero, t]])

    forward = full_gauge(target_gauge, f.target.rank)
    inverse, exact = matrix_inverse(full_gauge(source_gauge, f.source.rank))
    if not exact:
        raise NotInvertibleError("Source gauge has no polynomial inverse")
    return morphism_from_full(
        source_result, target_result, f.odd, forward * f.full() * inverse
    )


# Cokernel presentations


@dataclass(frozen=True)
class CokPresentation:
    """Presentation of cok(phi) over R/(w) with its Hilbert function.

    ``hilbert[k]`` is the dimension of the degree-k part for a degree-compatible
    order; ``dimension`` is their sum when the function reaches zero within the
    bound, otherwise None.
    """

    matrix: DomainMatrix
    potential: Polynomial
    hilbert: Tuple[int, ...]
    dimension: Optional[int]


def cok_presentation(m: MatrixFactorization, degree_bound: int = 6) -> CokPresentation:
    """Present cok(phi) = R^r / im(phi) over R/(w) and count its monomial basis.

    The image of phi is encoded as an ideal in R[e_1, ..., e_r] generated by
    the columns sum_i phi_ij e_i and all products e_i e_j; standard monomials
    of e-degree one form a basis of the cokernel.
    """
    names = m.variables
    tags = [f"_cok{i}" for i in range(m.rank)]
    while any(tag in names for tag in tags):
        tags = [f"_{tag}" for tag in tags]
    ring = poly.make_ring(names + tags)
    gens = ring.gens[len(names):]
    grid = entries(convert_matrix(m.phi, ring))
    generators = [
        sum((grid[i][j] * gens[i] for i in range(m.rank)), ring.zero)
        for j in range(m.rank)
    ]
    generators += [gens[i] * gens[j] for i in range(m.rank) for j in range(i, m.rank)]
    quotient = poly.groebner(poly.make_ideal(generators))
    leading = [g.LM for g in quotient.groebner]

    hilbert = [0] * (degree_bound + 1)
    for i in range(m.rank):
        for monom in poly.monomials_up_to(len(names), degree_bound):
            full = monom + tuple(1 if k == i else 0 for k in range(m.rank))
            if not any(ring.monomial_div(full, lm) is not None for lm in leading):
                hilbert[sum(monom)] += 1
    dimension = sum(hilbert) if hilbert[-1] == 0 else None
    logger.info(f"cok({m.name}): Hilbert values {hilbert}")
    return CokPresentation(m.phi, m.potential, tuple(hilbert), dimension)


# Random instances


def random_morphism(
    source: MatrixFactorization,
    target: MatrixFactorization,
    odd: bool,
    rng: random.Random,
    degree: int = 1,
) -> MorphismPair:
    """A morphism with random blocks, not necessarily closed under D."""
    ring = source.ring

    def draw() -> DomainMatrix:
        return poly_matrix(
            [
                [poly.random_polynomial(ring, rng, degree) for _ in range(source.rank)]
                for _ in range(target.rank)
            ],
            ring,
        )

    return MorphismPair(source, target, odd, draw(), draw())


def random_rank_one(
    variables: Sequence[str], rng: random.Random, degree: int = 2
) -> MatrixFactorization:
    """A rank-one factorization (f, g) of w = fg with random f and g."""
    ring = poly.make_ring(list(variables))
    f = g = ring.zero
    while not f or not g:
        f = poly.random_polynomial(ring, rng, degree, constant=False)
        g = poly.random_polynomial(ring, rng, degree, constant=False)
    return make_mf([[f]], [[g]], f * g, "R")


# Example families


def mf_xy(
    p: int, q: int, variables: Tuple[str, str] = ("x", "y")
) -> MatrixFactorization:
    """The factorization M_{p,q} of xy.

    phi = diag(x·1_p, y·1_q) and psi = diag(y·1_p, x·1_q).

    Raises:
        ValueError: If p or q is negative or p + q < 1
    """
    if p < 0 or q < 0 or p + q < 1:
        raise ValueError(f"mf_xy needs p, q >= 0 and p + q >= 1, got ({p}, {q})")
    ring = poly.make_ring(list(variables))
    x, y = ring.gens
    phi_diag = [x] * p + [y] * q
    psi_diag = [y] * p + [x] * q
    n = p + q
    phi = [[phi_diag[i] if i == j else ring.zero for j in range(n)] for i in range(n)]
    psi = [[psi_diag[i] if i == j else ring.zero for j in range(n)] for i in range(n)]
    return make_mf(phi, psi, x * y, f"M_{p}_{q}")


def mf_brieskorn(
    pairs: Sequence[Tuple[int, int]], prefix: str = "x"
) -> MatrixFactorization:
    """Tensor product of the rank-one blocks (x_i^{n_i}, x_i^{h_i - n_i}).

    The result has rank 2^{d-1} and potential sum_i x_i^{h_i}; variables are
    named ``x1 .. xd`` (``x`` alone when d = 1).

    Raises:
        ValueError: If a pair violates 2 <= h_i and 1 <= n_i <= h_i - 1
    """
    if not pairs:
        raise ValueError("mf_brieskorn needs at least one (n, h) pair")
    for n, h in pairs:
        if h < 2 or not 1 <= n <= h - 1:
            raise ValueError(f"Invalid Brieskorn block (n={n}, h={h})")
    if len(pairs) == 1:
        names = [prefix]
    else:
        names = [f"{prefix}{i + 1}" for i in range(len(pairs))]

    result: Optional[MatrixFactorization] = None
    for name, (n, h) in zip(names, pairs):
        ring = poly.make_ring([name])
        (x,) = ring.gens
        factor = make_mf([[x**n]], [[x ** (h - n)]], x**h, f"A_{name}")
        result = factor if result is None else tensor(result, factor)
    assert result is not None
    label = "_".join(f"{n}_{h}" for n, h in pairs)
    return result.renamed(f"B_{label}")
