"""Quadratic, symplectic and twisted bilinear structures on factorizations.

An untwisted structure is an isomorphism b: M -> M^* given by the odd matrix
[[0, b1], [b0, 0]]; it satisfies Q^t b = -b Q and b^t = -eps*b, so eps = +1 is
quadratic and eps = -1 symplectic. A twisted structure is an isomorphism
q: M -> M^T given by diag(q0, q1) with Q^t q = q Q and q^t = eps*q.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from mfkit.errors import (
    DimensionMismatchError,
    NotInvertibleError,
    StructureError,
)
from mfkit.schemas import CommutationReport, VerificationReport, Violation
from mfkit.services import linalg, poly
from mfkit.services.mf_core import (
    GaugePair,
    MatrixFactorization,
    MorphismPair,
    block,
    constant_part,
    convert_matrix,
    entries,
    format_matrix,
    invertible_at_origin,
    kron,
    matrix_inverse,
    mf_brieskorn,
    mf_xy,
    morphism_from_full,
    poly_matrix,
    q_matrix,
    submatrix,
    tensor,
    transpose,
    zero_matrix,
)
from mfkit.services.poly import Monomial

# Setup logging
logger = logging.getLogger(__name__)

UNTWISTED = "untwisted"
TWISTED = "twisted"
KINDS = (UNTWISTED, TWISTED)


@dataclass(frozen=True, eq=False)
class BilinearStructure:
    """A structure of the given kind and sign on ``host``.

    For untwisted structures ``b0: M0 -> M1^v`` and ``b1: M1 -> M0^v``; for
    twisted ones ``b0 = q0`` and ``b1 = q1`` act on M0 and M1. Validity is
    checked by :func:`verify_structure`, not on construction.
    """

    kind: str
    sign: int
    b0: DomainMatrix
    b1: DomainMatrix
    host: MatrixFactorization
    name: str = "b"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise StructureError(f"Unknown structure kind {self.kind!r}")
        if self.sign not in (1, -1):
            raise StructureError(f"Structure sign must be +1 or -1, got {self.sign}")
        shape = (self.host.rank, self.host.rank)
        if self.b0.shape != shape or self.b1.shape != shape:
            raise DimensionMismatchError(
                f"Structure blocks must be {shape[0]}x{shape[1]}, got "
                f"{self.b0.shape} and {self.b1.shape}"
            )
        object.__setattr__(self, "b0", convert_matrix(self.b0, self.host.ring))
        object.__setattr__(self, "b1", convert_matrix(self.b1, self.host.ring))

    @property
    def twisted(self) -> bool:
        return self.kind == TWISTED

    @property
    def adjoint_sign(self) -> int:
        """The sign sigma in Q^t b = sigma b Q."""
        return 1 if self.twisted else -1

    @property
    def commutation_sign(self) -> int:
        """+1 for untwisted structures and -1 for twisted ones."""
        return -1 if self.twisted else 1

    def matrix(self) -> DomainMatrix:
        """The structure as one 2r×2r matrix."""
        zero = zero_matrix(self.host.rank, self.host.rank, self.host.ring)
        if self.twisted:
            return block([[self.b0, zero], [zero, self.b1]])
        return block([[zero, self.b1], [self.b0, zero]])

    def describe(self) -> str:
        label = {
            (UNTWISTED, 1): "quadratic",
            (UNTWISTED, -1): "symplectic",
            (TWISTED, 1): "twisted quadratic",
            (TWISTED, -1): "twisted symplectic",
        }[(self.kind, self.sign)]
        return f"{label} (kind {self.kind}, sign {self.sign:+d})"


def structure_from_matrix(
    kind: str,
    sign: int,
    matrix: DomainMatrix,
    host: MatrixFactorization,
    name: str = "b",
) -> Optional[BilinearStructure]:
    """Read the blocks of a full 2r×2r matrix, or None if it has the wrong shape."""
    r = host.rank
    top, bottom = range(r), range(r, 2 * r)
    if kind == TWISTED:
        b0, b1 = submatrix(matrix, top, top), submatrix(matrix, bottom, bottom)
        off = (submatrix(matrix, top, bottom), submatrix(matrix, bottom, top))
    else:
        b0, b1 = submatrix(matrix, bottom, top), submatrix(matrix, top, bottom)
        off = (submatrix(matrix, top, top), submatrix(matrix, bottom, bottom))
    if any(e for part in off for row in entries(part) for e in row):
        return None
    return BilinearStructure(kind, sign, b0, b1, host, name)


def _entry_violations(
    label: str, lhs: DomainMatrix, rhs: DomainMatrix
) -> List[Violation]:
    violations = []
    for i, (left, right) in enumerate(zip(entries(lhs), entries(rhs))):
        for j, (a, b) in enumerate(zip(left, right)):
            if a != b:
                violations.append(
                    Violation(
                        identity=label,
                        row=i,
                        col=j,
                        detail=poly.format_polynomial(a - b),
                    )
                )
    return violations


def verify_structure(b: BilinearStructure) -> VerificationReport:
    """Check the symmetry, adjoint and invertibility conditions of a structure.

    Args:
        b: Structure to check; its host is not re-verified here

    Returns:
        VerificationReport: Violations of ``b0^t = -eps*b1`` (untwisted) or
            ``q^t = eps*q`` (twisted), of ``Q^t b = sigma b Q`` and of
            invertibility at the origin
    """
    violations: List[Violation] = []
    if b.twisted:
        for label, q in (("q0^t = eps*q0", b.b0), ("q1^t = eps*q1", b.b1)):
            target = q if b.sign == 1 else -q
            violations += _entry_violations(label, transpose(q), target)
    else:
        target = -b.b1 if b.sign == 1 else b.b1
        violations += _entry_violations("b0^t = -eps*b1", transpose(b.b0), target)

    full = b.matrix()
    q = q_matrix(b.host)
    lhs = transpose(q) * full
    rhs = full * q
    if not b.twisted:
        rhs = -rhs
    label = "Q^t q = q Q" if b.twisted else "Q^t b = -b Q"
    violations += _entry_violations(label, lhs, rhs)

    if not invertible_at_origin(full):
        violations.append(
            Violation(
                identity="invertible at origin", detail="constant part is singular"
            )
        )
    if violations:
        logger.warning(
            f"Structure {b.name} on {b.host.name} fails {len(violations)} identities"
        )
    return VerificationReport.from_violations(violations, b.name)


def gauge_structure(b: BilinearStructure, gauge: GaugePair) -> BilinearStructure:
    """Transport a structure along F = diag(S, T): (Q, b) -> (F^-1 Q F, F^t b F).

    The host becomes (T^-1 phi S, S^-1 psi T).

    Raises:
        NotInvertibleError: If S or T has no polynomial inverse
    """
    ring = b.host.ring
    s = convert_matrix(gauge.s, ring)
    t = convert_matrix(gauge.t, ring)
    if gauge.rank != b.host.rank:
        raise DimensionMismatchError(
            f"Gauge of rank {gauge.rank} on a structure of rank {b.host.rank}"
        )
    s_inv, s_exact = matrix_inverse(s)
    t_inv, t_exact = matrix_inverse(t)
    if not (s_exact and t_exact):
        raise NotInvertibleError("Structure gauge needs a polynomial inverse")
    host = MatrixFactorization(
        t_inv * b.host.phi * s, s_inv * b.host.psi * t, b.host.potential, b.host.name
    )
    if b.twisted:
        b0 = transpose(s) * b.b0 * s
        b1 = transpose(t) * b.b1 * t
    else:
        b0 = transpose(t) * b.b0 * s
        b1 = transpose(s) * b.b1 * t
    return BilinearStructure(b.kind, b.sign, b0, b1, host, b.name)


def _check_pair(
    f: MorphismPair, source: BilinearStructure, target: BilinearStructure
) -> None:
    if source.kind != target.kind:
        raise StructureError(
            f"Adjoint between a {source.kind} and a {target.kind} structure"
        )
    if not (source.host == f.source and target.host == f.target):
        raise StructureError(
            "Structures do not live on the morphism's source and target"
        )


def _polynomial_inverse(b: BilinearStructure) -> Optional[DomainMatrix]:
    inverse, exact = matrix_inverse(b.matrix())
    return inverse if exact else None


def adjoint(
    f: MorphismPair, source: BilinearStructure, target: BilinearStructure
) -> MorphismPair:
    """The adjoint f^adj = b^-1 f^t b' : M' -> M of f: M -> M'.

    Raises:
        StructureError: If the structures have different kinds
        NotInvertibleError: If the source structure has no polynomial inverse
    """
    _check_pair(f, source, target)
    inverse = _polynomial_inverse(source)
    if inverse is None:
        raise NotInvertibleError(f"Structure {source.name} has no polynomial inverse")
    matrix = inverse * transpose(f.full()) * target.matrix()
    return morphism_from_full(f.target, f.source, f.odd, matrix)


def check_commutation(
    f: MorphismPair, source: BilinearStructure, target: BilinearStructure
) -> CommutationReport:
    """Check D(f)^adj = s·(-1)^|f|·D(f^adj) entrywise.

    s is +1 for untwisted and -1 for twisted structures. When the source
    structure has no polynomial inverse both sides are multiplied by it and
    the identity is compared in the form
    D(f)^t b' = s(-1)^|f| (sigma Q^t f^t b' - (-1)^|f| f^t b' Q').
    """
    # homotopy builds on this module
    from mfkit.services.homotopy import differential

    _check_pair(f, source, target)
    sign = source.commutation_sign * (-1 if f.odd else 1)
    df = differential(f)
    if _polynomial_inverse(source) is not None:
        lhs = adjoint(df, source, target).full()
        rhs = differential(adjoint(f, source, target)).full()
    else:
        b_target = target.matrix()
        f_t = transpose(f.full())
        lhs = transpose(df.full()) * b_target
        first = transpose(q_matrix(f.source)) * f_t * b_target
        second = f_t * b_target * q_matrix(f.target)
        if source.adjoint_sign == -1:
            first = -first
        rhs = first - second if not f.odd else first + second
    if sign == -1:
        rhs = -rhs
    violations = _entry_violations("D(f)^adj = s(-1)^|f| D(f^adj)", lhs, rhs)
    return CommutationReport(
        holds=not violations,
        sign=source.commutation_sign,
        parity=f.degree,
        violations=violations,
    )


def _tensor_index(r: int, r2: int) -> List[int]:
    """Kronecker indices of the basis (M0⊗M0', M1⊗M1', M0⊗M1', M1⊗M0')."""
    blocks = ((range(r), range(r2)), (range(r, 2 * r), range(r2, 2 * r2)))
    blocks += ((range(r), range(r2, 2 * r2)), (range(r, 2 * r), range(r2)))
    return [i * 2 * r2 + j for rows, cols in blocks for i in rows for j in cols]


def tensor_kind(first: BilinearStructure, second: BilinearStructure) -> Tuple[str, int]:
    """Kind and sign of the tensor product of two structures."""
    product = first.sign * second.sign
    if first.kind == second.kind:
        return TWISTED, -product if first.kind == UNTWISTED else product
    return UNTWISTED, product


def tensor_structure(
    first: BilinearStructure, second: BilinearStructure
) -> BilinearStructure:
    """Build the structure on tensor(M, M') induced by structures on M and M'.

    The candidate is (b·E^p) ⊗ b' with E = diag(1, -1) and p = 1 when the
    second structure is untwisted, reordered to the tensor basis. When it does
    not verify, the sign corrections on the four row blocks are tried in
    lexicographic order and the first valid one is kept.

    Raises:
        StructureError: If no sign correction yields a valid structure
    """
    host = tensor(first.host, second.host)
    ring = host.ring
    kind, sign = tensor_kind(first, second)
    r, r2 = first.host.rank, second.host.rank

    left = convert_matrix(first.matrix(), ring)
    if not second.twisted:
        grading = [1] * r + [-1] * r
        left = left * poly_matrix(
            [[grading[i] if i == j else 0 for j in range(2 * r)] for i in range(2 * r)],
            ring,
        )
    product = entries(kron(left, convert_matrix(second.matrix(), ring)))
    index = _tensor_index(r, r2)
    reordered = [[product[p][q] for q in index] for p in index]

    size = r * r2
    for signs in itertools.product((1, -1), repeat=4):
        rows = [
            [e if signs[p // size] == 1 else -e for e in row]
            for p, row in enumerate(reordered)
        ]
        candidate = structure_from_matrix(
            kind,
            sign,
            poly_matrix(rows, ring),
            host,
            f"{first.name}_tensor_{second.name}",
        )
        if candidate is not None and verify_structure(candidate).valid:
            logger.info(
                f"Tensor structure {candidate.name}: {candidate.describe()}, "
                f"block signs {signs}"
            )
            return candidate
    raise StructureError(
        f"No sign correction of {first.name} ⊗ {second.name} gives a valid "
        f"{kind} structure of sign {sign:+d}"
    )


def xy_quadratic(x: str = "x", y: str = "y") -> BilinearStructure:
    """The quadratic structure b0 = 1, b1 = -1 on the rank-one factorization (x, y)."""
    host = mf_xy(1, 0, (x, y)).renamed(f"{x}{y}")
    ring = host.ring
    return BilinearStructure(
        UNTWISTED,
        1,
        poly_matrix([[1]], ring),
        poly_matrix([[-1]], ring),
        host,
        f"q_{x}{y}",
    )


# Structure search


@dataclass(frozen=True)
class StructureCandidate:
    """One basis element of a structure solution space."""

    structure: BilinearStructure
    invertible: bool


@dataclass(frozen=True)
class StructureSpace:
    """Solutions of the adjoint condition of a fixed kind, split by sign."""

    host: MatrixFactorization
    kind: str
    max_degree: int
    plus: Tuple[StructureCandidate, ...]
    minus: Tuple[StructureCandidate, ...]

    @property
    def dimension(self) -> int:
        return len(self.plus) + len(self.minus)

    def candidates(self, sign: int) -> Tuple[StructureCandidate, ...]:
        return self.plus if sign == 1 else self.minus

    def invertible(self) -> List[BilinearStructure]:
        """Invertible structures found among basis elements and their sums."""
        found = []
        for sign in (1, -1):
            found += _invertible_in(self.candidates(sign), self.host, self.kind, sign)
        return found

    @property
    def signs(self) -> List[int]:
        """Signs whose subspace contains an invertible structure."""
        return sorted({s.sign for s in self.invertible()}, reverse=True)


def _invertible_in(
    candidates: Sequence[StructureCandidate],
    host: MatrixFactorization,
    kind: str,
    sign: int,
) -> List[BilinearStructure]:
    direct = [c.structure for c in candidates if c.invertible]
    if direct or len(candidates) < 2:
        return direct
    weighted = [c.structure for c in candidates]
    point = _nonsingular_combination([s.matrix() for s in weighted])
    if point is None:
        return []
    ring = host.ring
    b0 = zero_matrix(*weighted[0].b0.shape, ring)
    b1 = zero_matrix(*weighted[0].b1.shape, ring)
    for c, s in zip(point, weighted):
        if c:
            b0 = b0 + s.b0 * ring(c)
            b1 = b1 + s.b1 * ring(c)
    return [BilinearStructure(kind, sign, b0, b1, host, weighted[0].name)]


def _nonsingular_combination(
    matrices: Sequence[DomainMatrix],
) -> Optional[Tuple[int, ...]]:
    """Integer weights c with sum c_k M_k invertible at the origin, if any exist.

    det(sum t_k M_k(0)) is a form of degree n in the t_k. It is either zero or
    nonzero somewhere on the grid {1, ..., n + 1}^K.
    """
    n = matrices[0].shape[0]
    count = len(matrices)
    weights = poly.make_ring([f"t{k}" for k in range(count)])
    t = weights.gens
    constants = [constant_part(m).entries for m in matrices]
    rows = [
        [
            sum(
                (t[k] * c.get((i, j), QQ.zero) for k, c in enumerate(constants)),
                weights.zero,
            )
            for j in range(n)
        ]
        for i in range(n)
    ]
    determinant = DomainMatrix(rows, (n, n), weights.to_domain()).det()
    if not determinant:
        return None
    for point in itertools.product(range(1, n + 2), repeat=count):
        if determinant(*point):
            return point
    return None


def _structure_position(kind: str, r: int, k: int, i: int, j: int) -> Tuple[int, int]:
    if kind == TWISTED:
        return (i, j) if k == 0 else (r + i, r + j)
    return (r + i, j) if k == 0 else (i, r + j)


def _solve_structures(
    m: MatrixFactorization, kind: str, sign: int, max_degree: int
) -> List[BilinearStructure]:
    r = m.rank
    q = entries(q_matrix(m))
    sigma = 1 if kind == TWISTED else -1
    monomials = poly.monomials_up_to(m.ring.ngens, max_degree)
    unknowns = [
        (k, i, j, alpha)
        for k in (0, 1)
        for i in range(r)
        for j in range(r)
        for alpha in monomials
    ]

    rows: Dict[Tuple[object, ...], Dict[int, object]] = {}

    def add(key: Tuple[object, ...], column: int, value: object) -> None:
        row = rows.setdefault(key, {})
        row[column] = row.get(column, QQ.zero) + value

    def shifted(monom: Monomial, alpha: Monomial) -> Monomial:
        return tuple(a + b for a, b in zip(monom, alpha))

    for column, (k, i, j, alpha) in enumerate(unknowns):
        a, c = _structure_position(kind, r, k, i, j)
        # Q^t E_ac - sigma E_ac Q
        for row in range(2 * r):
            for monom, coeff in q[a][row].items():
                add(("adj", row, c, shifted(monom, alpha)), column, coeff)
            for monom, coeff in q[c][row].items():
                add(("adj", a, row, shifted(monom, alpha)), column, -sigma * coeff)
        if kind == TWISTED:
            add(("sym", k, j, i, alpha), column, QQ.one)
            add(("sym", k, i, j, alpha), column, QQ(-sign))
        elif k == 0:
            add(("sym", j, i, alpha), column, QQ.one)
        else:
            add(("sym", i, j, alpha), column, QQ(sign))

    keys = list(rows)
    system = linalg.RationalMatrix(
        len(keys),
        len(unknowns),
        {(n, col): v for n, key in enumerate(keys) for col, v in rows[key].items()},
    )
    logger.debug(
        f"Structure system for {m.name}: {len(keys)} equations, "
        f"{len(unknowns)} unknowns"
    )

    solutions = []
    for vector in linalg.kernel_basis(system):
        blocks: List[List[List[Dict[Monomial, object]]]] = [
            [[{} for _ in range(r)] for _ in range(r)] for _ in (0, 1)
        ]
        for value, (k, i, j, alpha) in zip(vector, unknowns):
            if value:
                blocks[k][i][j][alpha] = value
        b0, b1 = (
            poly_matrix(
                [[m.ring.from_dict(cell) for cell in row] for row in grid],
                m.ring,
            )
            for grid in blocks
        )
        solutions.append(BilinearStructure(kind, sign, b0, b1, m, f"{kind}_{m.name}"))
    return solutions


def structure_search(
    m: MatrixFactorization, kind: str, max_degree: int = 0
) -> StructureSpace:
    """Solve for structures of one kind with block entries of degree <= max_degree.

    The adjoint condition is imposed together with the symmetry condition of
    each sign, which splits the solution space into its eps = +1 and eps = -1
    parts. Each basis element is flagged as invertible at the origin or not.
    An empty space is a valid outcome.
    """
    if kind not in KINDS:
        raise StructureError(f"Unknown structure kind {kind!r}")
    parts = {}
    for sign in (1, -1):
        parts[sign] = tuple(
            StructureCandidate(s, invertible_at_origin(s.matrix()))
            for s in _solve_structures(m, kind, sign, max_degree)
        )
    space = StructureSpace(m, kind, max_degree, parts[1], parts[-1])
    logger.info(
        f"Structure search on {m.name} ({kind}, degree <= {max_degree}): "
        f"dim {len(space.plus)} for eps=+1, {len(space.minus)} for eps=-1"
    )
    if not space.invertible():
        logger.warning(
            f"No invertible {kind} structure on {m.name} up to degree {max_degree}"
        )
    return space


@dataclass(frozen=True)
class BrieskornClassification:
    """Kind and sign of the unique structure on a Brieskorn factorization."""

    d: int
    kind: str
    sign: int
    witness: BilinearStructure

    @property
    def m_parity(self) -> int:
        """Parity of d // 2."""
        return (self.d // 2) % 2


def classify_brieskorn(
    pairs: Sequence[Tuple[int, int]], max_degree: int = 0
) -> BrieskornClassification:
    """Find the structure on mf_brieskorn(pairs) and check it is unique up to scalar.

    Raises:
        StructureError: If there is no invertible structure, or more than one
            independent one
    """
    if not 1 <= len(pairs) <= 4:
        raise ValueError(
            f"Brieskorn classification supports 1 <= d <= 4, got {len(pairs)}"
        )
    m = mf_brieskorn(pairs)
    hits = []
    for kind in KINDS:
        space = structure_search(m, kind, max_degree)
        for sign in (1, -1):
            found = _invertible_in(space.candidates(sign), m, kind, sign)
            if found:
                hits.append((kind, sign, found[0], len(space.candidates(sign))))
    if not hits:
        raise StructureError(f"No invertible structure on {m.name}")
    if len(hits) > 1 or hits[0][3] > 1:
        raise StructureError(
            f"Structure on {m.name} is not unique: "
            + ", ".join(f"{k} eps={s:+d} dim {n}" for k, s, _, n in hits)
        )
    kind, sign, witness, _ = hits[0]
    result = BrieskornClassification(len(pairs), kind, sign, witness)
    logger.info(
        f"{m.name}: unique {kind} structure of sign {sign:+d} "
        f"(d={result.d}, parity of d//2 = {result.m_parity})"
    )
    return result


def structure_summary(b: BilinearStructure) -> str:
    """One-line text form used by reports."""
    return (
        f"{b.name} on {b.host.name}: {b.describe()} "
        f"b0={format_matrix(b.b0)} b1={format_matrix(b.b1)}"
    )
