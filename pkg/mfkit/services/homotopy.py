"""The morphism complex of factorizations and its cohomology.

The differential on a morphism f: M -> M' of parity |f| is
D(f) = Q' f - (-1)^|f| f Q. Ext is computed degree by degree: cocycles with
entries of degree <= d modulo those coboundaries D(g) that also have degree
<= d, where g may reach degree d + slack. The sweep stops once the dimensions
repeat over ``window`` consecutive degrees.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from sympy.polys.domains import QQ

from mfkit import config
from mfkit.errors import (
    NonStabilizationError,
    PotentialMismatchError,
    StructureError,
    VariableMismatchError,
)
from mfkit.schemas import AdjointSplit, VerificationReport, Violation
from mfkit.services import linalg, poly
from mfkit.services.bilinear import BilinearStructure, adjoint
from mfkit.services.mf_core import (
    MatrixFactorization,
    MorphismPair,
    add_morphisms,
    compose,
    entries,
    identity_morphism,
    is_zero_matrix,
    max_entry_degree,
    morphism_from_full,
    poly_matrix,
    q_matrix,
)
from mfkit.services.poly import Monomial

# Setup logging
logger = logging.getLogger(__name__)

Position = Tuple[int, int]
Unknown = Tuple[Position, Monomial]
Key = Tuple[int, int, Monomial]
SparseVector = Dict[int, object]


def differential(f: MorphismPair) -> MorphismPair:
    """Return D(f) = Q' f - (-1)^|f| f Q, a morphism of the opposite parity."""
    if f.source.ring != f.target.ring:
        raise VariableMismatchError("Morphism between different variable lists")
    full = f.full()
    left = q_matrix(f.target) * full
    right = full * q_matrix(f.source)
    matrix = left + right if f.odd else left - right
    return morphism_from_full(f.source, f.target, not f.odd, matrix)


def is_cocycle(f: MorphismPair) -> bool:
    return is_zero_matrix(differential(f).full())


# Linear systems over monomial coefficients


def _positions(
    source: MatrixFactorization, target: MatrixFactorization, odd: bool
) -> List[Position]:
    r, q = source.rank, target.rank
    return [
        (a, b)
        for a in range(2 * q)
        for b in range(2 * r)
        if ((a >= q) != (b >= r)) == odd
    ]


def _unknowns(
    source: MatrixFactorization,
    target: MatrixFactorization,
    odd: bool,
    degree: int,
    weights: Optional[Sequence[int]],
) -> List[Unknown]:
    monomials = poly.monomials_up_to(source.ring.ngens, degree, weights)
    positions = _positions(source, target, odd)
    return [(pos, alpha) for pos in positions for alpha in monomials]


def _images(
    source: MatrixFactorization,
    target: MatrixFactorization,
    odd: bool,
    unknowns: Sequence[Unknown],
) -> List[Dict[Key, object]]:
    """D applied to every unit morphism x^alpha·E_ab, as coefficient maps."""
    q_source = [[list(e.items()) for e in row] for row in entries(q_matrix(source))]
    q_target = [[list(e.items()) for e in row] for row in entries(q_matrix(target))]
    sign = -1 if odd else 1
    images = []
    for (a, b), alpha in unknowns:
        column: Dict[Key, object] = {}
        for i, row in enumerate(q_target):
            for monom, coeff in row[a]:
                key = (i, b, tuple(x + y for x, y in zip(monom, alpha)))
                column[key] = column.get(key, QQ.zero) + coeff
        for j, terms in enumerate(q_source[b]):
            for monom, coeff in terms:
                key = (a, j, tuple(x + y for x, y in zip(monom, alpha)))
                column[key] = column.get(key, QQ.zero) - sign * coeff
        images.append({k: v for k, v in column.items() if v})
    return images


def _system(
    columns: Sequence[Dict[Key, object]], keep: Optional[set] = None
) -> linalg.RationalMatrix:
    """Stack coefficient maps as columns; rows are the keys that occur."""
    rows: Dict[Key, int] = {}
    data = {}
    for col, column in enumerate(columns):
        for key, value in column.items():
            if keep is not None and key not in keep:
                continue
            row = rows.setdefault(key, len(rows))
            data[(row, col)] = value
    return linalg.RationalMatrix(len(rows), len(columns), data)


def _sparse(vector: Sequence[object]) -> SparseVector:
    return {i: v for i, v in enumerate(vector) if v}


@dataclass(frozen=True)
class ExtSpace:
    """Ext in one parity at a fixed truncation degree.

    Vectors are sparse coefficient maps over ``unknowns``. ``coboundaries`` is
    a basis of the degree-bounded coboundaries and ``representatives`` extends
    it to a basis of the cocycles.
    """

    odd: bool
    degree: int
    unknowns: Tuple[Unknown, ...]
    cocycle_dim: int
    coboundaries: Tuple[SparseVector, ...]
    representatives: Tuple[SparseVector, ...]
    index: Dict[Unknown, int] = field(default_factory=dict, compare=False)

    @property
    def dimension(self) -> int:
        return len(self.representatives)


def _ext_space(
    source: MatrixFactorization,
    target: MatrixFactorization,
    odd: bool,
    degree: int,
    slack: int,
    weights: Optional[Sequence[int]],
    budget: Optional[int],
) -> ExtSpace:
    unknowns = _unknowns(source, target, odd, degree, weights)
    index = {u: k for k, u in enumerate(unknowns)}
    size = len(unknowns)

    cocycles = [
        _sparse(v)
        for v in linalg.kernel_basis(
            _system(_images(source, target, odd, unknowns)), budget
        )
    ]

    sources = _unknowns(source, target, not odd, degree + slack, weights)
    images = _images(source, target, not odd, sources)
    high = {
        key
        for column in images
        for key in column
        if ((key[0], key[1]), key[2]) not in index
    }
    bounded = []
    for combination in linalg.kernel_basis(_system(images, high), budget):
        summed: Dict[Tuple[int, int, Monomial], object] = {}
        for k, c in enumerate(combination):
            if not c:
                continue
            for key, value in images[k].items():
                summed[key] = summed.get(key, QQ.zero) + c * value
        # high-degree terms cancel in the sum, not term by term
        vector: SparseVector = {
            index[((i, j), monom)]: value
            for (i, j, monom), value in summed.items()
            if value
        }
        if vector:
            bounded.append(vector)
    spanned = linalg.RationalMatrix.from_columns(size, bounded)
    coboundaries = [bounded[p] for p in linalg.pivot_columns(spanned, budget)]

    combined = linalg.RationalMatrix.from_columns(size, coboundaries + cocycles)
    offset = len(coboundaries)
    representatives = [
        cocycles[p - offset]
        for p in linalg.pivot_columns(combined, budget)
        if p >= offset
    ]
    logger.debug(
        f"{'Odd' if odd else 'Even'} morphisms of degree <= {degree}: {size} unknowns, "
        f"{len(cocycles)} cocycles, {len(coboundaries)} coboundaries"
    )
    return ExtSpace(
        odd,
        degree,
        tuple(unknowns),
        len(cocycles),
        tuple(coboundaries),
        tuple(representatives),
        index,
    )


def _to_morphism(
    source: MatrixFactorization,
    target: MatrixFactorization,
    space: ExtSpace,
    vector: SparseVector,
) -> MorphismPair:
    ring = source.ring
    cells: Dict[Position, Dict[Monomial, object]] = {}
    for k, value in vector.items():
        pos, alpha = space.unknowns[k]
        cells.setdefault(pos, {})[alpha] = value
    rows = [
        [
            ring.from_dict(cells[(a, b)]) if (a, b) in cells else ring.zero
            for b in range(2 * source.rank)
        ]
        for a in range(2 * target.rank)
    ]
    return morphism_from_full(source, target, space.odd, poly_matrix(rows, ring))


def _to_vector(f: MorphismPair, space: ExtSpace) -> Optional[SparseVector]:
    """Coefficients of f over the unknowns, or None if f exceeds the truncation."""
    vector: SparseVector = {}
    for a, row in enumerate(entries(f.full())):
        for b, value in enumerate(row):
            for monom, coeff in value.items():
                column = space.index.get(((a, b), monom))
                if column is None:
                    return None
                vector[column] = coeff
    return vector


def class_coordinates(
    f: MorphismPair, space: ExtSpace, budget: Optional[int] = None
) -> Optional[Tuple[object, ...]]:
    """Coordinates of the class of a cocycle f in the representative basis.

    Returns None when f has entries beyond the truncation degree or is not a
    cocycle there.
    """
    if f.odd != space.odd:
        raise StructureError("Morphism parity does not match the Ext space")
    vector = _to_vector(f, space)
    if vector is None:
        return None
    columns = list(space.coboundaries) + list(space.representatives)
    system = linalg.RationalMatrix.from_columns(len(space.unknowns), columns)
    rhs = [vector.get(k, QQ.zero) for k in range(len(space.unknowns))]
    solution = linalg.solve(system, rhs, budget)
    if solution is None:
        return None
    return tuple(solution[len(space.coboundaries):])


def image_rank(
    morphisms: Sequence[MorphismPair], space: ExtSpace, budget: Optional[int] = None
) -> int:
    """Dimension of the span of the classes of the given cocycles."""
    size = len(space.unknowns)
    vectors = []
    for f in morphisms:
        vector = _to_vector(f, space)
        if vector is None:
            raise StructureError(
                "Morphism exceeds the truncation degree of the Ext space"
            )
        vectors.append(vector)
    base = list(space.coboundaries)
    combined = linalg.RationalMatrix.from_columns(size, base + vectors)
    return linalg.rank(combined, budget) - len(base)


@dataclass(frozen=True)
class ExtResult:
    """Ext^0 and Ext^1 dimensions with representatives and sweep history.

    ``history`` holds one (degree, dim Ext^0, dim Ext^1) triple per truncation
    degree visited.
    """

    source: MatrixFactorization
    target: MatrixFactorization
    dims: Tuple[int, int]
    bases: Tuple[Tuple[MorphismPair, ...], Tuple[MorphismPair, ...]]
    truncation_degree: int
    stabilized: bool
    history: Tuple[Tuple[int, int, int], ...]
    spaces: Tuple[ExtSpace, ExtSpace]


def ext(
    source: MatrixFactorization,
    target: MatrixFactorization,
    max_degree: Optional[int] = None,
    window: Optional[int] = None,
    weights: Optional[Sequence[int]] = None,
    slack: Optional[int] = None,
    start_degree: Optional[int] = None,
    budget: Optional[int] = None,
) -> ExtResult:
    """Compute Ext^0 and Ext^1 from ``source`` to ``target`` by truncation.

    Args:
        source: Source factorization
        target: Target factorization of the same potential
        max_degree: Largest truncation degree; defaults to ``MFKIT_MAX_DEGREE``
        window: Consecutive equal dimensions needed to stop; defaults to
            ``MFKIT_WINDOW``
        weights: Optional variable weights for the truncation degree
        slack: Extra degree allowed for coboundary preimages; defaults to the
            sum of the largest entry degrees of both operators
        start_degree: First truncation degree; defaults to the largest entry
            degree of the source operator
        budget: Cap on linear-system unknowns

    Returns:
        ExtResult: Dimensions, representatives and history; ``stabilized`` is
            False when the dimensions did not settle within ``max_degree``

    Raises:
        VariableMismatchError: If the variable lists differ
        PotentialMismatchError: If the potentials differ
        NonIsolatedSingularityError: If the Tjurina algebra is infinite
    """
    if source.ring != target.ring:
        raise VariableMismatchError(
            f"Ext between different variable lists: {source.variables} vs "
            f"{target.variables}"
        )
    if source.potential != target.potential:
        raise PotentialMismatchError(
            f"Ext between factorizations of {poly.format_polynomial(source.potential)} "
            f"and {poly.format_polynomial(target.potential)}"
        )
    poly.require_isolated(source.potential, budget)
    max_degree = config.MAX_DEGREE if max_degree is None else max_degree
    window = config.WINDOW if window is None else window
    if window < 1:
        raise ValueError(f"Stabilization window must be positive, got {window}")
    source_degree = max(max_entry_degree(q_matrix(source), weights), 0)
    target_degree = max(max_entry_degree(q_matrix(target), weights), 0)
    if slack is None:
        slack = source_degree + target_degree
    start = source_degree if start_degree is None else start_degree
    start = min(start, max_degree)

    history: List[Tuple[int, int, int]] = []
    spaces: Optional[Tuple[ExtSpace, ExtSpace]] = None
    stabilized = False
    for degree in range(start, max_degree + 1):
        spaces = tuple(  # type: ignore[assignment]
            _ext_space(source, target, odd, degree, slack, weights, budget)
            for odd in (False, True)
        )
        assert spaces is not None
        history.append((degree, spaces[0].dimension, spaces[1].dimension))
        logger.debug(
            f"Ext({source.name}, {target.name}) at degree {degree}: "
            f"{spaces[0].dimension}, {spaces[1].dimension}"
        )
        recent = [h[1:] for h in history[-window:]]
        if len(recent) == window and len(set(recent)) == 1:
            stabilized = True
            break
    assert spaces is not None

    bases = tuple(
        tuple(_to_morphism(source, target, space, v) for v in space.representatives)
        for space in spaces
    )
    result = ExtResult(
        source,
        target,
        (spaces[0].dimension, spaces[1].dimension),
        bases,  # type: ignore[arg-type]
        history[-1][0],
        stabilized,
        tuple(history),
        spaces,
    )
    if stabilized:
        logger.info(
            f"Ext({source.name}, {target.name}) = {result.dims} at degree "
            f"{result.truncation_degree}"
        )
    else:
        logger.warning(
            f"Ext({source.name}, {target.name}) did not stabilize by degree "
            f"{max_degree}; last dims {result.dims}"
        )
    return result


def require_stabilized(result: ExtResult) -> ExtResult:
    if not result.stabilized:
        raise NonStabilizationError(
            f"Ext({result.source.name}, {result.target.name}) did not stabilize by "
            f"degree {result.truncation_degree}: history {list(result.history)}"
        )
    return result


def _involution_split(
    result: ExtResult, space: ExtSpace, b: BilinearStructure, budget: Optional[int]
) -> Tuple[int, int]:
    basis = result.bases[1 if space.odd else 0]
    k = len(basis)
    if k == 0:
        return 0, 0
    columns = []
    for f in basis:
        g = adjoint(f, b, b)
        if not is_cocycle(g):
            raise StructureError(
                f"Adjoint of an Ext representative on {b.host.name} is not closed"
            )
        coordinates = class_coordinates(g, space, budget)
        if coordinates is None:
            raise StructureError(
                f"Adjoint of an Ext representative leaves the truncation degree "
                f"{space.degree}"
            )
        columns.append(coordinates)

    def shifted(eigenvalue: int) -> linalg.RationalMatrix:
        return linalg.RationalMatrix(
            k,
            k,
            {
                (i, j): columns[j][i] - (eigenvalue if i == j else 0)
                for i in range(k)
                for j in range(k)
            },
        )

    return k - linalg.rank(shifted(1), budget), k - linalg.rank(shifted(-1), budget)


def ext_adjoint_split(
    m: MatrixFactorization,
    b: BilinearStructure,
    max_degree: Optional[int] = None,
    window: Optional[int] = None,
    weights: Optional[Sequence[int]] = None,
    slack: Optional[int] = None,
    budget: Optional[int] = None,
    result: Optional[ExtResult] = None,
) -> AdjointSplit:
    """Split Ext^0 and Ext^1 of m into selfadjoint and anti-selfadjoint parts.

    The involution f -> f^adj is written in the representative basis of each
    Ext space; the parts are its +1 and -1 eigenspaces.

    Raises:
        NonStabilizationError: If Ext does not stabilize
        StructureError: If the adjoint of a cocycle is not a cocycle
    """
    if not (b.host == m):
        raise StructureError(f"Structure {b.name} does not live on {m.name}")
    if result is None:
        result = ext(m, m, max_degree, window, weights, slack, budget=budget)
    require_stabilized(result)
    ext0_plus, ext0_minus = _involution_split(result, result.spaces[0], b, budget)
    ext1_plus, ext1_minus = _involution_split(result, result.spaces[1], b, budget)
    split = AdjointSplit(
        ext0_plus=ext0_plus,
        ext0_minus=ext0_minus,
        ext1_plus=ext1_plus,
        ext1_minus=ext1_minus,
        ext0=result.dims[0],
        ext1=result.dims[1],
        stabilized=result.stabilized,
    )
    logger.info(
        f"Adjoint split on {m.name}: Ext0 = {ext0_plus}+{ext0_minus}, "
        f"Ext1 = {ext1_plus}+{ext1_minus}"
    )
    return split


def verify_equivalence_witness(
    m: MatrixFactorization,
    m_prime: MatrixFactorization,
    f: MorphismPair,
    g: MorphismPair,
    h: MorphismPair,
    h_prime: MorphismPair,
) -> VerificationReport:
    """Check that f: M -> M' and g: M' -> M are inverse homotopy equivalences.

    The identities are D(f) = 0, D(g) = 0, g∘f - 1 = D(h) and f∘g - 1 = D(h')
    with h and h' odd endomorphisms of M and M'.
    """
    violations: List[Violation] = []

    def expect_zero(label: str, morphism: MorphismPair) -> None:
        for i, row in enumerate(entries(morphism.full())):
            for j, value in enumerate(row):
                if value:
                    violations.append(
                        Violation(
                            identity=label,
                            row=i,
                            col=j,
                            detail=poly.format_polynomial(value),
                        )
                    )

    ends = (f.source, f.target, g.source, g.target, h.source, h_prime.source)
    if not all(a == b for a, b in zip(ends, (m, m_prime, m_prime, m, m, m_prime))):
        violations.append(
            Violation(identity="endpoints", detail="morphisms do not connect M and M'")
        )
        return VerificationReport.from_violations(violations, "witness")
    if f.odd or g.odd or not (h.odd and h_prime.odd):
        violations.append(
            Violation(identity="parity", detail="f, g must be even and h, h' odd")
        )
        return VerificationReport.from_violations(violations, "witness")
    expect_zero("D(f) = 0", differential(f))
    expect_zero("D(g) = 0", differential(g))
    for label, product, homotopy, end in (
        ("g∘f - 1 = D(h)", compose(g, f), h, m),
        ("f∘g - 1 = D(h')", compose(f, g), h_prime, m_prime),
    ):
        minus_identity = _negate(identity_morphism(end))
        difference = add_morphisms(
            add_morphisms(product, minus_identity), _negate(differential(homotopy))
        )
        expect_zero(label, difference)
    return VerificationReport.from_violations(violations, "witness")


def _negate(f: MorphismPair) -> MorphismPair:
    return MorphismPair(f.source, f.target, f.odd, -f.s, -f.t)
