"""Tangent and obstruction dimensions for deformations of a factorization.

The tangent space sits in 0 -> Ext^1 -> t -> I -> 0 where I is the space of
Q-exact classes: Tjurina classes h whose multiplication operator h·1 is a
coboundary. Obstructions live in the cokernel of the map sending the class of
h to the Ext^0 class of h·1. Multiplication by w and by every partial
derivative of w is null-homotopic, so this map is computed on the Tjurina
algebra R/(w, ∂w).
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from mfkit.errors import NonStabilizationError
from mfkit.schemas import DeformationReport, StructuredDims
from mfkit.services import linalg, poly
from mfkit.services.bilinear import BilinearStructure
from mfkit.services.homotopy import (
    ExtResult,
    class_coordinates,
    ext,
    ext_adjoint_split,
    require_stabilized,
)
from mfkit.services.mf_core import (
    MatrixFactorization,
    max_entry_degree,
    q_matrix,
    scalar_morphism,
)
from mfkit.services.poly import Polynomial

# Setup logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QExactIdeal:
    """The Q-exact classes as a subspace of the Tjurina algebra.

    ``basis`` holds polynomials in normal form; ``image_dim`` is the dimension
    of the image of the Tjurina algebra in Ext^0.
    """

    tjurina: poly.QuotientRing
    basis: Tuple[Polynomial, ...]
    image_dim: int
    ext: ExtResult

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def tjurina_dim(self) -> int:
        return self.tjurina.dimension or 0


def _ext_for_tjurina(
    m: MatrixFactorization,
    tjurina: poly.QuotientRing,
    max_degree: Optional[int],
    window: Optional[int],
    weights: Optional[Sequence[int]],
    slack: Optional[int],
    budget: Optional[int],
) -> ExtResult:
    """Ext of m with itself, truncated high enough to hold every h·1."""
    basis_degree = max(
        (
            poly.monomial_degree(monom, weights)
            for monom in tjurina.monomial_basis or ()
        ),
        default=0,
    )
    start = max(max_entry_degree(q_matrix(m), weights), basis_degree)
    result = ext(
        m,
        m,
        max_degree,
        window,
        weights,
        slack,
        start_degree=start,
        budget=budget,
    )
    return require_stabilized(result)


def q_exact_ideal(
    m: MatrixFactorization,
    max_degree: Optional[int] = None,
    window: Optional[int] = None,
    weights: Optional[Sequence[int]] = None,
    slack: Optional[int] = None,
    budget: Optional[int] = None,
    result: Optional[ExtResult] = None,
) -> QExactIdeal:
    """Find the Tjurina classes h with h·1 a coboundary.

    Each standard monomial e is sent to the Ext^0 class of e·1; the Q-exact
    classes form the kernel of this linear map.

    Raises:
        NonIsolatedSingularityError: If the Tjurina algebra is infinite
        NonStabilizationError: If Ext does not stabilize
    """
    tjurina = poly.require_isolated(m.potential, budget)
    if result is None:
        result = _ext_for_tjurina(
            m, tjurina, max_degree, window, weights, slack, budget
        )
    require_stabilized(result)
    space = result.spaces[0]
    monomials = [e.set_ring(m.ring) for e in tjurina.basis_polynomials()]

    columns: List[Tuple[object, ...]] = []
    for e in monomials:
        coordinates = class_coordinates(scalar_morphism(m, e), space, budget)
        if coordinates is None:
            raise NonStabilizationError(
                f"Truncation degree {space.degree} is too low for "
                f"{poly.format_polynomial(e)}·1 on {m.name}"
            )
        columns.append(coordinates)
    k, mu = space.dimension, len(monomials)
    classes = linalg.RationalMatrix(
        k, mu, {(i, j): columns[j][i] for j in range(mu) for i in range(k)}
    )
    image_dim = linalg.rank(classes, budget)
    basis = []
    for vector in linalg.kernel_basis(classes, budget):
        h = m.ring.zero
        for coeff, e in zip(vector, monomials):
            if coeff:
                h += e * m.ring.ground_new(coeff)
        basis.append(h)
    logger.info(
        f"Q-exact classes of {m.name}: {len(basis)} of {mu} Tjurina classes, "
        f"image in Ext0 of dimension {image_dim}"
    )
    return QExactIdeal(tjurina, tuple(basis), image_dim, result)


def is_closed_ideal(ideal: QExactIdeal) -> bool:
    """Check that the Q-exact classes are closed under Tjurina multiplication."""
    tjurina = ideal.tjurina
    if not ideal.basis:
        return True

    def coordinates(h: Polynomial) -> Tuple[object, ...]:
        return tuple(poly.coordinates(h, tjurina))

    span = [dict(enumerate(coordinates(h))) for h in ideal.basis]
    size = ideal.tjurina_dim
    rank = linalg.span_rank(span, size)
    for e in tjurina.basis_polynomials():
        for h in ideal.basis:
            product = poly.quotient_multiply(tjurina, e, h.set_ring(tjurina.ring))
            extended = span + [dict(enumerate(coordinates(product)))]
            if linalg.span_rank(extended, size) != rank:
                return False
    return True


def tangent_dims(
    m: MatrixFactorization,
    max_degree: Optional[int] = None,
    window: Optional[int] = None,
    weights: Optional[Sequence[int]] = None,
    slack: Optional[int] = None,
    budget: Optional[int] = None,
) -> DeformationReport:
    """Tangent and obstruction dimensions of the deformation functor of m.

    The tangent dimension is dim Ext^1 + dim I. With the potential kept fixed
    the tangent space is Ext^1 and the obstruction space is Ext^0.
    """
    ideal = q_exact_ideal(m, max_degree, window, weights, slack, budget)
    result = ideal.ext
    ext0, ext1 = result.dims
    report = DeformationReport(
        name=m.name,
        ext0_dim=ext0,
        ext1_dim=ext1,
        ideal_dim=ideal.dimension,
        tangent_dim=ext1 + ideal.dimension,
        obstruction_dim=ext0 - ideal.image_dim,
        tjurina_dim=ideal.tjurina_dim,
        rigid_tangent_dim=ext1,
        rigid_obstruction_dim=ext0,
        truncation_degree=result.truncation_degree,
        stabilized=result.stabilized,
    )
    logger.info(
        f"Deformations of {m.name}: tangent {report.tangent_dim} "
        f"(Ext1 {ext1} + ideal {ideal.dimension}), "
        f"obstruction {report.obstruction_dim}"
    )
    return report


def obstruction_dims(
    m: MatrixFactorization,
    max_degree: Optional[int] = None,
    window: Optional[int] = None,
    weights: Optional[Sequence[int]] = None,
    slack: Optional[int] = None,
    budget: Optional[int] = None,
) -> int:
    """Dimension of the cokernel of the Tjurina algebra in Ext^0."""
    ideal = q_exact_ideal(m, max_degree, window, weights, slack, budget)
    return ideal.ext.dims[0] - ideal.image_dim


def tangent_dims_structured(
    m: MatrixFactorization,
    b: BilinearStructure,
    max_degree: Optional[int] = None,
    window: Optional[int] = None,
    weights: Optional[Sequence[int]] = None,
    slack: Optional[int] = None,
    budget: Optional[int] = None,
) -> DeformationReport:
    """Deformation dimensions of the pair (m, b).

    For an untwisted structure the tangent space is Ext^1,- + I and the
    obstructions live in Ext^0,+; for a twisted one they are Ext^1,+ + I and
    Ext^0,-. Every h·1 is selfadjoint, so the Tjurina image lies in Ext^0,+.
    """
    ideal = q_exact_ideal(m, max_degree, window, weights, slack, budget)
    result = ideal.ext
    split = ext_adjoint_split(m, b, budget=budget, result=result)
    if b.twisted:
        signed_ext1 = split.ext1_plus
        signed_ext0 = split.ext0_minus
        obstruction = split.ext0_minus
    else:
        signed_ext1 = split.ext1_minus
        signed_ext0 = split.ext0_plus
        obstruction = split.ext0_plus - ideal.image_dim
    structured = StructuredDims(
        kind=b.kind,
        sign=b.sign,
        split=split,
        tangent_dim=signed_ext1 + ideal.dimension,
        obstruction_dim=obstruction,
        rigid_tangent_dim=signed_ext1,
        rigid_obstruction_dim=signed_ext0,
    )
    ext0, ext1 = result.dims
    return DeformationReport(
        name=m.name,
        ext0_dim=ext0,
        ext1_dim=ext1,
        ideal_dim=ideal.dimension,
        tangent_dim=ext1 + ideal.dimension,
        obstruction_dim=ext0 - ideal.image_dim,
        tjurina_dim=ideal.tjurina_dim,
        rigid_tangent_dim=ext1,
        rigid_obstruction_dim=ext0,
        structured=structured,
        truncation_degree=result.truncation_degree,
        stabilized=result.stabilized,
    )
