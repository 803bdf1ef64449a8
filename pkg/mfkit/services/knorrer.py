"""Knörrer's functor and the versal family of the node.

theta sends a factorization (P, Q) of pi to the factorization
phi = [[x·1, P], [Q, y·1]], psi = [[y·1, -P], [-Q, x·1]] of xy - pi over two
fresh variables. Its underlying modules are M1 ⊕ M0 in both degrees.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from sympy.polys.rings import PolyRing

from mfkit.errors import StructureError, VariableCollisionError
from mfkit.schemas import CertificateEntry, VersalCertificate
from mfkit.services import linalg, poly
from mfkit.services.bilinear import (
    TWISTED,
    UNTWISTED,
    BilinearStructure,
    gauge_structure,
    tensor_structure,
    verify_structure,
    xy_quadratic,
)
from mfkit.services.mf_core import (
    GaugePair,
    MatrixFactorization,
    MorphismPair,
    block,
    convert_matrix,
    convert_mf,
    entries,
    gauge,
    identity_matrix,
    make_mf,
    map_entries,
    negate_potential,
    poly_matrix,
    scalar_matrix,
    substitute_mf,
    tensor,
    transpose,
    zero_matrix,
)
from mfkit.services.poly import Polynomial

# Setup logging
logger = logging.getLogger(__name__)

VERSAL_MODES = ("plain", "orthogonal", "symplectic")


@dataclass(frozen=True)
class Provenance:
    """Where a Knörrer output came from and which normalizations were applied."""

    source: str
    kind: Optional[str] = None
    sign: Optional[int] = None
    normalization: Tuple[str, ...] = ()


@dataclass(frozen=True)
class KnorrerOutput:
    """A factorization of xy - pi with its optional transported structure."""

    result: MatrixFactorization
    new_variables: Tuple[str, ...]
    structure: Optional[BilinearStructure] = None
    provenance: Provenance = field(default_factory=lambda: Provenance(""))


def _fresh_ring(m: MatrixFactorization, new_variables: Sequence[str]) -> PolyRing:
    if len(set(new_variables)) != len(new_variables):
        raise VariableCollisionError(f"New variables {list(new_variables)} repeat")
    clash = [name for name in new_variables if name in m.variables]
    if clash:
        raise VariableCollisionError(
            f"Variables {clash} already occur in {m.name} over {m.variables}"
        )
    return poly.extend_ring(m.ring, new_variables)


def theta(m: MatrixFactorization, x: str = "x", y: str = "y") -> KnorrerOutput:
    """Apply Knörrer's functor with fresh variables x and y.

    Raises:
        VariableCollisionError: If x or y is already a variable of m
    """
    ring = _fresh_ring(m, (x, y))
    lifted = convert_mf(m, ring)
    gx, gy = ring.gens[-2], ring.gens[-1]
    r = m.rank
    phi = block(
        [
            [scalar_matrix(r, gx), lifted.phi],
            [lifted.psi, scalar_matrix(r, gy)],
        ]
    )
    psi = block(
        [
            [scalar_matrix(r, gy), -lifted.phi],
            [-lifted.psi, scalar_matrix(r, gx)],
        ]
    )
    result = MatrixFactorization(
        phi, psi, gx * gy - lifted.potential, f"theta_{m.name}"
    )
    logger.info(
        f"theta({m.name}) over {result.variables}: rank {result.rank}, potential "
        f"{poly.format_polynomial(result.potential)}"
    )
    return KnorrerOutput(result, (x, y), provenance=Provenance(m.name))


def _swapped(m: MatrixFactorization) -> MatrixFactorization:
    """The factorization (psi, -phi) of -w."""
    return MatrixFactorization(m.psi, -m.phi, -m.potential, f"{m.name}_swap")


def _swap_gauge(r: int, ring: PolyRing) -> GaugePair:
    signs = [1] * r + [-1] * r
    s = poly_matrix(
        [[signs[i] if i == j else 0 for j in range(2 * r)] for i in range(2 * r)],
        ring,
    )
    return GaugePair(s, identity_matrix(2 * r, ring))


def theta_via_tensor(
    m: MatrixFactorization, x: str = "x", y: str = "y"
) -> MatrixFactorization:
    """Rebuild theta(m) as the gauge transform of (psi, -phi) ⊗ (x, y).

    The gauge is S = diag(1, -1), T = 1; the result equals theta(m).result.
    """
    _fresh_ring(m, (x, y))
    product = tensor(_swapped(m), xy_quadratic(x, y).host)
    transformed = gauge(product, _swap_gauge(m.rank, product.ring)).result
    return transformed.renamed(f"theta_{m.name}")


def _swapped_structure(b: BilinearStructure) -> BilinearStructure:
    host = _swapped(b.host)
    if b.twisted:
        return BilinearStructure(TWISTED, b.sign, b.b1, -b.b0, host, b.name)
    return BilinearStructure(UNTWISTED, b.sign, b.b1, b.b0, host, b.name)


def theta_structure(
    m: MatrixFactorization, b: BilinearStructure, x: str = "x", y: str = "y"
) -> BilinearStructure:
    """Transport a structure on m to theta(m).

    The structure is tensored with the quadratic form of (x, y): a twisted
    structure of sign eps becomes untwisted of sign eps, and an untwisted one
    becomes twisted of sign -eps.

    Raises:
        StructureError: If b does not live on m or the result fails to verify
    """
    if not (b.host == m):
        raise StructureError(f"Structure {b.name} does not live on {m.name}")
    product = tensor_structure(_swapped_structure(b), xy_quadratic(x, y))
    moved = gauge_structure(product, _swap_gauge(m.rank, product.host.ring))
    target = theta(m, x, y).result
    result = BilinearStructure(
        moved.kind, moved.sign, moved.b0, moved.b1, target, f"theta_{b.name}"
    )
    report = verify_structure(result)
    if not report.valid:
        raise StructureError(
            f"Transported structure on {target.name} fails: "
            + "; ".join(v.describe() for v in report.violations)
        )
    logger.info(f"theta transports {b.describe()} to {result.describe()}")
    return result


def theta_with_structure(
    m: MatrixFactorization,
    b: Optional[BilinearStructure] = None,
    x: str = "x",
    y: str = "y",
) -> KnorrerOutput:
    """theta(m) together with the transported structure when one is given."""
    output = theta(m, x, y)
    if b is None:
        return output
    moved = theta_structure(m, b, x, y)
    return KnorrerOutput(
        output.result, (x, y), moved, Provenance(m.name, b.kind, b.sign)
    )


def negate_structure(b: BilinearStructure) -> BilinearStructure:
    """Carry a structure along (phi, psi) -> (phi, -psi)."""
    host = negate_potential(b.host)
    b1 = -b.b1 if b.twisted else b.b1
    return BilinearStructure(b.kind, b.sign, b.b0, b1, host, b.name)


def substitute_structure(
    b: BilinearStructure, mapping: Dict[str, Polynomial]
) -> BilinearStructure:
    """Apply a substitution of variables to a structure and its host."""
    host = substitute_mf(b.host, mapping)

    def apply(e: Polynomial) -> Polynomial:
        return poly.substitute(e, mapping)

    return BilinearStructure(
        b.kind,
        b.sign,
        map_entries(b.b0, apply),
        map_entries(b.b1, apply),
        host,
        b.name,
    )


def theta_squared(
    m: MatrixFactorization,
    b: Optional[BilinearStructure] = None,
    variables: Tuple[str, str, str, str] = ("x", "y", "u", "v"),
) -> KnorrerOutput:
    """Apply theta twice and normalize the potential to xy + uv - pi.

    theta over (x, y) then (u, v) gives uv - xy + pi. The substitution u -> -u
    followed by (phi, psi) -> (phi, -psi) turns it into xy + uv - pi; both
    steps are recorded in the provenance. A given structure is carried along
    and ends with the opposite sign.
    """
    x, y, u, v = variables
    _fresh_ring(m, variables)
    first = theta(m, x, y).result
    second = theta(first, u, v).result
    ring = second.ring
    flip = {u: -ring.gens[poly.variable_names(ring).index(u)]}
    normalized = negate_potential(substitute_mf(second, flip)).renamed(
        f"theta2_{m.name}"
    )
    steps = (f"{u} -> -{u}", "(phi, psi) -> (phi, -psi)")

    structure = None
    if b is not None:
        once = theta_structure(m, b, x, y)
        twice = theta_structure(first, once, u, v)
        moved = negate_structure(substitute_structure(twice, flip))
        structure = BilinearStructure(
            moved.kind, moved.sign, moved.b0, moved.b1, normalized, f"theta2_{b.name}"
        )
        report = verify_structure(structure)
        if not report.valid:
            raise StructureError(
                f"Normalized structure on {normalized.name} fails: "
                + "; ".join(v.describe() for v in report.violations)
            )
    logger.info(
        f"theta^2({m.name}): potential {poly.format_polynomial(normalized.potential)}"
    )
    return KnorrerOutput(
        normalized,
        variables,
        structure,
        Provenance(
            m.name,
            None if b is None else b.kind,
            None if b is None else b.sign,
            steps,
        ),
    )


def theta_morphism(
    f: MorphismPair, x: str = "x", y: str = "y"
) -> MorphismPair:
    """Transport a morphism f: M -> M' to theta(M) -> theta(M').

    An even (S, T) becomes diag(T, S) in both degrees; an odd (S, T) becomes
    S_theta = [[0, -T], [-S, 0]] and T_theta = [[0, T], [S, 0]].
    """
    source = theta(f.source, x, y).result
    target = theta(f.target, x, y).result
    ring = source.ring
    s = convert_matrix(f.s, ring)
    t = convert_matrix(f.t, ring)
    zero = zero_matrix(f.target.rank, f.source.rank, ring)
    if f.odd:
        return MorphismPair(
            source,
            target,
            True,
            block([[zero, -t], [-s, zero]]),
            block([[zero, t], [s, zero]]),
        )
    diagonal = block([[t, zero], [zero, s]])
    return MorphismPair(source, target, False, diagonal, diagonal)


def theta_gauge_witness(
    m: MatrixFactorization, g: GaugePair, x: str = "x", y: str = "y"
) -> GaugePair:
    """The gauge diag(T, S) in both degrees taking theta(m) to theta(gauge(m, g))."""
    ring = _fresh_ring(m, (x, y))
    s = convert_matrix(g.s, ring)
    t = convert_matrix(g.t, ring)
    zero = zero_matrix(m.rank, m.rank, ring)
    diagonal = block([[t, zero], [zero, s]])
    return GaugePair(diagonal, diagonal)


# Versal family of the node


@dataclass(frozen=True)
class VersalFamily:
    """theta(P, Q) over the base cut out by PQ = QP = t·1.

    ``eliminated`` is the rank-one family with t replaced by its value, an
    honest factorization over the remaining parameters.
    """

    rank: int
    mode: str
    family: MatrixFactorization
    base_variables: Tuple[str, ...]
    relations: Tuple[Polynomial, ...]
    quotient: poly.QuotientRing
    certificate: VersalCertificate
    eliminated: Optional[MatrixFactorization]


def _generic(prefix: str, r: int, ring: PolyRing) -> List[List[Polynomial]]:
    names = poly.variable_names(ring)
    return [
        [ring.gens[names.index(f"{prefix}{i + 1}{j + 1}")] for j in range(r)]
        for i in range(r)
    ]


def _tangent_dimension(
    variables: Sequence[str], relations: Sequence[Polynomial]
) -> int:
    """Embedding dimension of the base: variables minus independent linear parts."""
    n = len(variables)
    linear = []
    for rel in relations:
        row = {}
        for monom, coeff in rel.items():
            if sum(monom) == 1:
                row[monom.index(1)] = coeff
        linear.append(row)
    system = linalg.RationalMatrix(
        len(linear),
        n,
        {(i, j): v for i, row in enumerate(linear) for j, v in row.items()},
    )
    return n - linalg.rank(system)


def versal_family(
    r: int, mode: str = "plain", budget: Optional[int] = None
) -> VersalFamily:
    """Build the versal family of mf_xy(r, r) and certify it.

    Args:
        r: Half rank, 1 or 2
        mode: ``plain`` for generic P and Q, ``orthogonal`` for Q = P^t, or
            ``symplectic`` for Q = J^-1 P^t J with J the standard symplectic
            form (r = 2 only)
        budget: Gröbner budget for the relation ideal

    Returns:
        VersalFamily: The family with a certificate that every entry of
            phi*psi - (xy - t)·1 and psi*phi - (xy - t)·1 reduces to zero
            modulo the relations

    Raises:
        ValueError: If r or mode is unsupported
    """
    if r not in (1, 2):
        raise ValueError(f"Versal families are supported for r in (1, 2), got {r}")
    if mode not in VERSAL_MODES:
        raise ValueError(
            f"Unknown versal mode {mode!r}; expected one of {VERSAL_MODES}"
        )
    if mode == "symplectic" and r % 2:
        raise ValueError("The symplectic versal family needs even r")

    p_names = [f"p{i + 1}{j + 1}" for i in range(r) for j in range(r)]
    q_names = [f"q{i + 1}{j + 1}" for i in range(r) for j in range(r)]
    base = p_names + (q_names if mode == "plain" else []) + ["t"]
    ring = poly.make_ring(base)
    t = ring.gens[-1]
    p_rows = _generic("p", r, ring)
    p = poly_matrix(p_rows, ring)
    if mode == "plain":
        q = poly_matrix(_generic("q", r, ring), ring)
    elif mode == "orthogonal":
        q = transpose(p)
    else:
        j = poly_matrix([[0, 1], [-1, 0]], ring)
        j_inv = poly_matrix([[0, -1], [1, 0]], ring)
        q = j_inv * transpose(p) * j

    relations: List[Polynomial] = []
    for product in (p * q, q * p):
        for i, row in enumerate(entries(product)):
            for k, value in enumerate(row):
                rel = value - t if i == k else value
                if rel and rel not in relations and -rel not in relations:
                    relations.append(rel)
    pair = make_mf(entries(p), entries(q), t, f"versal_{r}_{mode}")
    family = theta(pair, "x", "y").result.renamed(f"versal_{r}_{mode}")
    full_ring = family.ring
    quotient = poly.groebner(
        poly.make_ideal([poly.embed(rel, full_ring) for rel in relations]), budget
    )
    cert_entries: List[CertificateEntry] = []
    for label, product in (
        ("phi*psi", family.phi * family.psi),
        ("psi*phi", family.psi * family.phi),
    ):
        for i, row in enumerate(entries(product)):
            for k, value in enumerate(row):
                deviation = value - family.potential if i == k else value
                reduced = poly.normal_form(deviation, quotient)
                cert_entries.append(
                    CertificateEntry(
                        product=label,
                        row=i,
                        col=k,
                        reduced=poly.format_polynomial(reduced),
                    )
                )
    holds = all(entry.reduced == "0" for entry in cert_entries)
    certificate = VersalCertificate(
        rank=r,
        mode=mode,
        variables=family.variables,
        relations=[poly.format_polynomial(rel) for rel in relations],
        entries=cert_entries,
        holds=holds,
        tangent_dim=_tangent_dimension(base, relations),
    )

    eliminated = None
    if r == 1:
        value = poly.embed(relations[0] + t, full_ring)
        eliminated = substitute_mf(family, {"t": value}).renamed(
            f"versal_{r}_{mode}_eliminated"
        )
    if holds:
        logger.info(
            f"Versal family r={r} ({mode}): {len(relations)} relations, "
            f"certificate holds"
        )
    else:
        logger.warning(f"Versal family r={r} ({mode}): certificate fails")
    return VersalFamily(
        r,
        mode,
        family,
        tuple(base),
        tuple(relations),
        quotient,
        certificate,
        eliminated,
    )
