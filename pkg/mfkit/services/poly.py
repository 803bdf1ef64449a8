"""Exact multivariate polynomial arithmetic over the rationals.

This module contains pure functions for building polynomial rings, parsing and
printing polynomials, computing reduced Gröbner bases with Buchberger's
algorithm, reducing to normal form modulo an ideal, and building the Jacobian
and Tjurina quotients of a potential.

Polynomials are sympy ``PolyElement`` values living in a ``PolyRing`` over
``QQ``; monomials are exponent tuples indexed by the ring's variable list.
"""

import itertools
import logging
import random
import re
from dataclasses import dataclass
from tokenize import TokenError
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from sympy import Float, Integer, Rational, Symbol
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)
from sympy.polys.domains import QQ
from sympy.polys.orderings import build_product_order
from sympy.polys.rings import PolyElement, PolyRing

from mfkit import config
from mfkit.errors import (
    BudgetExceededError,
    DocumentError,
    NonIsolatedSingularityError,
    VariableMismatchError,
)

# Setup logging
logger = logging.getLogger(__name__)

Monomial = Tuple[int, ...]
Polynomial = PolyElement

ORDERS = ("grevlex", "grlex", "lex")

_IDENTIFIER = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*")
_ALLOWED_CHARS = re.compile(r"[a-zA-Z0-9_+\-*/^()\s]*")
_TRANSFORMATIONS = standard_transformations + (convert_xor,)


def make_ring(
    variables: Sequence[str],
    order: str = "grevlex",
    eliminate: Sequence[str] = (),
) -> PolyRing:
    """Build the polynomial ring QQ[variables] under a monomial order.

    Args:
        variables: Variable names, in ring order
        order: One of ``grevlex``, ``grlex`` or ``lex``
        eliminate: Variables to eliminate; when given, the ring uses a block
            order with these variables in the first block

    Returns:
        PolyRing: The ring

    Raises:
        ValueError: If a name is not an identifier, repeats, or the order is
            unknown
    """
    names = list(variables)
    if not names:
        raise ValueError("A polynomial ring needs at least one variable")
    for name in names:
        if not _IDENTIFIER.fullmatch(name):
            raise ValueError(f"Invalid variable name: {name!r}")
    if len(set(names)) != len(names):
        raise ValueError(f"Repeated variable in {names}")
    if order not in ORDERS:
        raise ValueError(f"Unknown monomial order {order!r}; expected one of {ORDERS}")

    symbols = [Symbol(name) for name in names]
    if not eliminate:
        return PolyRing(symbols, QQ, order)

    unknown = [name for name in eliminate if name not in names]
    if unknown:
        raise ValueError(f"Cannot eliminate unknown variables {unknown}")
    first = [Symbol(name) for name in names if name in eliminate]
    rest = [Symbol(name) for name in names if name not in eliminate]
    blocks = [(order, *first)]
    if rest:
        blocks.append((order, *rest))
    return PolyRing(symbols, QQ, build_product_order(tuple(blocks), symbols))


def variable_names(ring: PolyRing) -> List[str]:
    """Return the variable names of a ring."""
    return [str(symbol) for symbol in ring.symbols]


def merge_rings(first: PolyRing, second: PolyRing) -> PolyRing:
    """Return the grevlex ring on the union of two variable lists.

    Variables of ``first`` come first, followed by the new ones of ``second``.
    """
    names = variable_names(first)
    names += [name for name in variable_names(second) if name not in names]
    return make_ring(names)


def extend_ring(ring: PolyRing, new_variables: Sequence[str]) -> PolyRing:
    """Return the grevlex ring with ``new_variables`` appended."""
    return make_ring(variable_names(ring) + list(new_variables))


def embed(p: Polynomial, ring: PolyRing) -> Polynomial:
    """Move a polynomial into a ring containing all of its variables.

    Raises:
        VariableMismatchError: If the target ring lacks a variable of ``p``
    """
    if p.ring == ring:
        return p
    target = variable_names(ring)
    position = {
        i: target.index(name)
        for i, name in enumerate(variable_names(p.ring))
        if name in target
    }
    terms = {}
    for monom, coeff in p.items():
        moved = [0] * ring.ngens
        for i, e in enumerate(monom):
            if not e:
                continue
            if i not in position:
                raise VariableMismatchError(
                    f"Cannot move {format_polynomial(p)} into ring over {target}"
                )
            moved[position[i]] = e
        terms[tuple(moved)] = coeff
    return ring.from_dict(terms)


def parse_polynomial(text: str, ring: PolyRing) -> Polynomial:
    """Parse the polynomial text syntax into an element of ``ring``.

    The syntax allows identifiers, integer and rational coefficients,
    ``+ - * ^`` and parentheses.

    Args:
        text: Expression such as ``"x*y - z^3"`` or ``"1/2*x^2"``
        ring: Target ring; every identifier must be one of its variables

    Returns:
        Polynomial: The parsed polynomial

    Raises:
        DocumentError: If the text is malformed or uses unknown names
    """
    text = text.replace("−", "-")
    if not text.strip():
        raise DocumentError("Empty polynomial expression")
    if not _ALLOWED_CHARS.fullmatch(text):
        bad = next(ch for ch in text if not _ALLOWED_CHARS.fullmatch(ch))
        raise DocumentError(f"Unexpected character {bad!r} in {text!r}")

    names = set(variable_names(ring))
    for name in _IDENTIFIER.findall(text):
        if name not in names:
            raise DocumentError(f"Unknown variable {name!r} in {text!r}")

    local_dict = {name: Symbol(name) for name in names}
    global_dict = {
        "Integer": Integer,
        "Rational": Rational,
        "Symbol": Symbol,
        "Float": Float,
    }
    try:
        expr = parse_expr(
            text,
            local_dict=local_dict,
            global_dict=global_dict,
            transformations=_TRANSFORMATIONS,
        )
    except (SyntaxError, TypeError, TokenError) as exc:
        raise DocumentError(f"Cannot parse polynomial {text!r}: {exc}") from exc
    if expr.has(Float):
        raise DocumentError(f"Floating-point literals are not allowed: {text!r}")
    try:
        return ring.from_expr(expr)
    except ValueError as exc:
        raise DocumentError(f"Not a polynomial over QQ: {text!r}") from exc


def format_polynomial(p: Polynomial) -> str:
    """Print a polynomial canonically, terms in decreasing ring order.

    The output re-parses to the same polynomial, e.g. ``x^2*y - 1/2*z``.
    """
    if not p:
        return "0"
    symbols = variable_names(p.ring)
    pieces: List[str] = []
    for monom, coeff in p.terms():
        negative = coeff < 0
        magnitude = -coeff if negative else coeff
        factors = [
            name if e == 1 else f"{name}^{e}"
            for name, e in zip(symbols, monom)
            if e
        ]
        if magnitude != 1 or not factors:
            factors.insert(0, str(magnitude))
        term = "*".join(factors)
        if not pieces:
            pieces.append(f"-{term}" if negative else term)
        else:
            pieces.append(f" - {term}" if negative else f" + {term}")
    return "".join(pieces)


def arith(p: Polynomial, q: Polynomial, op: str) -> Polynomial:
    """Add, subtract or multiply two polynomials over the same variables.

    Args:
        p: Left operand
        q: Right operand
        op: One of ``add``, ``sub``, ``mul``

    Returns:
        Polynomial: The exact result

    Raises:
        VariableMismatchError: If the operands live over different variables
        ValueError: If ``op`` is unknown
    """
    if p.ring.symbols != q.ring.symbols:
        raise VariableMismatchError(
            f"Variable lists differ: {variable_names(p.ring)} vs "
            f"{variable_names(q.ring)}"
        )
    q = q.set_ring(p.ring)
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    raise ValueError(f"Unknown arithmetic operation {op!r}")


def total_degree(p: Polynomial, weights: Optional[Sequence[int]] = None) -> int:
    """Return the (weighted) total degree of ``p``; -1 for the zero polynomial."""
    if not p:
        return -1
    return max(monomial_degree(monom, weights) for monom in p.keys())


def monomial_degree(monom: Monomial, weights: Optional[Sequence[int]] = None) -> int:
    """Return the (weighted) degree of a monomial."""
    if weights is None:
        return sum(monom)
    return sum(w * e for w, e in zip(weights, monom))


def truncate(
    p: Polynomial, degree: int, weights: Optional[Sequence[int]] = None
) -> Polynomial:
    """Drop every term of (weighted) degree above ``degree``."""
    return p.ring.from_dict(
        {m: c for m, c in p.items() if monomial_degree(m, weights) <= degree}
    )


def monomials_up_to(
    ngens: int, degree: int, weights: Optional[Sequence[int]] = None
) -> List[Monomial]:
    """Enumerate all monomials of (weighted) degree at most ``degree``.

    The result is sorted by degree, then lexicographically, so that the
    coordinates of truncated linear systems are deterministic.
    """
    if degree < 0:
        return []
    weights = list(weights) if weights is not None else [1] * ngens
    if any(w <= 0 for w in weights):
        raise ValueError(f"Variable weights must be positive: {weights}")

    result: List[Monomial] = []

    def extend(prefix: List[int], remaining: int) -> None:
        i = len(prefix)
        if i == ngens:
            result.append(tuple(prefix))
            return
        for e in range(remaining // weights[i] + 1):
            extend(prefix + [e], remaining - e * weights[i])

    extend([], degree)
    result.sort(key=lambda m: (monomial_degree(m, weights), m))
    return result


def vanishes_at_origin(p: Polynomial) -> bool:
    """Return True when the constant term of ``p`` is zero."""
    return not p.const()


def random_polynomial(
    ring: PolyRing,
    rng: random.Random,
    degree: int = 1,
    terms: int = 2,
    constant: bool = True,
) -> Polynomial:
    """Draw a sparse polynomial with small integer coefficients.

    At most ``terms`` monomials of degree <= ``degree`` are used; with
    ``constant=False`` the result vanishes at the origin.
    """
    lowest = 0 if constant else 1
    pool = [m for m in monomials_up_to(ring.ngens, degree) if sum(m) >= lowest]
    chosen = rng.sample(pool, min(terms, len(pool)))
    return ring.from_dict({m: QQ(rng.choice((-2, -1, 1, 2))) for m in chosen})


def truncated_inverse(
    u: Polynomial, degree: int, weights: Optional[Sequence[int]] = None
) -> Tuple[Polynomial, bool]:
    """Invert a unit of the power-series ring up to a truncation degree.

    Args:
        u: Polynomial with nonzero constant term
        degree: Truncation degree of the returned series
        weights: Optional variable weights for the truncation

    Returns:
        Tuple of the truncated inverse and a flag that is True when the
        inverse is an exact polynomial inverse

    Raises:
        ZeroDivisionError: If ``u`` is not a unit
    """
    c = u.const()
    if not c:
        raise ZeroDivisionError(f"{format_polynomial(u)} is not a unit")
    ring = u.ring
    nilpotent = u - ring.ground_new(c)
    step = -nilpotent * ring.ground_new(1 / c)
    term = ring.ground_new(1 / c)
    inverse = ring.zero
    while term:
        inverse += term
        term = truncate(term * step, degree, weights)
    return inverse, u * inverse == ring.one


@dataclass(frozen=True)
class Ideal:
    """A polynomial ideal given by nonzero generators over a fixed ring."""

    generators: Tuple[Polynomial, ...]
    ring: PolyRing

    def __post_init__(self) -> None:
        if not self.generators:
            raise ValueError("An ideal needs at least one generator")
        for g in self.generators:
            if not g:
                raise ValueError("Ideal generators must be nonzero")
            if g.ring != self.ring:
                raise VariableMismatchError(
                    "Ideal generators must share the ideal's ring"
                )


def make_ideal(
    generators: Iterable[Polynomial],
    order: str = "grevlex",
    eliminate: Sequence[str] = (),
) -> Ideal:
    """Build an ideal, moving the generators into a ring with the given order.

    Zero generators are dropped.
    """
    gens = [g for g in generators if g]
    if not gens:
        raise ValueError("An ideal needs at least one nonzero generator")
    names = variable_names(gens[0].ring)
    for g in gens[1:]:
        if variable_names(g.ring) != names:
            raise VariableMismatchError(
                f"Generators over different variables: {names} vs "
                f"{variable_names(g.ring)}"
            )
    ring = make_ring(names, order, eliminate)
    return Ideal(tuple(g.set_ring(ring) for g in gens), ring)


@dataclass(frozen=True)
class QuotientRing:
    """The quotient of a polynomial ring by an ideal, with its Gröbner data.

    ``monomial_basis`` is None when the quotient is infinite-dimensional.
    """

    ideal: Ideal
    groebner: Tuple[Polynomial, ...]
    monomial_basis: Optional[Tuple[Monomial, ...]]

    @property
    def ring(self) -> PolyRing:
        return self.ideal.ring

    @property
    def is_finite(self) -> bool:
        return self.monomial_basis is not None

    @property
    def dimension(self) -> Optional[int]:
        if self.monomial_basis is None:
            return None
        return len(self.monomial_basis)

    def basis_polynomials(self) -> List[Polynomial]:
        """Return the standard monomials as polynomials."""
        if self.monomial_basis is None:
            raise NonIsolatedSingularityError(
                "The quotient is infinite-dimensional; no finite monomial basis"
            )
        one = self.ring.domain.one
        return [self.ring.from_dict({m: one}) for m in self.monomial_basis]


def spoly(f: Polynomial, g: Polynomial) -> Polynomial:
    """Return the S-polynomial of monic polynomials ``f`` and ``g``."""
    ring = f.ring
    lcm = ring.monomial_lcm(f.LM, g.LM)
    return f.mul_monom(ring.monomial_div(lcm, f.LM)) - g.mul_monom(
        ring.monomial_div(lcm, g.LM)
    )


def _update(
    basis: List[Polynomial], pairs: Set[Tuple[int, int]], f: Polynomial
) -> Tuple[List[Polynomial], Set[Tuple[int, int]]]:
    """Add ``f`` to the basis and prune the pair set.

    Pairs whose leading monomials are coprime are never created, and old pairs
    made redundant by ``f`` are removed by the chain criterion.
    """
    ring = f.ring
    lcm = ring.monomial_lcm
    mul = ring.monomial_mul
    div = ring.monomial_div
    lmf = f.LM
    lms = [g.LM for g in basis]
    new = len(basis)

    kept = {
        (i, j)
        for (i, j) in pairs
        if not div(lcm(lms[i], lms[j]), lmf)
        or lcm(lms[i], lms[j]) == lcm(lms[i], lmf)
        or lcm(lms[i], lms[j]) == lcm(lms[j], lmf)
    }
    fresh = {
        (i, new) for i in range(new) if lcm(lms[i], lmf) != mul(lms[i], lmf)
    }
    return basis + [f], kept | fresh


def buchberger(
    polys: Sequence[Polynomial], budget: Optional[int] = None
) -> List[Polynomial]:
    """Compute the reduced Gröbner basis of ``polys`` with Buchberger's algorithm.

    Args:
        polys: Nonzero generators over one ring
        budget: Maximum number of S-pair reductions; defaults to
            ``MFKIT_BUDGET``

    Returns:
        List[Polynomial]: Reduced monic basis, sorted by decreasing leading
        monomial

    Raises:
        BudgetExceededError: If more than ``budget`` pairs are reduced
    """
    budget = config.budget_from_env() if budget is None else budget
    ring = polys[0].ring
    basis: List[Polynomial] = []
    pairs: Set[Tuple[int, int]] = set()
    for f in polys:
        basis, pairs = _update(basis, pairs, f.monic())

    steps = 0
    while pairs:
        i, j = min(
            pairs,
            key=lambda p: ring.order(ring.monomial_lcm(basis[p[0]].LM, basis[p[1]].LM)),
        )
        pairs.remove((i, j))
        steps += 1
        if steps > budget:
            raise BudgetExceededError(
                f"Gröbner computation exceeded the budget of {budget} pair reductions"
            )
        r = spoly(basis[i], basis[j]).rem(basis)
        if r:
            basis, pairs = _update(basis, pairs, r.monic())

    minimal: List[Polynomial] = []
    for f in sorted(basis, key=lambda h: ring.order(h.LM)):
        if all(not ring.monomial_div(f.LM, g.LM) for g in minimal):
            minimal.append(f)
    reduced = [
        g.rem(minimal[:k] + minimal[k + 1 :]).monic() if len(minimal) > 1 else g
        for k, g in enumerate(minimal)
    ]
    reduced.sort(key=lambda h: ring.order(h.LM), reverse=True)
    logger.debug(f"Buchberger finished after {steps} pair reductions")
    return reduced


def standard_monomials(
    groebner_basis: Sequence[Polynomial], ring: PolyRing
) -> Optional[List[Monomial]]:
    """List the monomials outside the leading-monomial ideal, if finitely many.

    The quotient is finite-dimensional iff every variable has a pure power
    among the leading monomials.
    """
    leading = [g.LM for g in groebner_basis]
    if any(sum(lm) == 0 for lm in leading):
        return []
    bounds: List[int] = []
    for i in range(ring.ngens):
        powers = [
            lm[i]
            for lm in leading
            if lm[i] > 0 and all(e == 0 for k, e in enumerate(lm) if k != i)
        ]
        if not powers:
            return None
        bounds.append(min(powers))

    basis = [
        monom
        for monom in itertools.product(*(range(b) for b in bounds))
        if not any(ring.monomial_div(monom, lm) is not None for lm in leading)
    ]
    basis.sort(key=ring.order)
    return basis


def groebner(ideal: Ideal, budget: Optional[int] = None) -> QuotientRing:
    """Compute the reduced Gröbner basis of an ideal and its quotient basis.

    Args:
        ideal: Ideal with nonzero generators
        budget: Optional cap on S-pair reductions

    Returns:
        QuotientRing: Basis and standard monomials (None when infinite)
    """
    basis = buchberger(list(ideal.generators), budget)
    monomials = standard_monomials(basis, ideal.ring)
    logger.info(
        f"Gröbner basis over {variable_names(ideal.ring)}: {len(basis)} elements, "
        f"quotient dimension "
        f"{'infinite' if monomials is None else len(monomials)}"
    )
    return QuotientRing(
        ideal=ideal,
        groebner=tuple(basis),
        monomial_basis=None if monomials is None else tuple(monomials),
    )


def normal_form(p: Polynomial, quotient: QuotientRing) -> Polynomial:
    """Return the unique remainder of ``p`` modulo the Gröbner basis.

    The result lives in ``p``'s ring.

    Raises:
        VariableMismatchError: If ``p`` is over a different variable list
    """
    if p.ring.symbols != quotient.ring.symbols:
        raise VariableMismatchError(
            f"Cannot reduce a polynomial over {variable_names(p.ring)} modulo an "
            f"ideal over {variable_names(quotient.ring)}"
        )
    remainder = p.set_ring(quotient.ring).rem(list(quotient.groebner))
    return remainder.set_ring(p.ring)


def contains(quotient: QuotientRing, p: Polynomial) -> bool:
    """Decide ideal membership of ``p``."""
    return not normal_form(p, quotient)


def quotient_multiply(
    quotient: QuotientRing, a: Polynomial, b: Polynomial
) -> Polynomial:
    """Multiply two classes of the quotient and return the normal form."""
    return normal_form(
        normal_form(a, quotient) * normal_form(b, quotient), quotient
    )


def coordinates(p: Polynomial, quotient: QuotientRing) -> List[object]:
    """Coordinates of the class of ``p`` on the standard monomial basis."""
    if quotient.monomial_basis is None:
        raise NonIsolatedSingularityError(
            "The quotient is infinite-dimensional; no coordinates"
        )
    reduced = normal_form(p, quotient).set_ring(quotient.ring)
    return [reduced.get(m, QQ.zero) for m in quotient.monomial_basis]


def jacobian(w: Polynomial) -> List[Polynomial]:
    """Return the partial derivatives of ``w``."""
    return [w.diff(x) for x in w.ring.gens]


def tjurina(
    w: Polynomial, budget: Optional[int] = None
) -> Tuple[QuotientRing, Optional[int]]:
    """Compute the Tjurina algebra R/(w, ∂w) of a potential.

    Args:
        w: Nonzero potential vanishing at the origin
        budget: Optional Gröbner budget

    Returns:
        Tuple of the quotient ring and its dimension; the dimension is None
        when the singularity is not isolated

    Raises:
        ValueError: If ``w`` is zero or does not vanish at the origin
    """
    _check_potential(w)
    quotient = groebner(make_ideal([w] + jacobian(w)), budget)
    if not quotient.is_finite:
        logger.warning(
            f"Tjurina algebra of {format_polynomial(w)} is infinite-dimensional; "
            f"the singularity is not isolated"
        )
    return quotient, quotient.dimension


def milnor(
    w: Polynomial, budget: Optional[int] = None
) -> Tuple[QuotientRing, Optional[int]]:
    """Compute the Jacobian algebra R/(∂w) and the Milnor number."""
    _check_potential(w)
    quotient = groebner(make_ideal(jacobian(w)), budget)
    return quotient, quotient.dimension


def require_isolated(w: Polynomial, budget: Optional[int] = None) -> QuotientRing:
    """Return the Tjurina algebra, raising when it is infinite-dimensional."""
    quotient, dimension = tjurina(w, budget)
    if dimension is None:
        raise NonIsolatedSingularityError(
            f"{format_polynomial(w)} does not define an isolated singularity"
        )
    return quotient


def substitute(p: Polynomial, mapping: Dict[str, Polynomial]) -> Polynomial:
    """Substitute variables by polynomials of the same ring."""
    ring = p.ring
    names = variable_names(ring)
    pairs = [(ring.gens[names.index(name)], q) for name, q in mapping.items()]
    return p.compose(pairs) if pairs else p


def _check_potential(w: Polynomial) -> None:
    if not w:
        raise ValueError("The potential must be nonzero")
    if w.const():
        raise ValueError(
            f"The potential {format_polynomial(w)} must vanish at the origin"
        )
