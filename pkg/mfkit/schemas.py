"""Pydantic schemas for reports and machine-readable records."""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, NonNegativeInt, PositiveInt, model_validator

from mfkit import config


class Violation(BaseModel):
    """One failed identity, located at a matrix entry when applicable."""

    identity: str = Field(..., description="Identity that failed, e.g. 'phi*psi = w'")
    row: Optional[int] = Field(None, description="Row of the offending entry")
    col: Optional[int] = Field(None, description="Column of the offending entry")
    detail: str = Field("", description="Offending value, printed canonically")

    def describe(self) -> str:
        where = f" at ({self.row}, {self.col})" if self.row is not None else ""
        detail = f": {self.detail}" if self.detail else ""
        return f"{self.identity}{where}{detail}"


class VerificationReport(BaseModel):
    """Outcome of checking a list of identities; empty violations iff valid."""

    name: str = Field("", description="Name of the checked object")
    valid: bool = Field(..., description="True when no identity failed")
    violations: List[Violation] = Field(
        default_factory=list, description="Every failed identity"
    )

    @classmethod
    def from_violations(
        cls, violations: List[Violation], name: str = ""
    ) -> "VerificationReport":
        return cls(name=name, valid=not violations, violations=violations)


class CommutationReport(BaseModel):
    """Outcome of the adjoint/differential commutation check."""

    holds: bool = Field(..., description="True when the rule holds entrywise")
    sign: int = Field(..., description="+1 for untwisted, -1 for twisted structures")
    parity: str = Field(..., description="'even' or 'odd' degree of the morphism")
    violations: List[Violation] = Field(default_factory=list)


class AdjointSplit(BaseModel):
    """Dimensions of the selfadjoint (+) and anti-selfadjoint (-) Ext parts."""

    ext0_plus: NonNegativeInt
    ext0_minus: NonNegativeInt
    ext1_plus: NonNegativeInt
    ext1_minus: NonNegativeInt
    ext0: NonNegativeInt
    ext1: NonNegativeInt
    stabilized: bool = Field(
        True, description="Whether the underlying Ext sweep stabilized"
    )

    @model_validator(mode="after")
    def _parts_sum(self) -> "AdjointSplit":
        if self.ext0_plus + self.ext0_minus != self.ext0:
            raise ValueError("Ext0 split does not sum to the Ext0 dimension")
        if self.ext1_plus + self.ext1_minus != self.ext1:
            raise ValueError("Ext1 split does not sum to the Ext1 dimension")
        return self


class StructuredDims(BaseModel):
    """Structured deformation dimensions for a quadratic or twisted form."""

    kind: str = Field(..., description="'untwisted' or 'twisted'")
    sign: int = Field(..., description="Structure sign, +1 or -1")
    split: AdjointSplit
    tangent_dim: NonNegativeInt = Field(
        ..., description="Signed Ext1 part plus the Q-exact ideal"
    )
    obstruction_dim: NonNegativeInt = Field(
        ..., description="Cokernel of the Tjurina algebra in the signed Ext0 part"
    )
    rigid_tangent_dim: NonNegativeInt = Field(
        ..., description="Signed Ext1 part, potential kept fixed"
    )
    rigid_obstruction_dim: NonNegativeInt = Field(
        ..., description="Signed Ext0 part, potential kept fixed"
    )


class DeformationReport(BaseModel):
    """Tangent and obstruction dimensions of the deformation functor."""

    name: str = ""
    ext0_dim: NonNegativeInt
    ext1_dim: NonNegativeInt
    ideal_dim: NonNegativeInt = Field(..., description="Dimension of the Q-exact ideal")
    tangent_dim: NonNegativeInt
    obstruction_dim: NonNegativeInt
    tjurina_dim: NonNegativeInt
    rigid_tangent_dim: NonNegativeInt = Field(
        ..., description="Tangent dimension with the potential kept fixed"
    )
    rigid_obstruction_dim: NonNegativeInt = Field(
        ..., description="Obstruction space dimension with the potential kept fixed"
    )
    structured: Optional[StructuredDims] = None
    truncation_degree: int
    stabilized: bool

    @model_validator(mode="after")
    def _exact_sequence(self) -> "DeformationReport":
        if self.tangent_dim != self.ext1_dim + self.ideal_dim:
            raise ValueError("tangent_dim must equal ext1_dim + ideal_dim")
        if self.ideal_dim > self.tjurina_dim:
            raise ValueError("ideal_dim cannot exceed tjurina_dim")
        return self


class CertificateEntry(BaseModel):
    """Normal form of one entry of phi*psi - potential*1 (or psi*phi)."""

    product: str = Field(..., description="'phi*psi' or 'psi*phi'")
    row: int
    col: int
    reduced: str = Field(..., description="Normal form modulo the relations")


class VersalCertificate(BaseModel):
    """Certificate that a versal family satisfies the factorization axioms."""

    rank: int
    mode: str
    variables: List[str]
    relations: List[str]
    entries: List[CertificateEntry]
    holds: bool
    tangent_dim: NonNegativeInt


class CommandRecord(BaseModel):
    """One machine-readable output record; the field order is stable."""

    command: str
    name: Optional[str] = None
    inputs: Optional[List[str]] = None
    valid: Optional[bool] = None
    dims: Optional[List[int]] = None
    stabilized: Optional[bool] = None
    truncation_degree: Optional[int] = None
    history: Optional[List[List[int]]] = None
    kind: Optional[str] = None
    sign: Optional[int] = None
    violations: Optional[List[str]] = None
    details: Optional[Dict[str, Any]] = None
    document: Optional[str] = None


class CommandFlags(BaseModel):
    """Options of a CLI command; unset names fall back to the document."""

    max_degree: NonNegativeInt = Field(
        default_factory=lambda: config.MAX_DEGREE,
        description="Largest truncation degree for Ext and deformations",
    )
    window: PositiveInt = Field(
        default_factory=lambda: config.WINDOW,
        description="Consecutive equal dimensions required to stop the sweep",
    )
    budget: PositiveInt = Field(
        default_factory=config.budget_from_env,
        description="Gröbner pair-reduction and linear-solve step cap",
    )
    weights: Optional[List[PositiveInt]] = Field(
        None, description="Variable weights for the truncation degree"
    )
    slack: Optional[NonNegativeInt] = Field(
        None, description="Extra degree allowed for coboundary preimages"
    )
    name: Optional[str] = Field(None, description="Factorization to act on")
    source: Optional[str] = Field(None, description="Source or left operand")
    target: Optional[str] = Field(None, description="Target or right operand")
    structures: List[str] = Field(
        default_factory=list, description="Structure names, in order"
    )
    morphism: Optional[str] = Field(None, description="Morphism to check")
    new_vars: List[str] = Field(
        default_factory=list, description="Fresh variables for Knörrer's functor"
    )
    kind: Optional[str] = Field(None, description="'untwisted' or 'twisted'")
    structure_degree: NonNegativeInt = Field(
        0, description="Entry degree bound for structure search"
    )
    rank: PositiveInt = Field(1, description="Half rank r of the versal family")
    mode: str = Field("plain", description="Versal mode: plain, orthogonal, symplectic")
    samples: NonNegativeInt = Field(
        20, description="Random morphisms per parity for commutation checks"
    )
    seed: int = Field(0, description="Seed for random morphisms")
