"""Command dispatch for the mfkit CLI.

Each command takes a parsed document and a :class:`CommandFlags` and returns a
:class:`CommandReport` holding machine-readable records, human-readable lines
and an exit code. Mathematical invalidity sets exit code 1 and
non-stabilization sets 3; errors propagate to the caller.
"""

import logging
import random
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Dict, List, Optional

from mfkit.document import InputDocument, build_document, emit_document, parse
from mfkit.errors import DocumentError
from mfkit.schemas import CommandFlags, CommandRecord, VerificationReport
from mfkit.services import poly
from mfkit.services.bilinear import (
    KINDS,
    BilinearStructure,
    check_commutation,
    structure_search,
    structure_summary,
    tensor_structure,
    verify_structure,
)
from mfkit.services.deform import tangent_dims, tangent_dims_structured
from mfkit.services.homotopy import ext, ext_adjoint_split
from mfkit.services.knorrer import KnorrerOutput, theta_squared, theta_with_structure
from mfkit.services.knorrer import versal_family as build_versal_family
from mfkit.services.mf_core import (
    MatrixFactorization,
    direct_sum,
    dual,
    random_morphism,
    shift,
    tensor,
    transpose_dual,
    verify,
)

# Setup logging
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_UNSTABLE = 3

FORMATS = ("text", "records")


@dataclass
class CommandReport:
    """Records, text lines and exit code of one command run."""

    records: List[CommandRecord] = field(default_factory=list)
    lines: List[str] = field(default_factory=list)
    exit_code: int = EXIT_OK

    def add(self, record: CommandRecord, *lines: str) -> None:
        self.records.append(record)
        self.lines.extend(lines)
        if record.valid is False:
            self.exit_code = max(self.exit_code, EXIT_INVALID)
        if record.stabilized is False:
            self.exit_code = EXIT_UNSTABLE


Handler = Callable[[InputDocument, CommandFlags], CommandReport]


# Name resolution


def _mf(document: InputDocument, name: Optional[str], role: str) -> MatrixFactorization:
    if name is not None:
        return document.mf(name)
    if len(document.mfs) == 1:
        return next(iter(document.mfs.values()))
    raise DocumentError(
        f"Specify the {role} factorization; the document defines "
        f"{len(document.mfs)}"
    )


def _structure(
    document: InputDocument, flags: CommandFlags, index: int = 0
) -> BilinearStructure:
    if len(flags.structures) > index:
        return document.structure(flags.structures[index])
    if index == 0 and len(document.structures) == 1:
        return next(iter(document.structures.values()))
    raise DocumentError(
        f"Specify structure number {index + 1}; the document defines "
        f"{len(document.structures)}"
    )


def _violations(report: VerificationReport) -> List[str]:
    return [v.describe() for v in report.violations]


def _status(valid: bool) -> str:
    return "valid" if valid else "invalid"


# Factorizations


def _verify(document: InputDocument, flags: CommandFlags) -> CommandReport:
    if flags.name is not None:
        targets = [document.mf(flags.name)]
    else:
        targets = list(document.mfs.values())
    if not targets:
        raise DocumentError("The document defines no factorization")
    report = CommandReport()
    for m in targets:
        result = verify(m)
        report.add(
            CommandRecord(
                command="verify",
                name=m.name,
                valid=result.valid,
                violations=_violations(result) or None,
            ),
            f"{m.name}: {_status(result.valid)}",
            *(f"  {line}" for line in _violations(result)),
        )
    return report


def _constructed(
    command: str,
    result: MatrixFactorization,
    inputs: List[str],
    details: Optional[Dict[str, object]] = None,
    structures: Optional[List[BilinearStructure]] = None,
) -> CommandReport:
    checked = verify(result)
    text = emit_document(build_document([result], structures or []))
    report = CommandReport()
    report.add(
        CommandRecord(
            command=command,
            name=result.name,
            inputs=inputs,
            valid=checked.valid,
            violations=_violations(checked) or None,
            details=details,
            document=text,
        ),
        *text.rstrip("\n").split("\n"),
    )
    return report


def _shift(document: InputDocument, flags: CommandFlags) -> CommandReport:
    m = _mf(document, flags.name, "input")
    return _constructed("shift", shift(m), [m.name])


def _dual(document: InputDocument, flags: CommandFlags) -> CommandReport:
    m = _mf(document, flags.name, "input")
    result = dual(m)
    details: Dict[str, object] = {
        "equals_shifted_transpose": result == shift(transpose_dual(m)),
        "equals_transposed_shift": result == transpose_dual(shift(m)),
        "involutive": dual(result) == m,
    }
    return _constructed("dual", result, [m.name], details)


def _tensor(document: InputDocument, flags: CommandFlags) -> CommandReport:
    structures = []
    if flags.structures:
        first = _structure(document, flags, 0)
        second = _structure(document, flags, 1)
        left, right = first.host, second.host
        product = tensor_structure(first, second)
        structures.append(product)
    else:
        left = _mf(document, flags.source, "left")
        right = _mf(document, flags.target, "right")
    result = tensor(left, right)
    details: Dict[str, object] = {
        "potential": poly.format_polynomial(result.potential)
    }
    if structures:
        details["structure"] = structure_summary(structures[0])
    inputs = [left.name, right.name]
    report = _constructed("tensor", result, inputs, details, structures)
    if structures:
        record = report.records[0]
        record.kind, record.sign = structures[0].kind, structures[0].sign
    return report


def _direct_sum(document: InputDocument, flags: CommandFlags) -> CommandReport:
    left = _mf(document, flags.source, "left")
    right = _mf(document, flags.target, "right")
    return _constructed("direct-sum", direct_sum(left, right), [left.name, right.name])


# Structures


def _structure_verify(document: InputDocument, flags: CommandFlags) -> CommandReport:
    if flags.structures:
        targets = [document.structure(name) for name in flags.structures]
    else:
        targets = list(document.structures.values())
    if not targets:
        raise DocumentError("The document defines no structure")
    report = CommandReport()
    for b in targets:
        result = verify_structure(b)
        report.add(
            CommandRecord(
                command="structure-verify",
                name=b.name,
                inputs=[b.host.name],
                valid=result.valid,
                kind=b.kind,
                sign=b.sign,
                violations=_violations(result) or None,
            ),
            f"{b.name} on {b.host.name}: {_status(result.valid)}, {b.describe()}",
            *(f"  {line}" for line in _violations(result)),
        )
    return report


def _structure_search(document: InputDocument, flags: CommandFlags) -> CommandReport:
    m = _mf(document, flags.name, "host")
    kinds = [flags.kind] if flags.kind else list(KINDS)
    report = CommandReport()
    for kind in kinds:
        space = structure_search(m, kind, flags.structure_degree)
        signs = space.signs
        found = [structure_summary(b) for b in space.invertible()]
        report.add(
            CommandRecord(
                command="structure-search",
                name=m.name,
                kind=kind,
                sign=signs[0] if len(signs) == 1 else None,
                dims=[len(space.plus), len(space.minus)],
                details={
                    "dimension": space.dimension,
                    "max_degree": flags.structure_degree,
                    "signs": signs,
                    "invertible": found,
                },
            ),
            f"{m.name} {kind}: dim {space.dimension} "
            f"(eps=+1: {len(space.plus)}, eps=-1: {len(space.minus)})",
            *(f"  {line}" for line in found),
        )
    return report


def _commutation_check(document: InputDocument, flags: CommandFlags) -> CommandReport:
    source = _structure(document, flags, 0)
    target = (
        _structure(document, flags, 1) if len(flags.structures) > 1 else source
    )
    if flags.morphism is not None:
        morphisms = [document.morphism(flags.morphism)]
    else:
        rng = random.Random(flags.seed)
        morphisms = [
            random_morphism(source.host, target.host, odd, rng)
            for odd in (False, True)
            for _ in range(flags.samples)
        ]
    failures: List[str] = []
    held = {"even": 0, "odd": 0}
    for f in morphisms:
        result = check_commutation(f, source, target)
        if result.holds:
            held[result.parity] += 1
        else:
            failures += [v.describe() for v in result.violations]
    valid = not failures
    report = CommandReport()
    report.add(
        CommandRecord(
            command="commutation-check",
            name=source.name,
            inputs=[source.name, target.name],
            valid=valid,
            kind=source.kind,
            sign=source.commutation_sign,
            violations=failures or None,
            details={"checked": len(morphisms), "held": held},
        ),
        f"{source.name} -> {target.name}: commutation "
        f"{'holds' if valid else 'fails'} on {len(morphisms)} morphisms "
        f"(sign {source.commutation_sign:+d})",
        *(f"  {line}" for line in failures),
    )
    return report


# Ext


def _ext(document: InputDocument, flags: CommandFlags) -> CommandReport:
    source = _mf(document, flags.source or flags.name, "source")
    target = document.mf(flags.target) if flags.target else source
    result = ext(
        source,
        target,
        flags.max_degree,
        flags.window,
        flags.weights,
        flags.slack,
        budget=flags.budget,
    )
    report = CommandReport()
    report.add(
        CommandRecord(
            command="ext",
            inputs=[source.name, target.name],
            dims=list(result.dims),
            stabilized=result.stabilized,
            truncation_degree=result.truncation_degree,
            history=[list(h) for h in result.history],
        ),
        f"Ext^0({source.name}, {target.name}) = {result.dims[0]}",
        f"Ext^1({source.name}, {target.name}) = {result.dims[1]}",
        f"{'stabilized' if result.stabilized else 'NOT stabilized'} at degree "
        f"{result.truncation_degree}",
    )
    return report


def _ext_split(document: InputDocument, flags: CommandFlags) -> CommandReport:
    b = _structure(document, flags)
    m = document.mf(flags.name) if flags.name else b.host
    split = ext_adjoint_split(
        m,
        b,
        flags.max_degree,
        flags.window,
        flags.weights,
        flags.slack,
        flags.budget,
    )
    report = CommandReport()
    report.add(
        CommandRecord(
            command="ext-split",
            name=m.name,
            inputs=[m.name, b.name],
            dims=[split.ext0_plus, split.ext0_minus, split.ext1_plus, split.ext1_minus],
            stabilized=split.stabilized,
            kind=b.kind,
            sign=b.sign,
        ),
        f"Ext^0({m.name}) = {split.ext0_plus} (+) + {split.ext0_minus} (-)",
        f"Ext^1({m.name}) = {split.ext1_plus} (+) + {split.ext1_minus} (-)",
    )
    return report


# Knörrer periodicity and versal families


def _knorrer_report(
    command: str, output: KnorrerOutput, source: MatrixFactorization
) -> CommandReport:
    structures = [output.structure] if output.structure is not None else []
    details: Dict[str, object] = {
        "potential": poly.format_polynomial(output.result.potential),
        "new_variables": list(output.new_variables),
    }
    if output.provenance.normalization:
        details["normalization"] = list(output.provenance.normalization)
    report = _constructed(command, output.result, [source.name], details, structures)
    if output.structure is not None:
        record = report.records[0]
        record.kind, record.sign = output.structure.kind, output.structure.sign
    return report


def _optional_structure(
    document: InputDocument, flags: CommandFlags, m: MatrixFactorization
) -> Optional[BilinearStructure]:
    if not flags.structures:
        return None
    b = document.structure(flags.structures[0])
    if not (b.host == m):
        raise DocumentError(f"Structure {b.name} does not live on {m.name}")
    return b


def _knorrer(document: InputDocument, flags: CommandFlags) -> CommandReport:
    m = _mf(document, flags.name, "input")
    x, y = flags.new_vars or ["x", "y"]
    output = theta_with_structure(m, _optional_structure(document, flags, m), x, y)
    return _knorrer_report("knorrer", output, m)


def _knorrer_squared(document: InputDocument, flags: CommandFlags) -> CommandReport:
    m = _mf(document, flags.name, "input")
    x, y, u, v = flags.new_vars or ["x", "y", "u", "v"]
    output = theta_squared(m, _optional_structure(document, flags, m), (x, y, u, v))
    return _knorrer_report("knorrer-squared", output, m)


def _versal(document: InputDocument, flags: CommandFlags) -> CommandReport:
    family = build_versal_family(flags.rank, flags.mode, flags.budget)
    certificate = family.certificate
    members = [family.family]
    if family.eliminated is not None:
        members.append(family.eliminated)
    text = emit_document(build_document(members))
    failing = [
        f"{e.product} ({e.row}, {e.col}) reduces to {e.reduced}"
        for e in certificate.entries
        if e.reduced != "0"
    ]
    status = "holds" if certificate.holds else "fails"
    report = CommandReport()
    report.add(
        CommandRecord(
            command="versal",
            name=family.family.name,
            valid=certificate.holds,
            violations=failing or None,
            details={
                "rank": family.rank,
                "mode": family.mode,
                "base_variables": list(family.base_variables),
                "relations": certificate.relations,
                "tangent_dim": certificate.tangent_dim,
            },
            document=text,
        ),
        f"{family.family.name}: certificate {status}",
        f"relations: {', '.join(certificate.relations)}",
        f"base tangent dimension: {certificate.tangent_dim}",
        *text.rstrip("\n").split("\n"),
    )
    return report


# Deformations


def _deform(document: InputDocument, flags: CommandFlags) -> CommandReport:
    m = _mf(document, flags.name, "input")
    result = tangent_dims(
        m, flags.max_degree, flags.window, flags.weights, flags.slack, flags.budget
    )
    report = CommandReport()
    report.add(
        CommandRecord(
            command="deform",
            name=m.name,
            dims=[result.ext1_dim, result.ideal_dim, result.tangent_dim],
            stabilized=result.stabilized,
            truncation_degree=result.truncation_degree,
            details=result.model_dump(
                include={"obstruction_dim", "tjurina_dim", "ext0_dim"}
            ),
        ),
        f"{m.name}: tangent {result.tangent_dim} = Ext^1 {result.ext1_dim} "
        f"+ ideal {result.ideal_dim}",
        f"obstruction {result.obstruction_dim}, Tjurina number {result.tjurina_dim}",
    )
    return report


def _deform_structured(document: InputDocument, flags: CommandFlags) -> CommandReport:
    b = _structure(document, flags)
    m = document.mf(flags.name) if flags.name else b.host
    result = tangent_dims_structured(
        m, b, flags.max_degree, flags.window, flags.weights, flags.slack, flags.budget
    )
    structured = result.structured
    assert structured is not None
    report = CommandReport()
    report.add(
        CommandRecord(
            command="deform-structured",
            name=m.name,
            inputs=[m.name, b.name],
            dims=[
                structured.rigid_tangent_dim,
                result.ideal_dim,
                structured.tangent_dim,
            ],
            stabilized=result.stabilized,
            truncation_degree=result.truncation_degree,
            kind=b.kind,
            sign=b.sign,
            details={
                "obstruction_dim": structured.obstruction_dim,
                "split": structured.split.model_dump(),
            },
        ),
        f"{m.name} with {b.name}: tangent {structured.tangent_dim} = signed Ext^1 "
        f"{structured.rigid_tangent_dim} + ideal {result.ideal_dim}",
        f"obstruction {structured.obstruction_dim}",
    )
    return report


# Bundled examples


def bundled_examples() -> Dict[str, str]:
    """Map each bundled example name to its document text, sorted by name."""
    folder = resources.files("mfkit").joinpath("data")
    found = {
        entry.name[: -len(".mf")]: entry.read_text(encoding="utf-8")
        for entry in folder.iterdir()
        if entry.name.endswith(".mf")
    }
    return dict(sorted(found.items()))


def load_example(name: str) -> InputDocument:
    examples = bundled_examples()
    if name not in examples:
        raise DocumentError(
            f"Unknown example {name!r}; available: {', '.join(examples)}"
        )
    return parse(examples[name])


def _summary(text: str) -> str:
    first = text.split("\n", 1)[0]
    return first.lstrip("# ").strip() if first.startswith("#") else ""


def _examples(document: InputDocument, flags: CommandFlags) -> CommandReport:
    examples = bundled_examples()
    report = CommandReport()
    if flags.name is not None:
        parsed = load_example(flags.name)
        text = examples[flags.name]
        report.add(
            CommandRecord(
                command="examples",
                name=flags.name,
                inputs=list(parsed.mfs),
                document=text,
            ),
            *text.rstrip("\n").split("\n"),
        )
        return report
    for name, text in examples.items():
        report.add(
            CommandRecord(
                command="examples", name=name, details={"summary": _summary(text)}
            ),
            f"{name}: {_summary(text)}",
        )
    return report


COMMANDS: Dict[str, Handler] = {
    "verify": _verify,
    "shift": _shift,
    "dual": _dual,
    "tensor": _tensor,
    "direct-sum": _direct_sum,
    "structure-verify": _structure_verify,
    "structure-search": _structure_search,
    "commutation-check": _commutation_check,
    "ext": _ext,
    "ext-split": _ext_split,
    "knorrer": _knorrer,
    "knorrer-squared": _knorrer_squared,
    "versal": _versal,
    "deform": _deform,
    "deform-structured": _deform_structured,
    "examples": _examples,
}

# Commands that run without an input document
STANDALONE = ("versal", "examples")


def run(
    command: str,
    document: Optional[InputDocument] = None,
    flags: Optional[CommandFlags] = None,
) -> CommandReport:
    """Run one command on a parsed document.

    Args:
        command: One of the keys of ``COMMANDS``
        document: Parsed input; optional for ``versal`` and ``examples``
        flags: Command options; defaults come from the environment

    Returns:
        CommandReport: Records, text and exit code

    Raises:
        DocumentError: For unknown commands, missing documents or names
        MFKitError: For precondition failures of the underlying computation
    """
    if command not in COMMANDS:
        raise DocumentError(
            f"Unknown command {command!r}; expected one of {', '.join(COMMANDS)}"
        )
    if document is None:
        if command not in STANDALONE:
            raise DocumentError(f"Command {command!r} needs an input document")
        document = InputDocument()
    flags = flags or CommandFlags()
    logger.info(f"Running {command} with {flags.model_dump(exclude_defaults=True)}")
    return COMMANDS[command](document, flags)


def emit(report: CommandReport, fmt: str = "text") -> str:
    """Render a report as text lines or as one JSON object per record.

    Records keep the field order of :class:`CommandRecord` and omit unset
    fields, so identical runs give byte-identical output.
    """
    if fmt not in FORMATS:
        raise DocumentError(f"Unknown format {fmt!r}; expected one of {FORMATS}")
    if fmt == "records":
        lines = [record.model_dump_json(exclude_none=True) for record in report.records]
    else:
        lines = report.lines
    return "\n".join(lines) + "\n" if lines else ""
