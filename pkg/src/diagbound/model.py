"""Network, evidence and hypothesis types, their invariants, and file formats.

A network is a bipartite model: independent binary diseases with prior
probabilities, and binary findings that are conditionally independent given
the diseases.  Each finding is either a leaky noisy-OR gate over its parent
diseases or (in tabular mode) an explicit conditional probability table.

Diseases and findings are identified by ordinal index; names are metadata
for file formats and reports.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Union

MODE_NOISY_OR = "noisy-or-leaky"
MODE_TABULAR = "tabular-nps"

MAX_TABULAR_PARENTS = 12


class ModelError(Exception):
    """Raised when a document cannot be interpreted as a network or case."""


@dataclass(frozen=True)
class Disease:
    name: str
    prior: float


@dataclass(frozen=True)
class NoisyOrFinding:
    """Leaky noisy-OR gate: P(present | s) = 1 - (1-leak) * prod_{d in s}(1-q_d)."""

    name: str
    leak: float
    links: tuple[tuple[int, float], ...]  # (disease index, strength q), sorted by index


@dataclass(frozen=True)
class TabularFinding:
    """Explicit CPT.  table[i] = P(present | assignment i), where bit b of i
    is 1 iff parents[b] is present (parents[0] = least-significant bit)."""

    name: str
    parents: tuple[int, ...]
    table: tuple[float, ...]


Finding = Union[NoisyOrFinding, TabularFinding]


@dataclass(frozen=True)
class Network:
    mode: str
    diseases: tuple[Disease, ...]
    findings: tuple[Finding, ...]

    @property
    def n_diseases(self) -> int:
        return len(self.diseases)

    @property
    def n_findings(self) -> int:
        return len(self.findings)

    def finding_parents(self, f: int) -> tuple[int, ...]:
        fd = self.findings[f]
        if isinstance(fd, NoisyOrFinding):
            return tuple(d for d, _ in fd.links)
        return fd.parents


@dataclass(frozen=True)
class Evidence:
    """Observed findings: `positive` present, `negative` absent, disjoint."""

    positive: frozenset[int]
    negative: frozenset[int]

    @property
    def observed(self) -> frozenset[int]:
        return self.positive | self.negative


@dataclass(frozen=True)
class CompleteHypothesis:
    """Assigns every disease: bits set in `present` are present, all others absent."""

    present: int
    width: int

    def diseases(self) -> tuple[int, ...]:
        return bits_of(self.present)


@dataclass(frozen=True)
class PartialHypothesis:
    """Diseases in `included` present, in `excluded` absent, the rest unspecified."""

    included: int
    excluded: int
    width: int

    def __post_init__(self) -> None:
        if self.included & self.excluded:
            raise ModelError("included and excluded sets overlap")


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def bits_of(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class ValidationIssue:
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.location}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(str(i) for i in self.issues)


class InvalidModelError(Exception):
    """A network or case failed validation; carries the full report."""

    def __init__(self, report: ValidationReport):
        super().__init__(str(report))
        self.report = report


def validate_network(network: Network) -> ValidationReport:
    """Check every structural and numeric invariant of a network.

    Returns a report listing each violated invariant with its location.
    """
    issues: list[ValidationIssue] = []
    n = network.n_diseases

    if network.mode not in (MODE_NOISY_OR, MODE_TABULAR):
        issues.append(ValidationIssue("network", f"unknown mode {network.mode!r}"))

    seen: dict[str, int] = {}
    for i, d in enumerate(network.diseases):
        loc = f"disease[{i}] {d.name!r}"
        if not (0.0 < d.prior < 1.0):
            issues.append(ValidationIssue(loc, f"prior not in open interval (0,1): {d.prior}"))
        if d.name in seen:
            issues.append(ValidationIssue(loc, f"duplicate disease name (also disease[{seen[d.name]}])"))
        seen[d.name] = i

    fseen: dict[str, int] = {}
    for j, f in enumerate(network.findings):
        loc = f"finding[{j}] {f.name!r}"
        if f.name in fseen:
            issues.append(ValidationIssue(loc, f"duplicate finding name (also finding[{fseen[f.name]}])"))
        fseen[f.name] = j
        if isinstance(f, NoisyOrFinding):
            if network.mode != MODE_NOISY_OR:
                issues.append(ValidationIssue(loc, "noisy-OR finding in tabular-mode network"))
            if not (0.0 <= f.leak < 1.0):
                issues.append(ValidationIssue(loc, f"leak not in [0,1): {f.leak}"))
            parents = [d for d, _ in f.links]
            if len(set(parents)) != len(parents):
                issues.append(ValidationIssue(loc, "duplicate parent disease reference"))
            for d, q in f.links:
                if not (0 <= d < n):
                    issues.append(ValidationIssue(loc, f"invalid disease index {d}"))
                if not (0.0 < q <= 1.0):
                    issues.append(ValidationIssue(loc, f"link strength not in (0,1]: {q}"))
        else:
            if network.mode != MODE_TABULAR:
                issues.append(ValidationIssue(loc, "tabular finding in noisy-OR-mode network"))
            k = len(f.parents)
            if k > MAX_TABULAR_PARENTS:
                issues.append(ValidationIssue(loc, f"{k} parents exceeds cap of {MAX_TABULAR_PARENTS}"))
            if len(set(f.parents)) != k:
                issues.append(ValidationIssue(loc, "duplicate parent disease reference"))
            for d in f.parents:
                if not (0 <= d < n):
                    issues.append(ValidationIssue(loc, f"invalid disease index {d}"))
            if k <= MAX_TABULAR_PARENTS and len(f.table) != 1 << k:
                issues.append(
                    ValidationIssue(loc, f"table length != 2^k (got {len(f.table)}, expected {1 << k})")
                )
            for idx, p in enumerate(f.table):
                if not (0.0 <= p <= 1.0):
                    issues.append(ValidationIssue(loc, f"table[{idx}] not in [0,1]: {p}"))

    return ValidationReport(tuple(issues))


def validate_case(network: Network, evidence: Evidence) -> ValidationReport:
    """Check evidence against a valid network.

    Positive and negative sets must be disjoint and in range, and the
    all-diseases-absent hypothesis must give the observed evidence nonzero
    probability (otherwise relative probabilities are undefined): a noisy-OR
    finding observed present needs leak > 0, and a tabular finding's
    all-parents-absent entry must not force the opposite of what was observed.
    """
    issues: list[ValidationIssue] = []
    nf = network.n_findings

    for f in sorted(evidence.positive | evidence.negative):
        if not (0 <= f < nf):
            issues.append(ValidationIssue(f"finding[{f}]", "invalid finding index"))
    for f in sorted(evidence.positive & evidence.negative):
        name = network.findings[f].name if 0 <= f < nf else "?"
        issues.append(ValidationIssue(f"finding[{f}] {name!r}", "overlapping evidence: observed both present and absent"))

    for f in sorted(evidence.positive):
        if not (0 <= f < nf):
            continue
        fd = network.findings[f]
        if isinstance(fd, NoisyOrFinding):
            if fd.leak <= 0.0:
                issues.append(ValidationIssue(f"finding[{f}] {fd.name!r}", "zero-leak positive finding"))
        elif fd.table and fd.table[0] <= 0.0:
            issues.append(ValidationIssue(f"finding[{f}] {fd.name!r}", "zero-baseline positive finding"))
    for f in sorted(evidence.negative):
        if not (0 <= f < nf):
            continue
        fd = network.findings[f]
        if isinstance(fd, TabularFinding) and fd.table and fd.table[0] >= 1.0:
            issues.append(ValidationIssue(f"finding[{f}] {fd.name!r}", "certain-baseline negative finding"))

    return ValidationReport(tuple(issues))


# ---------------------------------------------------------------------------
# File formats (JSON documents)
#
# Network: {"mode": ..., "diseases": [{"name", "prior"}...],
#           "findings": [{"name", "leak", "links": [{"disease", "q"}...]}
#                        | {"name", "parents": [...], "table": [...]}]}
# Case:    {"positive": [names...], "negative": [names...]}
#
# Disease references in "links"/"parents" are written as indices and accepted
# as either indices or names on input.  Case files use finding names.


def _resolve(ref, names: dict[str, int], count: int, what: str):
    if isinstance(ref, bool):
        raise ModelError(f"{what}: invalid reference {ref!r}")
    if isinstance(ref, int):
        return ref
    if isinstance(ref, str):
        if ref not in names:
            raise ModelError(f"{what}: unknown name {ref!r}")
        return names[ref]
    raise ModelError(f"{what}: reference must be an index or a name, got {type(ref).__name__}")


def network_from_doc(doc: dict) -> Network:
    if not isinstance(doc, dict):
        raise ModelError("network document must be an object")
    try:
        mode = doc["mode"]
        disease_docs = doc["diseases"]
        finding_docs = doc["findings"]
    except KeyError as e:
        raise ModelError(f"network document missing field {e.args[0]!r}") from None

    diseases = []
    for i, dd in enumerate(disease_docs):
        try:
            diseases.append(Disease(name=str(dd["name"]), prior=float(dd["prior"])))
        except (KeyError, TypeError, ValueError) as e:
            raise ModelError(f"disease[{i}]: {e}") from None
    dnames = {d.name: i for i, d in enumerate(diseases)}

    findings: list[Finding] = []
    for j, fd in enumerate(finding_docs):
        try:
            name = str(fd["name"])
            if "table" in fd or "parents" in fd:
                parents = tuple(
                    _resolve(p, dnames, len(diseases), f"finding[{j}] parent") for p in fd["parents"]
                )
                table = tuple(float(x) for x in fd["table"])
                findings.append(TabularFinding(name=name, parents=parents, table=table))
            else:
                links = tuple(
                    sorted(
                        (_resolve(l["disease"], dnames, len(diseases), f"finding[{j}] link"), float(l["q"]))
                        for l in fd.get("links", [])
                    )
                )
                findings.append(NoisyOrFinding(name=name, leak=float(fd["leak"]), links=links))
        except (KeyError, TypeError, ValueError) as e:
            raise ModelError(f"finding[{j}]: {e}") from None

    return Network(mode=str(mode), diseases=tuple(diseases), findings=tuple(findings))


def network_to_doc(network: Network) -> dict:
    findings = []
    for f in network.findings:
        if isinstance(f, NoisyOrFinding):
            findings.append(
                {
                    "name": f.name,
                    "leak": f.leak,
                    "links": [{"disease": d, "q": q} for d, q in f.links],
                }
            )
        else:
            findings.append({"name": f.name, "parents": list(f.parents), "table": list(f.table)})
    return {
        "mode": network.mode,
        "diseases": [{"name": d.name, "prior": d.prior} for d in network.diseases],
        "findings": findings,
    }


def case_from_doc(doc: dict, network: Network) -> Evidence:
    if not isinstance(doc, dict):
        raise ModelError("case document must be an object")
    fnames: dict[str, int] = {}
    for i, f in enumerate(network.findings):
        if f.name in fnames:
            fnames[f.name] = -1  # ambiguous
        else:
            fnames[f.name] = i

    def resolve_all(key: str) -> frozenset[int]:
        out = set()
        for ref in doc.get(key, []):
            idx = _resolve(ref, {k: v for k, v in fnames.items() if v >= 0}, network.n_findings, f"case {key}")
            out.add(idx)
        return frozenset(out)

    return Evidence(positive=resolve_all("positive"), negative=resolve_all("negative"))


def case_to_doc(evidence: Evidence, network: Network) -> dict:
    return {
        "positive": [network.findings[f].name for f in sorted(evidence.positive)],
        "negative": [network.findings[f].name for f in sorted(evidence.negative)],
    }


def parse_network(text: str) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelError(f"network file is not valid JSON: {e}") from None
    return network_from_doc(doc)


def serialize_network(network: Network) -> str:
    return json.dumps(network_to_doc(network), indent=2) + "\n"


def parse_case(text: str, network: Network) -> Evidence:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelError(f"case file is not valid JSON: {e}") from None
    return case_from_doc(doc, network)


def serialize_case(evidence: Evidence, network: Network) -> str:
    return json.dumps(case_to_doc(evidence, network), indent=2) + "\n"


def load_network(path) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_network(fh.read())


def save_network(network: Network, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_network(network))


def load_case(path, network: Network) -> Evidence:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_case(fh.read(), network)


def save_case(evidence: Evidence, network: Network, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_case(evidence, network))


def finding_present_probability(network: Network, f: int, present_mask: int) -> float:
    """P(finding f present | the complete hypothesis given by present_mask)."""
    fd = network.findings[f]
    if isinstance(fd, NoisyOrFinding):
        absent = 1.0 - fd.leak
        for d, q in fd.links:
            if present_mask >> d & 1:
                absent *= 1.0 - q
        return 1.0 - absent
    idx = 0
    for b, d in enumerate(fd.parents):
        if present_mask >> d & 1:
            idx |= 1 << b
    return fd.table[idx]
