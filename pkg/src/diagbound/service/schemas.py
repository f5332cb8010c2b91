"""Request and response models for the inference service.

The network and case payloads use exactly the same shape as the on-disk
JSON files, so the CLI can pass file contents straight through.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field


class LinkModel(BaseModel):
    disease: Union[int, str]
    q: float


class NoisyFindingModel(BaseModel):
    name: str
    leak: float
    links: list[LinkModel] = Field(default_factory=list)


class TabularFindingModel(BaseModel):
    name: str
    parents: list[Union[int, str]]
    table: list[float]


class DiseaseModel(BaseModel):
    name: str
    prior: float


class NetworkModel(BaseModel):
    mode: Literal["noisy-or-leaky", "tabular-nps"]
    diseases: list[DiseaseModel]
    findings: list[Union[TabularFindingModel, NoisyFindingModel]]


class CaseModel(BaseModel):
    positive: list[Union[str, int]] = Field(default_factory=list)
    negative: list[Union[str, int]] = Field(default_factory=list)


class SolveOptions(BaseModel):
    p_min: float = 1e-5
    max_hypotheses: int = 30000
    top_n: int = 10
    trace_every: int = 30


class SolveRequest(BaseModel):
    network: NetworkModel
    case: CaseModel
    options: SolveOptions = Field(default_factory=SolveOptions)


class ExactRequest(BaseModel):
    network: NetworkModel
    case: CaseModel
    top_n: int = 10


class CompareRequest(BaseModel):
    network: NetworkModel
    case: CaseModel
    options: SolveOptions = Field(default_factory=SolveOptions)


class ValidateRequest(BaseModel):
    network: NetworkModel
    case: Optional[CaseModel] = None


class CheckRequest(BaseModel):
    network: NetworkModel
    case: Optional[CaseModel] = None  # required for the declining-gain check
    checks: list[Literal["pos", "nps2", "npsn", "mep"]] = Field(
        default_factory=lambda: ["pos", "nps2", "npsn"]
    )


class GenerateRequest(BaseModel):
    seed: int = 0
    n_diseases: int = 50
    n_findings: int = 100
    mean_links: float = 4.0
    prior_range: tuple[float, float] = (0.001, 0.1)
    strength_range: tuple[float, float] = (0.2, 0.95)
    leak_range: tuple[float, float] = (0.005, 0.05)
    mode: Literal["noisy-or-leaky", "tabular-nps"] = "noisy-or-leaky"
    sample_case: bool = False
    case_seed: int = 0
    n_negative: int = 0


class ValidationIssueModel(BaseModel):
    location: str
    message: str


class ValidationResponse(BaseModel):
    valid: bool
    issues: list[ValidationIssueModel] = Field(default_factory=list)


class HypothesisRowModel(BaseModel):
    diseases: list[str]
    log_r: float
    lbp: float
    ubp: float
    best: float


class MarginalRowModel(BaseModel):
    disease: str
    prior: float
    lbp: float
    ubp: float
    best: float
    factored: bool


class TraceRowModel(BaseModel):
    expansions: int
    nodes: int
    settled: int
    log_lbr_total: float
    log_ubr_total: float
    total_error: float
    wall_ms: float


class ResultDocument(BaseModel):
    """Mirror of an inference result plus the configuration that produced it."""

    options: SolveOptions
    termination: str
    converged: bool
    total_error: float
    log_lbr_total: float
    log_ubr_total: float
    log_pf_lower: float
    log_pf_upper: float
    ranked: list[HypothesisRowModel]
    marginals: list[MarginalRowModel]
    factored: list[str]
    log_factor_multiplier: float
    counters: dict[str, int]
    degraded_absorption: bool
    trace: list[TraceRowModel]
    wall_ms: float


class ExactMarginalRowModel(BaseModel):
    disease: str
    prior: float
    posterior: float


class ExactDocument(BaseModel):
    log_pf: float
    n_hypotheses: int
    ranked: list[HypothesisRowModel]
    marginals: list[ExactMarginalRowModel]
    wall_ms: float


class CompareRowModel(BaseModel):
    query: str
    kind: Literal["hypothesis", "marginal"]
    exact: float
    lbp: float
    ubp: float
    best: float
    abs_best_err: float
    contained: bool


class CompareDocument(BaseModel):
    rows: list[CompareRowModel]
    violations: int
    max_abs_best_err: float
    mean_abs_best_err: float
    termination: str
    total_error: float
    containment_tolerance: float
    wall_ms: float


class CheckRowModel(BaseModel):
    check: str
    finding: Optional[str] = None
    passed: bool
    witness: Optional[str] = None
    detail: str = ""


class CheckDocument(BaseModel):
    results: list[CheckRowModel]
    all_passed: bool
    wall_ms: float


class GenerateDocument(BaseModel):
    network: dict
    case: Optional[dict] = None
    true_diseases: Optional[list[str]] = None
