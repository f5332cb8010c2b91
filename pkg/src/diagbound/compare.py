"""Bounded search versus exact enumeration on one case.

The headline correctness gate: every examined hypothesis's exact posterior
and every disease's exact marginal must lie inside the certified interval.
Factored diseases are part of the comparison too; hypothesis queries leave
them unspecified, so their exact values come from partial-mass sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import oracle, posteriors, search
from .model import Evidence, Network
from .posteriors import InferenceResult

CONTAINMENT_ATOL = 1e-9


@dataclass(frozen=True)
class CompareRow:
    query: str
    kind: str  # "hypothesis" | "marginal"
    exact: float
    lbp: float
    ubp: float
    best: float
    abs_best_err: float
    contained: bool


@dataclass(frozen=True)
class CompareReport:
    rows: tuple[CompareRow, ...]
    violations: int
    max_abs_best_err: float
    mean_abs_best_err: float
    termination: str
    total_error: float
    containment_tolerance: float
    result: InferenceResult


def compare_case(
    network: Network,
    evidence: Evidence,
    config: search.SearchConfig | None = None,
    atol: float = CONTAINMENT_ATOL,
) -> CompareReport:
    state = search.init(network, evidence, config)
    result = state.run()
    exact = oracle.enumerate_exact(network, evidence)

    searched_mask = 0
    factored_set = set(state.factored.diseases)
    for d in range(network.n_diseases):
        if d not in factored_set:
            searched_mask |= 1 << d

    agg = posteriors._aggregate(state)
    names = [d.name for d in network.diseases]
    rows: list[CompareRow] = []

    for mask, log_r in sorted(agg.examined, key=lambda t: (-t[1], t[0])):
        lbp, ubp = posteriors._hypothesis_interval(state, log_r)
        best = posteriors._clamp(math.exp(log_r - agg.shift) / agg.e_tot, lbp, ubp)
        # exact posterior of "mask present, other searched diseases absent,
        # factored diseases unspecified"
        log_part = exact.log_partial_mass(mask, searched_mask & ~mask)
        px = math.exp(log_part + exact.log_joint[0] - exact.log_pf)
        label = "+".join(names[d] for d in posteriors._bits(mask)) or "(none)"
        rows.append(
            CompareRow(
                query=label,
                kind="hypothesis",
                exact=px,
                lbp=lbp,
                ubp=ubp,
                best=best,
                abs_best_err=abs(best - px),
                contained=(lbp - atol <= px <= ubp + atol),
            )
        )

    for m in result.marginals:
        px = float(exact.marginals[m.disease])
        rows.append(
            CompareRow(
                query=names[m.disease],
                kind="marginal",
                exact=px,
                lbp=m.lbp,
                ubp=m.ubp,
                best=m.best,
                abs_best_err=abs(m.best - px),
                contained=(m.lbp - atol <= px <= m.ubp + atol),
            )
        )

    violations = sum(1 for r in rows if not r.contained)
    errs = [r.abs_best_err for r in rows]
    return CompareReport(
        rows=tuple(rows),
        violations=violations,
        max_abs_best_err=max(errs) if errs else 0.0,
        mean_abs_best_err=sum(errs) / len(errs) if errs else 0.0,
        termination=result.termination,
        total_error=result.total_error,
        containment_tolerance=atol,
        result=result,
    )
