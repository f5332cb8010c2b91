"""From relative-probability bounds to absolute posterior bounds.

Every quantity is a ratio of hypothesis masses to the total mass, so the
factored-independents multiplier cancels everywhere except in the evidence
probability.  Sums are evaluated in linear space after shifting by the upper
total, which keeps them in range no matter how large the logs are.

A disease marginal aggregates over the partition: settled hypotheses and
frontier nodes that include d contribute their full interval, nodes that
exclude d contribute nothing, and nodes where d is unspecified contribute
[0, node upper bound] to the d-present mass while their actual mass stays in
the total either way.  That last point matters: the d-present and d-absent
masses are bounded separately and recombined as
    lbp = LB(d) / (LB(d) + UB(not d)),   ubp = UB(d) / (UB(d) + LB(not d)),
which reduces to the direct substitution form when every node specifies d
and stays sound when some do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import NEG_INF
from .search import SearchConfig, SearchState, TraceRow


@dataclass(frozen=True)
class HypothesisReport:
    diseases: tuple[int, ...]
    log_r: float
    lbp: float
    ubp: float
    best: float


@dataclass(frozen=True)
class MarginalReport:
    disease: int
    name: str
    prior: float
    lbp: float
    ubp: float
    best: float
    factored: bool


@dataclass(frozen=True)
class InferenceResult:
    config: SearchConfig
    termination: str
    converged: bool
    ranked: tuple[HypothesisReport, ...]
    marginals: tuple[MarginalReport, ...]
    log_lbr: float
    log_ubr: float
    total_error: float
    log_pf_lower: float
    log_pf_upper: float
    factored: tuple[int, ...]
    log_factor_multiplier: float
    nodes_created: int
    expansions: int
    settled_count: int
    frontier_size: int
    children_gain_above_one: int
    degraded_absorption: bool
    trace: tuple[TraceRow, ...]
    wall_ms: float


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass
class _Aggregate:
    shift: float
    s_tot: float  # settled mass
    s_d: np.ndarray  # settled mass containing each disease
    flb_tot: float  # frontier lower contributions
    fub_tot: float
    flb_h: np.ndarray  # frontier contributions of nodes including d
    fub_h: np.ndarray
    flb_g: np.ndarray  # frontier contributions of nodes excluding d
    fub_g: np.ndarray
    e_tot: float  # examined mass (settled + frontier complete hypotheses)
    e_d: np.ndarray
    examined: list  # (mask, log_r)


def _aggregate(state: SearchState) -> _Aggregate:
    n = state.network.n_diseases
    shift = state.log_ubr
    s_d = np.zeros(n)
    e_d = np.zeros(n)
    flb_h = np.zeros(n)
    fub_h = np.zeros(n)
    flb_g = np.zeros(n)
    fub_g = np.zeros(n)
    s_tot = 0.0
    e_tot = 0.0
    flb_tot = 0.0
    fub_tot = 0.0
    examined: list = []

    for mask, log_r in state.settled.items():
        w = math.exp(log_r - shift)
        s_tot += w
        e_tot += w
        examined.append((mask, log_r))
        for d in _bits(mask):
            s_d[d] += w
            e_d[d] += w

    for node in state.frontier_nodes():
        wlb = math.exp(node.contrib_lb - shift) if node.contrib_lb != NEG_INF else 0.0
        wub = math.exp(node.contrib_ub - shift) if node.contrib_ub != NEG_INF else 0.0
        flb_tot += wlb
        fub_tot += wub
        for d in _bits(node.included):
            flb_h[d] += wlb
            fub_h[d] += wub
        for d in _bits(node.excluded):
            flb_g[d] += wlb
            fub_g[d] += wub
        if not node.self_settled:
            wr = math.exp(node.cache.log_r - shift)
            e_tot += wr
            examined.append((node.included, node.cache.log_r))
            for d in _bits(node.included):
                e_d[d] += wr

    return _Aggregate(
        shift=shift,
        s_tot=s_tot,
        s_d=s_d,
        flb_tot=flb_tot,
        fub_tot=fub_tot,
        flb_h=flb_h,
        fub_h=fub_h,
        flb_g=flb_g,
        fub_g=fub_g,
        e_tot=e_tot,
        e_d=e_d,
        examined=examined,
    )


def _hypothesis_interval(state: SearchState, log_r: float) -> tuple[float, float]:
    lbp = math.exp(log_r - state.log_ubr)
    ubp = math.exp(log_r - state.log_lbr) if state.log_lbr != NEG_INF else 1.0
    return min(lbp, 1.0), min(ubp, 1.0)


def hypothesis_posterior_bounds(state: SearchState, mask: int) -> tuple[float, float]:
    """Posterior bounds for an examined complete hypothesis: its exact R over
    the lower/upper totals (the queried mass appears at its exact value in
    both, so no substitution is needed)."""
    log_r = _examined_log_r(state, mask)
    return _hypothesis_interval(state, log_r)


def _examined_log_r(state: SearchState, mask: int) -> float:
    if mask in state.settled:
        return state.settled[mask]
    for node in state.frontier_nodes():
        if node.included == mask and not node.self_settled:
            return node.cache.log_r
    raise KeyError(f"hypothesis {mask:#x} was not examined")


def _marginal_from_aggregate(agg: _Aggregate, d: int) -> tuple[float, float]:
    ub_d = float(agg.s_d[d] + agg.fub_tot - agg.fub_g[d])
    lb_d = float(agg.s_d[d] + agg.flb_h[d])
    ub_nd = float(agg.s_tot - agg.s_d[d] + agg.fub_tot - agg.fub_h[d])
    lb_nd = float(agg.s_tot - agg.s_d[d] + agg.flb_g[d])
    lbp = lb_d / (lb_d + ub_nd) if lb_d > 0.0 else 0.0
    ubp = ub_d / (ub_d + lb_nd) if ub_d > 0.0 else 0.0
    return lbp, min(ubp, 1.0)


def disease_marginal_bounds(state: SearchState, d: int) -> tuple[float, float, float]:
    """(lbp, ubp, best) for one disease; factored diseases sit at their prior."""
    if d in state.factored.diseases:
        p = state.network.diseases[d].prior
        return (p, p, p)
    agg = _aggregate(state)
    lbp, ubp = _marginal_from_aggregate(agg, d)
    best = _clamp(float(agg.e_d[d]) / agg.e_tot if agg.e_tot > 0.0 else 0.0, lbp, ubp)
    return lbp, ubp, best


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def best_estimate(state: SearchState, *, hypothesis: int | None = None, disease: int | None = None) -> float:
    """Point estimate from examined hypotheses only: the share of examined
    mass consistent with the query, clamped into the certified interval."""
    if (hypothesis is None) == (disease is None):
        raise ValueError("pass exactly one of hypothesis= or disease=")
    agg = _aggregate(state)
    if hypothesis is not None:
        log_r = _examined_log_r(state, hypothesis)
        share = math.exp(log_r - agg.shift) / agg.e_tot
        lbp, ubp = _hypothesis_interval(state, log_r)
        return _clamp(share, lbp, ubp)
    if disease in state.factored.diseases:
        return state.network.diseases[disease].prior
    lbp, ubp = _marginal_from_aggregate(agg, disease)
    return _clamp(float(agg.e_d[disease]) / agg.e_tot, lbp, ubp)


def total_error(state: SearchState) -> float:
    return state.total_error()


def evidence_probability_bounds(state: SearchState) -> tuple[float, float]:
    """Log bounds on P(evidence): totals (with the factored multiplier) times
    P(evidence | all absent) * P(all absent) over the full disease set."""
    offset = state.factored.log_multiplier + state.absorbed.log_baseline + state.log_ph0_full
    return state.log_lbr + offset, state.log_ubr + offset


def assemble(state: SearchState) -> InferenceResult:
    agg = _aggregate(state)
    network = state.network

    entries = sorted(agg.examined, key=lambda t: (-t[1], t[0]))
    ranked = []
    for mask, log_r in entries[: state.config.top_n]:
        lbp, ubp = _hypothesis_interval(state, log_r)
        best = _clamp(math.exp(log_r - agg.shift) / agg.e_tot, lbp, ubp)
        ranked.append(
            HypothesisReport(
                diseases=tuple(_bits(mask)), log_r=log_r, lbp=lbp, ubp=ubp, best=best
            )
        )

    factored_set = set(state.factored.diseases)
    marginals = []
    for d in range(network.n_diseases):
        dis = network.diseases[d]
        if d in factored_set:
            marginals.append(
                MarginalReport(d, dis.name, dis.prior, dis.prior, dis.prior, dis.prior, True)
            )
            continue
        lbp, ubp = _marginal_from_aggregate(agg, d)
        best = _clamp(float(agg.e_d[d]) / agg.e_tot if agg.e_tot > 0.0 else 0.0, lbp, ubp)
        marginals.append(MarginalReport(d, dis.name, dis.prior, lbp, ubp, best, False))

    log_pf_lower, log_pf_upper = evidence_probability_bounds(state)
    termination = state.termination or "running"
    return InferenceResult(
        config=state.config,
        termination=termination,
        converged=termination in ("converged", "exhausted"),
        ranked=tuple(ranked),
        marginals=tuple(marginals),
        log_lbr=state.log_lbr,
        log_ubr=state.log_ubr,
        total_error=state.total_error(),
        log_pf_lower=log_pf_lower,
        log_pf_upper=log_pf_upper,
        factored=state.factored.diseases,
        log_factor_multiplier=state.factored.log_multiplier,
        nodes_created=state.nodes_created,
        expansions=state.expansions,
        settled_count=len(state.settled),
        frontier_size=state.frontier_size,
        children_gain_above_one=state.children_gain_above_one,
        degraded_absorption=not state.absorbed.absorbed,
        trace=tuple(state.trace),
        wall_ms=state.wall_ms(),
    )
