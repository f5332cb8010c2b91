"""Certified bounds on the summed relative probability of a partial hypothesis.

For a node (h present, g absent, the rest unspecified), R(HG) is the sum of
R over all complete extensions.  Four bounds apply, all in log space:

  lb_complete   R of the node's own complete hypothesis (always valid)
  lb_odds       R * prod(1 + adjusted odds) over candidates; valid when the
                residual evidence is positive-only and influences are positive
  ub_gain       R * prod(1 + gain) over candidates; valid under declining gain
  ub_prior      R + (prior mass of proper extensions) / P(evidence, all absent);
                valid unconditionally because no extension's likelihood exceeds 1

The interval is [max of lower, min of upper]; its width (max_err) drives the
best-first search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import AbsorbedEvidence, NodeCache, log_gains_batch
from .model import Evidence, Network
from .numerics import NEG_INF, log1pexp, safe_exp


@dataclass(frozen=True)
class NodeBounds:
    log_lb: float
    log_ub: float
    log_r_complete: float
    log_lb_odds: float  # -inf when unavailable
    log_ub_gain: float  # +inf when unavailable
    log_ub_prior: float

    @property
    def log_max_err(self) -> float:
        if self.log_ub == NEG_INF:
            return NEG_INF
        if self.log_lb >= self.log_ub:
            return NEG_INF
        return self.log_ub + math.log1p(-math.exp(self.log_lb - self.log_ub))

    @property
    def max_err(self) -> float:
        return safe_exp(self.log_max_err) if self.log_max_err != NEG_INF else 0.0


class BoundOrderingError(AssertionError):
    """Lower bound exceeded upper bound; the bounds are theorems, so this
    signals an implementation bug rather than bad input."""


def log_ub_gain(log_r_complete: float, log_gains: np.ndarray) -> float:
    """Gain-product upper bound: log R + sum log(1 + gain) over candidates."""
    if len(log_gains) == 0:
        return log_r_complete
    return log_r_complete + float(np.logaddexp(0.0, np.asarray(log_gains, dtype=float)).sum())


def log_lb_odds(log_r_complete: float, log_adj_odds: np.ndarray) -> float:
    """Odds-product lower bound: log R + sum log(1 + adjusted odds)."""
    if len(log_adj_odds) == 0:
        return log_r_complete
    return log_r_complete + float(np.logaddexp(0.0, np.asarray(log_adj_odds, dtype=float)).sum())


def log_ub_prior(
    log_r_complete: float,
    log_prior_hg: float,
    sum_log1m_prior_cands: float,
    log_joint_baseline: float,
    n_candidates: int,
) -> float:
    """Prior-mass upper bound.

    The prior mass of the node's proper extensions is
    P(HG) * (1 - prod(1 - p_d)) over the candidates, and each extension's
    evidence likelihood is at most 1, so dividing by
    P(evidence | all absent) * P(all absent) bounds their summed R.
    """
    if n_candidates == 0:
        return log_r_complete
    # 1 - prod(1-p) == -expm1(sum log(1-p)), exact when candidates vanish
    log_ext_prior = log_prior_hg + math.log(-math.expm1(sum_log1m_prior_cands))
    return float(np.logaddexp(log_r_complete, log_ext_prior - log_joint_baseline))


def combine(
    log_r_complete: float,
    lb_odds: float,
    ub_gain: float,
    ub_prior: float,
) -> NodeBounds:
    """Least upper bound, greatest lower bound, sanity-checked ordering."""
    log_lb = max(log_r_complete, lb_odds)
    log_ub = min(ub_gain, ub_prior)
    if not (log_lb <= log_ub + 1e-9):
        raise BoundOrderingError(
            f"lower bound {log_lb} exceeds upper bound {log_ub} (lb_odds={lb_odds}, "
            f"ub_gain={ub_gain}, ub_prior={ub_prior}, r={log_r_complete})"
        )
    log_ub = max(log_ub, log_lb)
    return NodeBounds(
        log_lb=log_lb,
        log_ub=log_ub,
        log_r_complete=log_r_complete,
        log_lb_odds=lb_odds,
        log_ub_gain=ub_gain,
        log_ub_prior=ub_prior,
    )


def node_bounds(
    absorbed: AbsorbedEvidence,
    cache: NodeCache,
    candidates: np.ndarray,
    log_prior_hg: float,
    log_joint_baseline: float,
    lb_odds_ok: bool = True,
    ub_gain_ok: bool = True,
) -> NodeBounds:
    """Canonical per-node bound computation.

    `candidates` are the unassigned diseases; `log_prior_hg` is the log prior
    mass of the node's extension set over the searched diseases.  The two
    validity flags come from case-level certification (see `search`).
    """
    cands = np.asarray(candidates, dtype=np.intp)
    log_r = cache.log_r
    priors = np.array([absorbed.network.diseases[int(d)].prior for d in cands])

    lb2 = NEG_INF
    if lb_odds_ok:
        lb2 = log_lb_odds(log_r, absorbed.log_adj_odds[cands])
    ub1 = math.inf
    if ub_gain_ok and log_r != NEG_INF:  # gains from a zero-mass hypothesis are undefined
        ub1 = log_ub_gain(log_r, log_gains_batch(absorbed, cache, cands))
    ub2 = log_ub_prior(
        log_r,
        log_prior_hg,
        float(np.log1p(-priors).sum()),
        log_joint_baseline,
        len(cands),
    )
    return combine(log_r, lb2, ub1, ub2)


@dataclass(frozen=True)
class FactoredSet:
    """Diseases with no link to any observed finding.

    Their extensions multiply out analytically: each contributes a factor
    (1 + O(d)) = 1/(1 - p_d) to every partial-hypothesis mass, so they are
    removed from all candidate sets and reported at their priors.
    """

    diseases: tuple[int, ...]
    log_multiplier: float


def factor_independents(network: Network, evidence: Evidence) -> FactoredSet:
    observed = evidence.positive | evidence.negative
    linked: set[int] = set()
    for f in observed:
        linked.update(network.finding_parents(f))
    w = tuple(d for d in range(network.n_diseases) if d not in linked)
    log_mult = 0.0
    for d in w:
        log_mult += -math.log1p(-network.diseases[d].prior)
    return FactoredSet(diseases=w, log_multiplier=log_mult)
