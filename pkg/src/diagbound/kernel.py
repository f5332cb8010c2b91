"""Evidence likelihoods, log relative probabilities, and explanatory gains.

The relative probability R of a complete hypothesis is the ratio of its
posterior to the posterior of the all-diseases-absent hypothesis.  It factors
into a product of per-disease odds and per-finding likelihood ratios, so it
is cheap to compute and cheap to update when one disease is added.

Negative findings are absorbed up front: in noisy-OR mode the absent-finding
likelihood factors exactly into one (1-q) term per present parent, so folding
those terms into per-disease adjusted odds leaves a residual problem whose
evidence is positive-only.  The bound theorems in `bounds` rely on that
positive-only residual; tabular networks with negative observations cannot be
absorbed and are flagged so the bound calculus degrades gracefully.

Everything here is log-space and pure; caches are value-like snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    MODE_NOISY_OR,
    Evidence,
    Network,
    NoisyOrFinding,
    TabularFinding,
    bits_of,
    finding_present_probability,
)
from .numerics import NEG_INF


def _log(x: float) -> float:
    return math.log(x) if x > 0.0 else NEG_INF


def _log1m(x: float) -> float:
    """log(1-x) for x in [0,1]."""
    return math.log1p(-x) if x < 1.0 else NEG_INF


@dataclass(frozen=True)
class _NoisyStructs:
    leak_comp: np.ndarray  # (P,) 1-leak per positive finding
    base_logp: np.ndarray  # (P,) log P(f present | all absent) = log leak
    w: np.ndarray  # (P, n) dense 1-q, 1.0 where unlinked
    links_by_disease: tuple  # d -> (rows ndarray, one_minus_q ndarray)


@dataclass(frozen=True)
class _TabularStructs:
    rows: tuple  # per observed finding: (log_state_table ndarray, bitinc ndarray (n,))
    base_logp: np.ndarray  # (n_obs,) log P(observed state | all absent)


@dataclass(frozen=True)
class AbsorbedEvidence:
    """A case with negative findings folded into per-disease adjusted odds.

    `log_adj_odds[d]` is log O(d) plus, when `absorbed`, one log(1-q) term per
    negative finding linked to d.  `log_baseline` is log P(F | all absent) for
    the full evidence.  When absorption is unavailable (tabular networks with
    negative observations) `absorbed` is False, the odds are raw, and the
    negatives stay in `residual_negative`.
    """

    network: Network
    positive: tuple[int, ...]
    residual_negative: tuple[int, ...]
    absorbed: bool
    log_adj_odds: np.ndarray
    log_raw_odds: np.ndarray
    log_baseline: float
    _noisy: _NoisyStructs | None
    _tabular: _TabularStructs | None

    @property
    def n(self) -> int:
        return self.network.n_diseases


@dataclass
class NodeCache:
    """Incremental per-hypothesis state.

    For noisy-OR, `absence[p]` is (1-leak) * prod_{d present}(1-q) for positive
    finding p, so adding a disease costs one multiplication per linked finding.
    For tabular networks, `tab_idx[r]` is the table row index accumulated so far
    for observed finding r.
    """

    mask: int
    log_r: float
    absence: np.ndarray | None = None
    tab_idx: np.ndarray | None = None

    def copy(self) -> "NodeCache":
        return NodeCache(
            mask=self.mask,
            log_r=self.log_r,
            absence=None if self.absence is None else self.absence.copy(),
            tab_idx=None if self.tab_idx is None else self.tab_idx.copy(),
        )


def finding_likelihood(network: Network, f: int, present: bool, hypothesis_mask: int) -> float:
    """Probability of finding f being in the given state under a complete hypothesis."""
    p = finding_present_probability(network, f, hypothesis_mask)
    return p if present else 1.0 - p


def absorb(network: Network, evidence: Evidence) -> AbsorbedEvidence:
    """Fold negative findings into adjusted odds and precompute fast-path tables.

    Exact for noisy-OR networks: for every complete hypothesis, the relative
    probability computed from adjusted odds plus positive findings equals the
    one computed from raw odds plus full evidence.
    """
    n = network.n_diseases
    pos = tuple(sorted(evidence.positive))
    neg = tuple(sorted(evidence.negative))

    priors = np.array([d.prior for d in network.diseases], dtype=float)
    log_raw = np.log(priors) - np.log1p(-priors)

    if network.mode == MODE_NOISY_OR:
        log_adj = log_raw.copy()
        baseline = 0.0
        for f in neg:
            fd = network.findings[f]
            assert isinstance(fd, NoisyOrFinding)
            baseline += _log1m(fd.leak)
            for d, q in fd.links:
                log_adj[d] += _log1m(q)

        P = len(pos)
        leak_comp = np.empty(P)
        base_logp = np.empty(P)
        w = np.ones((P, n))
        per_disease: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for row, f in enumerate(pos):
            fd = network.findings[f]
            assert isinstance(fd, NoisyOrFinding)
            leak_comp[row] = 1.0 - fd.leak
            base_logp[row] = _log(fd.leak)
            baseline += _log(fd.leak)
            for d, q in fd.links:
                w[row, d] = 1.0 - q
                per_disease[d].append((row, 1.0 - q))
        links_by_disease = tuple(
            (np.array([r for r, _ in lst], dtype=np.intp), np.array([v for _, v in lst]))
            for lst in per_disease
        )
        noisy = _NoisyStructs(leak_comp, base_logp, w, links_by_disease)
        return AbsorbedEvidence(
            network=network,
            positive=pos,
            residual_negative=(),
            absorbed=True,
            log_adj_odds=log_adj,
            log_raw_odds=log_raw,
            log_baseline=baseline,
            _noisy=noisy,
            _tabular=None,
        )

    # Tabular mode: positives first, any negatives stay residual.
    observed = [(f, True) for f in pos] + [(f, False) for f in neg]
    rows = []
    base = np.empty(len(observed))
    baseline = 0.0
    for r, (f, state) in enumerate(observed):
        fd = network.findings[f]
        assert isinstance(fd, TabularFinding)
        table = np.asarray(fd.table, dtype=float)
        with np.errstate(divide="ignore"):
            log_state = np.log(table) if state else np.log1p(-table)
        bitinc = np.zeros(n, dtype=np.int64)
        for b, d in enumerate(fd.parents):
            bitinc[d] = 1 << b
        rows.append((log_state, bitinc))
        base[r] = log_state[0]
        baseline += log_state[0]
    tab = _TabularStructs(rows=tuple(rows), base_logp=base)
    return AbsorbedEvidence(
        network=network,
        positive=pos,
        residual_negative=neg,
        absorbed=not neg,
        log_adj_odds=log_raw.copy(),
        log_raw_odds=log_raw,
        log_baseline=baseline,
        _noisy=None,
        _tabular=tab,
    )


def new_cache(absorbed: AbsorbedEvidence) -> NodeCache:
    """Cache for the empty hypothesis (log R = 0 by definition)."""
    if absorbed._noisy is not None:
        return NodeCache(mask=0, log_r=0.0, absence=absorbed._noisy.leak_comp.copy())
    n_obs = len(absorbed._tabular.rows)
    return NodeCache(mask=0, log_r=0.0, tab_idx=np.zeros(n_obs, dtype=np.int64))


def log_gain(absorbed: AbsorbedEvidence, cache: NodeCache, d: int) -> float:
    """log of the multiplicative change in R from adding disease d to the
    cached hypothesis: log R(H+d) - log R(H).  Cost is proportional to d's
    observed-finding degree."""
    if cache.mask >> d & 1:
        raise ValueError(f"disease {d} already included")
    if absorbed._noisy is not None:
        rows, omq = absorbed._noisy.links_by_disease[d]
        total = float(absorbed.log_adj_odds[d])
        if rows.size:
            a = cache.absence[rows]
            total += float(np.sum(np.log1p(-a * omq) - np.log1p(-a)))
        return total
    total = float(absorbed.log_adj_odds[d])
    for r, (log_state, bitinc) in enumerate(absorbed._tabular.rows):
        inc = int(bitinc[d])
        if not inc:
            continue
        idx = int(cache.tab_idx[r])
        lo, hi = float(log_state[idx]), float(log_state[idx + inc])
        if lo == NEG_INF and hi == NEG_INF:
            continue
        if lo == NEG_INF:
            return math.inf  # gain from a zero-probability hypothesis is unbounded
        total += hi - lo
    return total


def gain(absorbed: AbsorbedEvidence, cache: NodeCache, d: int) -> float:
    """Linear-space explanatory gain; may overflow to inf for extreme cases."""
    g = log_gain(absorbed, cache, d)
    try:
        return math.exp(g)
    except OverflowError:
        return math.inf


def log_gains_batch(absorbed: AbsorbedEvidence, cache: NodeCache, candidates: np.ndarray) -> np.ndarray:
    """log_gain for many candidates at once (same arithmetic as log_gain)."""
    cands = np.asarray(candidates, dtype=np.intp)
    if cands.size == 0:
        return np.empty(0)
    if absorbed._noisy is not None:
        out = absorbed.log_adj_odds[cands].copy()
        a = cache.absence
        if a.size:
            m = np.log1p(-a[:, None] * absorbed._noisy.w[:, cands])
            out += m.sum(axis=0) - np.sum(np.log1p(-a))
        return out
    return np.array([log_gain(absorbed, cache, int(d)) for d in cands])


def extend_cache(absorbed: AbsorbedEvidence, cache: NodeCache, d: int) -> NodeCache:
    """Cache for the hypothesis extended by disease d."""
    g = log_gain(absorbed, cache, d)
    out = cache.copy()
    out.mask |= 1 << d
    out.log_r = cache.log_r + g if g != math.inf else _scratch_log_r(absorbed, out.mask)
    if absorbed._noisy is not None:
        rows, omq = absorbed._noisy.links_by_disease[d]
        if rows.size:
            out.absence[rows] = out.absence[rows] * omq
    else:
        for r, (_, bitinc) in enumerate(absorbed._tabular.rows):
            out.tab_idx[r] += int(bitinc[d])
    return out


def _scratch_log_r(absorbed: AbsorbedEvidence, mask: int) -> float:
    total = 0.0
    for d in bits_of(mask):
        total += float(absorbed.log_adj_odds[d])
    if absorbed._noisy is not None:
        s = absorbed._noisy
        for row, f in enumerate(absorbed.positive):
            fd = absorbed.network.findings[f]
            absent = 1.0 - fd.leak
            for d, q in fd.links:
                if mask >> d & 1:
                    absent *= 1.0 - q
            total += _log1m(absent) - float(s.base_logp[row])
        return total
    for r, (log_state, bitinc) in enumerate(absorbed._tabular.rows):
        idx = 0
        for d in bits_of(mask):
            idx += int(bitinc[d])
        total += float(log_state[idx]) - float(absorbed._tabular.base_logp[r])
    return total


def log_relative_probability(absorbed: AbsorbedEvidence, hypothesis_mask: int) -> float:
    """log R of a complete hypothesis, from scratch.

    R is 1 exactly for the empty hypothesis.  Matches the incremental cache
    route up to floating round-off.
    """
    if hypothesis_mask == 0:
        return 0.0
    return _scratch_log_r(absorbed, hypothesis_mask)


def log_relative_probability_raw(network: Network, evidence: Evidence, hypothesis_mask: int) -> float:
    """Reference route: raw odds and the full evidence, no absorption.

    Kept deliberately independent of the absorbed fast path so the two can be
    checked against each other.
    """
    total = 0.0
    for d in bits_of(hypothesis_mask):
        p = network.diseases[d].prior
        total += math.log(p) - math.log1p(-p)
    for f in sorted(evidence.positive):
        num = finding_likelihood(network, f, True, hypothesis_mask)
        den = finding_likelihood(network, f, True, 0)
        total += _log(num) - _log(den)
    for f in sorted(evidence.negative):
        num = finding_likelihood(network, f, False, hypothesis_mask)
        den = finding_likelihood(network, f, False, 0)
        total += _log(num) - _log(den)
    return total
