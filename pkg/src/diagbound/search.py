"""Anytime best-first search over the hypothesis tree.

The tree enumerates disease subsets without overlap: expanding a node
(h, g) orders its unassigned candidates d1..dk by descending explanatory
gain and creates children (h+di, g+{d1..d(i-1)}), so every complete
hypothesis lies in exactly one frontier node's extension set or is settled.
The frontier is a max-priority queue on interval width (max_err); running
totals LBR/UBR on the whole hypothesis space tighten monotonically and are
valid whenever the search is stopped.

Diseases with no link to any observed finding are factored out analytically
before the search and never enter the tree.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from heapq import heappop, heappush

import numpy as np

from . import kernel, oracle
from .bounds import FactoredSet, NodeBounds, factor_independents, node_bounds
from .model import (
    MODE_NOISY_OR,
    Evidence,
    InvalidModelError,
    Network,
    validate_case,
    validate_network,
)
from .numerics import NEG_INF, logaddexp, logdiffexp, logsumexp

TERMINATED_CONVERGED = "converged"
TERMINATED_EXHAUSTED = "exhausted"
TERMINATED_NODE_CAP = "node_cap"


@dataclass(frozen=True)
class SearchConfig:
    p_min: float = 1e-5  # stop when (UBR-LBR)/UBR falls below this fraction
    max_hypotheses: int = 30000  # tree-node cap; expansion stops, bounds stay valid
    top_n: int = 10
    trace_every: int = 30  # expansions between trace rows
    debug_nodes: bool = False  # keep a log of every node created (tests)

    def validated(self) -> "SearchConfig":
        if not (0.0 < self.p_min <= 1.0):
            raise ValueError(f"p_min must be in (0, 1], got {self.p_min}")
        if self.max_hypotheses < 1:
            raise ValueError("max_hypotheses must be positive")
        if self.top_n < 0:
            raise ValueError("top_n must be non-negative")
        if self.trace_every < 1:
            raise ValueError("trace_every must be positive")
        return self


@dataclass(frozen=True)
class TraceRow:
    expansions: int
    nodes: int
    settled: int
    log_lbr: float
    log_ubr: float
    total_error: float
    wall_ms: float


@dataclass
class _Node:
    included: int
    excluded: int
    cand_order: np.ndarray  # shared among siblings; this node's candidates follow cand_offset
    cand_offset: int
    cache: kernel.NodeCache
    bounds: NodeBounds
    log_prior_hg: float
    contrib_lb: float  # current contribution to the running totals
    contrib_ub: float
    self_settled: bool
    rev_h: int
    rev_g: int
    slot: int = -1

    @property
    def n_candidates(self) -> int:
        return len(self.cand_order) - self.cand_offset

    def candidates(self) -> np.ndarray:
        return self.cand_order[self.cand_offset :]


@dataclass(frozen=True)
class NodeRecord:
    """Debug log entry for one created node."""

    included: int
    excluded: int
    n_candidates: int
    bounds: NodeBounds


@dataclass(frozen=True)
class ExpansionRecord:
    included: int
    excluded: int
    newly_settled: bool
    children: tuple[tuple[int, int], ...]  # (included, excluded) per child


class SearchState:
    """Single-writer search state; snapshots and assembly are read-only."""

    def __init__(self, network: Network, evidence: Evidence, config: SearchConfig):
        config = config.validated()
        report = validate_network(network)
        if not report.ok:
            raise InvalidModelError(report)
        report = validate_case(network, evidence)
        if not report.ok:
            raise InvalidModelError(report)

        self.network = network
        self.evidence = evidence
        self.config = config
        self._t0 = time.perf_counter()

        self.factored: FactoredSet = factor_independents(network, evidence)
        self.absorbed = kernel.absorb(network, evidence)
        self.lb_odds_ok, self.ub_gain_ok = self._certify()

        n = network.n_diseases
        w = set(self.factored.diseases)
        self._searched = np.array([d for d in range(n) if d not in w], dtype=np.intp)
        priors = np.array([d.prior for d in network.diseases])
        self._logp = np.log(priors)
        self._log1mp = np.log1p(-priors)
        self._revbit = [1 << (n - 1 - d) for d in range(n)]
        self.log_ph0_full = float(self._log1mp.sum())
        # baseline P(evidence, all absent) over the searched diseases only
        self.log_joint_baseline = self.absorbed.log_baseline + float(
            self._log1mp[self._searched].sum()
        )

        self._heap: list = []
        self._live: dict[int, _Node] = {}
        self._next_slot = 0
        self._seq = 0
        self.settled: dict[int, float] = {0: 0.0}
        self._settled_logsum = 0.0
        self.nodes_created = 0
        self.expansions = 0
        self.children_gain_above_one = 0
        self.termination: str | None = None
        self.trace: list[TraceRow] = []
        self.node_log: list[NodeRecord] | None = [] if config.debug_nodes else None

        self.log_lbr = NEG_INF
        self.log_ubr = math.inf

        if len(self._searched):
            root_cache = kernel.new_cache(self.absorbed)
            root_bounds = node_bounds(
                self.absorbed,
                root_cache,
                self._searched,
                0.0,
                self.log_joint_baseline,
                self.lb_odds_ok,
                self.ub_gain_ok,
            )
            root = _Node(
                included=0,
                excluded=0,
                cand_order=self._searched,
                cand_offset=0,
                cache=root_cache,
                bounds=root_bounds,
                log_prior_hg=0.0,
                # the empty hypothesis is settled at init, so the root stands
                # for its proper extensions only
                contrib_lb=logdiffexp(root_bounds.log_lb, 0.0),
                contrib_ub=logdiffexp(root_bounds.log_ub, 0.0),
                self_settled=True,
                rev_h=0,
                rev_g=0,
            )
            self._push(root)
            self.nodes_created = 1
            if self.node_log is not None:
                self.node_log.append(NodeRecord(0, 0, root.n_candidates, root_bounds))

        self._recompute_totals()
        self._trace_row()

    # -- setup helpers ------------------------------------------------------

    def _certify(self) -> tuple[bool, bool]:
        """Decide which bound forms apply to this case.

        Noisy-OR networks qualify unconditionally: absorption leaves a
        positive-only residual for which positive influence and declining
        gain both hold.  Tabular networks must be certified by the checkers;
        with residual negative findings only the whole-case declining-gain
        check can license the gain-product bound.
        """
        if self.network.mode == MODE_NOISY_OR:
            return True, True
        observed = sorted(self.evidence.positive | self.evidence.negative)
        try:
            pos_ok = all(
                oracle.check_positive_influence(self.network, f).passed for f in observed
            )
        except oracle.OracleSizeError:
            pos_ok = False
        if self.absorbed.residual_negative:
            try:
                gain_ok = oracle.check_declining_gain(self.network, self.evidence).passed
            except oracle.OracleSizeError:
                gain_ok = False
            return False, gain_ok
        try:
            nps_ok = all(
                oracle.check_nps_general(self.network, f).passed for f in sorted(self.evidence.positive)
            )
        except oracle.OracleSizeError:
            nps_ok = False
        return pos_ok, pos_ok and nps_ok

    # -- frontier plumbing --------------------------------------------------

    def _push(self, node: _Node) -> None:
        node.slot = self._next_slot
        self._next_slot += 1
        self._live[node.slot] = node
        self._seq += 1
        heappush(self._heap, (-node.bounds.log_max_err, node.rev_h, node.rev_g, self._seq, node))

    def _recompute_totals(self) -> None:
        if self._live:
            lb = logsumexp(np.fromiter((nd.contrib_lb for nd in self._live.values()), dtype=float, count=len(self._live)))
            ub = logsumexp(np.fromiter((nd.contrib_ub for nd in self._live.values()), dtype=float, count=len(self._live)))
            new_lbr = logaddexp(self._settled_logsum, lb)
            new_ubr = logaddexp(self._settled_logsum, ub)
        else:
            new_lbr = self._settled_logsum
            new_ubr = self._settled_logsum
        # totals never widen; clamping also absorbs last-ulp jitter
        self.log_lbr = max(self.log_lbr, new_lbr) if self.log_lbr != NEG_INF else new_lbr
        self.log_ubr = min(self.log_ubr, new_ubr)

    def _trace_row(self) -> None:
        self.trace.append(
            TraceRow(
                expansions=self.expansions,
                nodes=self.nodes_created,
                settled=len(self.settled),
                log_lbr=self.log_lbr,
                log_ubr=self.log_ubr,
                total_error=self.total_error(),
                wall_ms=self.wall_ms(),
            )
        )

    def wall_ms(self) -> float:
        return (time.perf_counter() - self._t0) * 1000.0

    def total_error(self) -> float:
        """Fraction of the upper total potentially unaccounted for: (UBR-LBR)/UBR."""
        if self.log_ubr == NEG_INF or self.log_lbr == self.log_ubr:
            return 0.0
        te = -math.expm1(self.log_lbr - self.log_ubr)
        return min(max(te, 0.0), 1.0)

    def frontier_nodes(self):
        return list(self._live.values())

    @property
    def frontier_size(self) -> int:
        return len(self._live)

    def frontier_max_log_err(self) -> float:
        if not self._heap:
            return NEG_INF
        return -self._heap[0][0]

    # -- the search ---------------------------------------------------------

    def expand(self) -> ExpansionRecord:
        """Expand the frontier node with the greatest interval width."""
        if not self._heap:
            raise RuntimeError("frontier is empty")
        _, _, _, _, node = heappop(self._heap)
        del self._live[node.slot]

        newly_settled = not node.self_settled
        if newly_settled:
            self.settled[node.included] = node.cache.log_r
            self._settled_logsum = logaddexp(self._settled_logsum, node.cache.log_r)

        children: list[tuple[int, int]] = []
        cands = node.candidates()
        if len(cands):
            gains = kernel.log_gains_batch(self.absorbed, node.cache, cands)
            order_idx = np.argsort(-gains, kind="stable")
            ordered = cands[order_idx]
            ordered_gains = gains[order_idx]

            excl_mask = node.excluded
            rev_g = node.rev_g
            prefix_excl = 0.0
            noisy = self.absorbed._noisy
            for i in range(len(ordered)):
                d = int(ordered[i])
                g_i = float(ordered_gains[i])
                if g_i > 0.0:
                    self.children_gain_above_one += 1
                child_mask = node.included | (1 << d)
                if noisy is not None:
                    child_cache = kernel.NodeCache(
                        mask=child_mask,
                        log_r=node.cache.log_r + g_i,
                        absence=node.cache.absence * noisy.w[:, d],
                    )
                else:
                    child_cache = kernel.extend_cache(self.absorbed, node.cache, d)
                child_lphg = node.log_prior_hg + float(self._logp[d]) + prefix_excl
                child_bounds = node_bounds(
                    self.absorbed,
                    child_cache,
                    ordered[i + 1 :],
                    child_lphg,
                    self.log_joint_baseline,
                    self.lb_odds_ok,
                    self.ub_gain_ok,
                )
                child = _Node(
                    included=child_mask,
                    excluded=excl_mask,
                    cand_order=ordered,
                    cand_offset=i + 1,
                    cache=child_cache,
                    bounds=child_bounds,
                    log_prior_hg=child_lphg,
                    contrib_lb=child_bounds.log_lb,
                    contrib_ub=child_bounds.log_ub,
                    self_settled=False,
                    rev_h=node.rev_h | self._revbit[d],
                    rev_g=rev_g,
                )
                self._push(child)
                self.nodes_created += 1
                children.append((child_mask, excl_mask))
                if self.node_log is not None:
                    self.node_log.append(
                        NodeRecord(child_mask, excl_mask, child.n_candidates, child_bounds)
                    )
                prefix_excl += float(self._log1mp[d])
                excl_mask |= 1 << d
                rev_g |= self._revbit[d]

        self.expansions += 1
        self._recompute_totals()
        return ExpansionRecord(
            included=node.included,
            excluded=node.excluded,
            newly_settled=newly_settled,
            children=tuple(children),
        )

    def run(self):
        """Expand until convergence, exhaustion, or the node cap; assemble results."""
        from . import posteriors

        while self.termination is None:
            if not self._heap:
                self.termination = TERMINATED_EXHAUSTED
            elif self.total_error() < self.config.p_min:
                self.termination = TERMINATED_CONVERGED
            elif self.nodes_created >= self.config.max_hypotheses:
                self.termination = TERMINATED_NODE_CAP
            else:
                self.expand()
                if self.expansions % self.config.trace_every == 0:
                    self._trace_row()
        if self.trace[-1].expansions != self.expansions:
            self._trace_row()
        return posteriors.assemble(self)

    def snapshot(self):
        """Assemble an interim result without mutating the search."""
        from . import posteriors

        return posteriors.assemble(self)


def init(network: Network, evidence: Evidence, config: SearchConfig | None = None) -> SearchState:
    return SearchState(network, evidence, config or SearchConfig())


def run(network: Network, evidence: Evidence, config: SearchConfig | None = None):
    return init(network, evidence, config).run()
