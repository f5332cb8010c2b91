"""Ground-truth engine: full joint enumeration plus qualitative checkers.

Enumeration over all 2^n complete hypotheses is exact by construction and
serves as the reference for every probabilistic quantity the search engine
bounds.  It is guarded to desk scale (24 diseases by default, overridable
with the DIAGBOUND_ORACLE_MAX environment variable).

The checkers certify the qualitative properties the bound calculus relies
on: positive influence of each disease on each finding, negative product
synergy (the "explaining away" shape) per finding, and the declining-gain
property of relative probabilities over a concrete case.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .model import Evidence, Network, NoisyOrFinding, TabularFinding
from .numerics import NEG_INF, logsumexp

DEFAULT_ORACLE_MAX = 24
NPS_GENERAL_MAX_PARENTS = 10
SYNERGY_TOL = 1e-12


class OracleSizeError(Exception):
    pass


def oracle_max_diseases() -> int:
    raw = os.environ.get("DIAGBOUND_ORACLE_MAX")
    if raw is None:
        return DEFAULT_ORACLE_MAX
    return int(raw)


def _guard(n: int) -> None:
    cap = oracle_max_diseases()
    if n > cap:
        raise OracleSizeError(f"too large for oracle: {n} diseases exceeds cap of {cap}")


def _finding_state_logprob(network: Network, f: int, present: bool, n: int) -> np.ndarray:
    """Vector over all 2^n hypotheses of log P(finding f in `present` state)."""
    size = 1 << n
    fd = network.findings[f]
    if isinstance(fd, NoisyOrFinding):
        log_absent = np.full(size, math.log1p(-fd.leak) if fd.leak < 1.0 else NEG_INF)
        for d, q in fd.links:
            view = log_absent.reshape(-1, 2, 1 << d)
            view[:, 1, :] += math.log1p(-q) if q < 1.0 else NEG_INF
        if present:
            with np.errstate(divide="ignore"):
                return np.log1p(-np.exp(log_absent))
        return log_absent
    table = np.asarray(fd.table, dtype=float)
    hyps = np.arange(size, dtype=np.int64)
    idx = np.zeros(size, dtype=np.int64)
    for b, d in enumerate(fd.parents):
        idx |= ((hyps >> d) & 1) << b
    with np.errstate(divide="ignore"):
        per_row = np.log(table) if present else np.log1p(-table)
    return per_row[idx]


@dataclass(frozen=True)
class ExactResult:
    """Exact joint over all complete hypotheses for one case."""

    n: int
    log_pf: float
    log_joint: np.ndarray  # (2^n,) log P(hypothesis, evidence)
    log_r: np.ndarray  # (2^n,) log relative probability
    posteriors: np.ndarray  # (2^n,)
    marginals: np.ndarray  # (n,) per-disease posterior

    def posterior(self, mask: int) -> float:
        return float(self.posteriors[mask])

    def r(self, mask: int) -> float:
        return float(np.exp(self.log_r[mask]))

    def log_partial_mass(self, included: int, excluded: int) -> float:
        """log of the summed R over complete hypotheses extending (included, excluded)."""
        if included & excluded:
            raise ValueError("included and excluded sets overlap")
        hyps = np.arange(1 << self.n, dtype=np.int64)
        sel = ((hyps & included) == included) & ((hyps & excluded) == 0)
        return logsumexp(self.log_r[sel])

    def partial_mass(self, included: int, excluded: int) -> float:
        return float(np.exp(self.log_partial_mass(included, excluded)))


def enumerate_exact(network: Network, evidence: Evidence) -> ExactResult:
    """Full joint enumeration; exact by construction.

    Raises OracleSizeError above the disease-count guard.
    """
    n = network.n_diseases
    _guard(n)
    size = 1 << n

    log_lik = np.zeros(size)
    for f in sorted(evidence.positive):
        log_lik += _finding_state_logprob(network, f, True, n)
    for f in sorted(evidence.negative):
        log_lik += _finding_state_logprob(network, f, False, n)

    log_prior = np.zeros(size)
    base = 0.0
    for d, dis in enumerate(network.diseases):
        base += math.log1p(-dis.prior)
        view = log_prior.reshape(-1, 2, 1 << d)
        view[:, 1, :] += math.log(dis.prior) - math.log1p(-dis.prior)
    log_prior += base

    log_joint = log_lik + log_prior
    log_pf = logsumexp(log_joint)
    if log_pf == NEG_INF:
        raise ValueError("evidence has zero probability under this network")
    posteriors = np.exp(log_joint - log_pf)
    log_r = log_joint - log_joint[0]

    marginals = np.empty(n)
    for d in range(n):
        view = log_joint.reshape(-1, 2, 1 << d)
        marginals[d] = math.exp(logsumexp(view[:, 1, :]) - log_pf)

    return ExactResult(
        n=n,
        log_pf=log_pf,
        log_joint=log_joint,
        log_r=log_r,
        posteriors=posteriors,
        marginals=marginals,
    )


def exact_partial_mass(network: Network, evidence: Evidence, included: int, excluded: int) -> float:
    """Exact summed R over all complete extensions of a partial hypothesis."""
    return enumerate_exact(network, evidence).partial_mass(included, excluded)


# ---------------------------------------------------------------------------
# Qualitative checkers


@dataclass(frozen=True)
class CheckResult:
    check: str
    passed: bool
    finding: int | None = None
    witness: tuple | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.passed


def _present_table(network: Network, f: int) -> tuple[tuple[int, ...], np.ndarray] | None:
    """P(finding present | parent assignment) over all 2^k assignments.

    Returns None for noisy-OR findings with too many parents to tabulate
    (their monotonicity is already implied by the product form).
    """
    fd = network.findings[f]
    if isinstance(fd, TabularFinding):
        return fd.parents, np.asarray(fd.table, dtype=float)
    if len(fd.links) > 16:
        return None
    k = len(fd.links)
    absent = np.full(1 << k, 1.0 - fd.leak)
    for b, (_, q) in enumerate(fd.links):
        view = absent.reshape(-1, 2, 1 << b)
        view[:, 1, :] *= 1.0 - q
    return tuple(d for d, _ in fd.links), 1.0 - absent


def check_positive_influence(network: Network, f: int) -> CheckResult:
    """Flipping any parent absent -> present never decreases P(finding present).

    Checked over every full parent assignment; a counterexample assignment is
    returned on failure.
    """
    name = "positive-influence"
    tab = _present_table(network, f)
    if tab is None:
        # noisy-OR with validated strengths is monotone by the product form
        return CheckResult(name, True, f, detail="noisy-OR product form")
    parents, table = tab
    k = len(parents)
    for b in range(k):
        low = table.reshape(-1, 2, 1 << b)
        diff = low[:, 1, :] - low[:, 0, :]
        bad = np.argwhere(diff < -SYNERGY_TOL)
        if bad.size:
            i, j = int(bad[0][0]), int(bad[0][1])
            assignment = (i << (b + 1)) | j  # index with parent b absent
            return CheckResult(
                name,
                False,
                f,
                witness=(parents[b], assignment),
                detail=f"flipping parent {parents[b]} lowers P("
                f"{table[assignment]:.6g} -> {table[assignment | (1 << b)]:.6g})",
            )
    return CheckResult(name, True, f)


def check_nps_pairwise(network: Network, f: int) -> CheckResult:
    """Two-cause negative product synergy for every parent pair.

    For parents (a, b) and every assignment x of the rest:
    P(F|a,b,x) * P(F|~a,~b,x) <= P(F|~a,b,x) * P(F|a,~b,x) + tol.
    Cross-multiplied so zero entries need no special casing.
    """
    name = "nps-pairwise"
    tab = _present_table(network, f)
    if tab is None:
        return CheckResult(name, True, f, detail="noisy-OR product form")
    parents, table = tab
    k = len(parents)
    if k < 2:
        return CheckResult(name, True, f, detail="fewer than two parents")
    idx = np.arange(1 << k, dtype=np.int64)
    for a in range(k):
        for b in range(a + 1, k):
            rest = idx[((idx >> a) & 1 == 0) & ((idx >> b) & 1 == 0)]
            t00 = table[rest]
            t10 = table[rest | (1 << a)]
            t01 = table[rest | (1 << b)]
            t11 = table[rest | (1 << a) | (1 << b)]
            viol = t11 * t00 - t01 * t10
            bad = np.argwhere(viol > SYNERGY_TOL)
            if bad.size:
                x = int(rest[int(bad[0][0])])
                return CheckResult(
                    name,
                    False,
                    f,
                    witness=(parents[a], parents[b], x),
                    detail=f"{t11[bad[0][0]] * t00[bad[0][0]]:.6g} > {t01[bad[0][0]] * t10[bad[0][0]]:.6g}",
                )
    return CheckResult(name, True, f)


def _submask_iter(mask: int):
    """All submasks of mask, including 0 and mask itself."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def check_nps_general(network: Network, f: int, priors: np.ndarray | None = None) -> CheckResult:
    """Set-level negative product synergy with prior-weighted marginalization.

    P(F|S) for a set event S (all of S present, the rest marginalized by
    priors) is computed for every S; then for all disjoint x, y, z:
    P(F|xyz) * P(F|z) <= P(F|xz) * P(F|yz) + tol.
    """
    name = "nps-general"
    parents = network.finding_parents(f)
    k = len(parents)
    if k > NPS_GENERAL_MAX_PARENTS:
        raise OracleSizeError(f"finding has {k} parents, cap is {NPS_GENERAL_MAX_PARENTS}")
    tab = _present_table(network, f)
    assert tab is not None
    _, table = tab
    if priors is None:
        priors = np.array([network.diseases[d].prior for d in parents])
    else:
        priors = np.asarray(priors, dtype=float)

    # g[s] = P(F present | all of s present), parents outside s marginalized.
    g = table.astype(float).copy()
    for b in range(k):
        view = g.reshape(-1, 2, 1 << b)
        view[:, 0, :] = (1.0 - priors[b]) * view[:, 0, :] + priors[b] * view[:, 1, :]

    for union in range(1 << k):
        for x in _submask_iter(union):
            rest = union & ~x
            for y in _submask_iter(rest):
                z = rest & ~y
                if g[union] * g[z] > g[x | z] * g[y | z] + SYNERGY_TOL:
                    wx = tuple(parents[b] for b in range(k) if x >> b & 1)
                    wy = tuple(parents[b] for b in range(k) if y >> b & 1)
                    wz = tuple(parents[b] for b in range(k) if z >> b & 1)
                    return CheckResult(
                        name,
                        False,
                        f,
                        witness=(wx, wy, wz),
                        detail=f"{g[union] * g[z]:.6g} > {g[x | z] * g[y | z]:.6g}",
                    )
    return CheckResult(name, True, f)


def check_declining_gain(network: Network, evidence: Evidence) -> CheckResult:
    """Explanatory gain never increases as the hypothesis grows.

    The set form - gain(x, z) >= gain(x, y+z) for all disjoint x, y, z, with
    gain(x, z) = R(x+z)/R(z) over complete hypotheses - is equivalent to log R
    being submodular, so it suffices to test every pair of diseases over every
    context (the standard local characterization).  Used to certify the
    gain-product upper bound for tabular networks.

    A drop counts as a violation only beyond the absolute slack or a relative
    slack of the same size: log-space evaluation cannot resolve linear
    differences below a few ulps of the gain itself, and unlinked disease
    pairs produce mathematically equal gains that round apart.
    """
    name = "declining-gain"
    n = network.n_diseases
    exact = enumerate_exact(network, evidence)
    log_r = exact.log_r
    if np.any(np.isneginf(log_r)):
        return CheckResult(
            name, False, detail="zero-probability hypotheses present; gain ratios undefined, not certified"
        )
    hyps = np.arange(1 << n, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            ctx = hyps[((hyps >> i) & 1 == 0) & ((hyps >> j) & 1 == 0)]
            lhs_log = log_r[ctx | (1 << i)] - log_r[ctx]  # gain(i | ctx)
            rhs_log = log_r[ctx | (1 << i) | (1 << j)] - log_r[ctx | (1 << j)]  # gain(i | ctx+j)
            ok = lhs_log >= rhs_log - SYNERGY_TOL
            if not np.all(ok):
                rows = np.argwhere(~ok).ravel()
                # allow an absolute slack in linear space, except where the
                # gains are too large for exp to resolve the difference
                with np.errstate(over="ignore"):
                    lin_bad = (rhs_log[rows] > 700.0) | (
                        np.exp(rhs_log[rows]) - np.exp(lhs_log[rows]) > SYNERGY_TOL
                    )
                if np.any(lin_bad):
                    r = int(rows[int(np.argmax(lin_bad))])
                    z = int(ctx[r])
                    return CheckResult(
                        name,
                        False,
                        witness=((i,), (j,), tuple(b for b in range(n) if z >> b & 1)),
                        detail=f"log gain {lhs_log[r]:.6g} < {rhs_log[r]:.6g} after extension",
                    )
    return CheckResult(name, True)
