"""Seeded synthetic networks and sampled diagnostic cases.

Stands in for a real knowledge base: sparse bipartite networks with low
log-uniform disease priors, moderate link strengths, and small leaks, plus
forward-sampled cases.  Everything is deterministic in (spec, seed).

Default ranges are tuned so that a default-sized network yields forward
samples with a single-digit-to-low-teens number of positive findings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import (
    MODE_NOISY_OR,
    MODE_TABULAR,
    Disease,
    Evidence,
    Network,
    NoisyOrFinding,
    TabularFinding,
    finding_present_probability,
)

MAX_GENERATED_PARENTS = 10  # keeps every generated finding within checker guards


class GenerationError(Exception):
    pass


@dataclass(frozen=True)
class GenSpec:
    seed: int = 0
    n_diseases: int = 50
    n_findings: int = 100
    mean_links: float = 4.0
    prior_range: tuple[float, float] = (0.001, 0.1)
    strength_range: tuple[float, float] = (0.2, 0.95)
    leak_range: tuple[float, float] = (0.005, 0.05)
    mode: str = MODE_NOISY_OR

    def validated(self) -> "GenSpec":
        if self.n_diseases < 1 or self.n_findings < 0:
            raise GenerationError("need at least one disease")
        lo, hi = self.prior_range
        if not (0.0 < lo <= hi < 1.0):
            raise GenerationError(f"prior range outside (0,1): {self.prior_range}")
        lo, hi = self.strength_range
        if not (0.0 < lo <= hi <= 1.0):
            raise GenerationError(f"strength range outside (0,1]: {self.strength_range}")
        lo, hi = self.leak_range
        if not (0.0 <= lo <= hi < 1.0):
            raise GenerationError(f"leak range outside [0,1): {self.leak_range}")
        if self.mean_links < 1.0:
            raise GenerationError("mean_links must be at least 1")
        if self.mode not in (MODE_NOISY_OR, MODE_TABULAR):
            raise GenerationError(f"unknown mode {self.mode!r}")
        return self


def _noisy_or_table(leak: float, strengths: np.ndarray) -> tuple[float, ...]:
    k = len(strengths)
    absent = np.full(1 << k, 1.0 - leak)
    for b in range(k):
        view = absent.reshape(-1, 2, 1 << b)
        view[:, 1, :] *= 1.0 - strengths[b]
    return tuple(float(x) for x in 1.0 - absent)


def generate(spec: GenSpec) -> Network:
    """Deterministic network from a generation spec.

    Priors are log-uniform over prior_range; each finding draws
    1 + Poisson(mean_links - 1) distinct parents (capped so the qualitative
    checkers stay applicable), uniform strengths, and a uniform leak.
    Tabular mode emits the same gates as explicit tables, so generated
    tabular networks satisfy positive influence and negative synergy by
    construction.
    """
    spec = spec.validated()
    rng = np.random.default_rng(spec.seed)
    nd, nf = spec.n_diseases, spec.n_findings

    lo, hi = spec.prior_range
    priors = np.exp(rng.uniform(math.log(lo), math.log(hi), size=nd))
    width = max(3, len(str(max(nd, nf) - 1)))
    diseases = tuple(Disease(name=f"d{i:0{width}d}", prior=float(priors[i])) for i in range(nd))

    parent_cap = min(nd, MAX_GENERATED_PARENTS)
    findings = []
    for j in range(nf):
        k = int(min(1 + rng.poisson(spec.mean_links - 1.0), parent_cap))
        parents = np.sort(rng.choice(nd, size=k, replace=False))
        strengths = rng.uniform(*spec.strength_range, size=k)
        leak = float(rng.uniform(*spec.leak_range))
        name = f"f{j:0{width}d}"
        if spec.mode == MODE_NOISY_OR:
            links = tuple((int(d), float(q)) for d, q in zip(parents, strengths))
            findings.append(NoisyOrFinding(name=name, leak=leak, links=links))
        else:
            findings.append(
                TabularFinding(
                    name=name,
                    parents=tuple(int(d) for d in parents),
                    table=_noisy_or_table(leak, strengths),
                )
            )
    return Network(mode=spec.mode, diseases=diseases, findings=tuple(findings))


def sample_case(
    network: Network, seed: int, n_negative: int = 0, max_attempts: int = 1000
) -> tuple[Evidence, int]:
    """Forward-sample one diagnostic case.

    Diseases are drawn from their priors and findings from their gates; the
    evidence takes every sampled-present finding as positive plus n_negative
    uniformly chosen sampled-absent findings as negative.  Resamples when no
    finding comes up positive.  Returns the evidence and the true sampled
    disease set as a bitmask.
    """
    rng = np.random.default_rng(seed)
    n, nf = network.n_diseases, network.n_findings
    priors = np.array([d.prior for d in network.diseases])
    for _ in range(max_attempts):
        present = rng.random(n) < priors
        mask = 0
        for d in np.flatnonzero(present):
            mask |= 1 << int(d)
        draws = rng.random(nf)
        positive = []
        absent = []
        for f in range(nf):
            p = finding_present_probability(network, f, mask)
            (positive if draws[f] < p else absent).append(f)
        if not positive:
            continue
        take = min(n_negative, len(absent))
        negative = sorted(int(x) for x in rng.choice(len(absent), size=take, replace=False))
        return (
            Evidence(
                positive=frozenset(positive),
                negative=frozenset(absent[i] for i in negative),
            ),
            mask,
        )
    raise GenerationError(f"no positive finding in {max_attempts} forward samples")


def with_unlinked_diseases(network: Network, priors: tuple[float, ...]) -> Network:
    """Append diseases with no finding links (used to exercise factoring)."""
    width = max(3, len(str(network.n_diseases + len(priors))))
    extra = tuple(
        Disease(name=f"x{i:0{width}d}", prior=float(p)) for i, p in enumerate(priors)
    )
    return replace(network, diseases=network.diseases + extra)
