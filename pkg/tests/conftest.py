"""Shared fixtures.

The two-disease reference network is small enough that every quantity has
a closed form; the exact values below were computed by hand as fractions and
double-checked against the enumeration oracle, and the important tests pin
them rather than trusting either code path alone.
"""

from __future__ import annotations

from fractions import Fraction

import pytest

from diagbound.model import Disease, Evidence, Network, NoisyOrFinding
from diagbound.netgen import GenSpec, generate, sample_case


@pytest.fixture
def n1() -> Network:
    return Network(
        mode="noisy-or-leaky",
        diseases=(Disease("d1", 0.1), Disease("d2", 0.2)),
        findings=(
            NoisyOrFinding("f1", 0.01, ((0, 0.8), (1, 0.5))),
            NoisyOrFinding("f2", 0.05, ((1, 0.9),)),
        ),
    )


@pytest.fixture
def e1() -> Evidence:
    return Evidence(positive=frozenset({0}), negative=frozenset({1}))


class N1Exact:
    """Closed-form constants for n1 with evidence e1 (f1 present, f2 absent)."""

    # relative probabilities of the four complete hypotheses
    r_empty = Fraction(1)
    r_d1 = Fraction(401, 45)  # (1/9) * (0.802 / 0.01)
    r_d2 = Fraction(101, 80)  # 0.025 * (0.505 / 0.01)
    r_d1d2 = Fraction(901, 3600)  # (1/360) * (0.901 / 0.01)
    total = r_empty + r_d1 + r_d2 + r_d1d2  # 41126/3600

    odds_d1 = Fraction(1, 9)
    adj_odds_d2 = Fraction(1, 40)  # 0.25 * (1 - 0.9)

    baseline = Fraction(19, 2000)  # P(f1 present, f2 absent | none) = 0.01 * 0.95
    prior_none = Fraction(18, 25)  # 0.9 * 0.8
    p_evidence = total * baseline * prior_none

    # bound family at the root (no diseases assigned)
    ub_gain_root = (1 + r_d1) * (1 + r_d2)  # 80726/3600
    lb_odds_root = (1 + odds_d1) * (1 + adj_odds_d2)  # 41/36
    ub_prior_root = 1 + (1 - prior_none) / (baseline * prior_none)

    # node (d1 included, nothing excluded)
    mass_d1 = r_d1 + r_d1d2  # 32981/3600
    lb_odds_d1 = r_d1 * (1 + adj_odds_d2)  # 16441/1800

    marginal_d1 = mass_d1 / total
    marginal_d2 = (r_d2 + r_d1d2) / total
    posterior_d1_only = r_d1 / total
    posterior_none = r_empty / total

    init_total_error = 1 - lb_odds_root / ub_gain_root


@pytest.fixture
def n1_exact() -> type[N1Exact]:
    return N1Exact


def small_random_case(seed: int, n_diseases: int | None = None, n_findings: int | None = None,
                      n_negative: int | None = None):
    """A seeded oracle-scale network and sampled case for property tests."""
    import numpy as np

    rng = np.random.default_rng(seed)
    nd = n_diseases if n_diseases is not None else int(rng.integers(4, 11))
    nf = n_findings if n_findings is not None else int(rng.integers(6, 21))
    spec = GenSpec(
        seed=seed,
        n_diseases=nd,
        n_findings=nf,
        mean_links=2.5,
        prior_range=(0.01, 0.3),
        strength_range=(0.2, 0.95),
        leak_range=(0.01, 0.1),
    )
    network = generate(spec)
    neg = n_negative if n_negative is not None else int(rng.integers(0, 5))
    evidence, true_mask = sample_case(network, seed=seed + 1, n_negative=neg)
    return network, evidence, true_mask
