import math

import numpy as np
import pytest

from diagbound import kernel, oracle
from diagbound.model import Disease, Evidence, Network, NoisyOrFinding

from conftest import small_random_case

APPROX = dict(rel=1e-12, abs=0)


def test_finding_likelihood_values(n1):
    assert kernel.finding_likelihood(n1, 0, True, 0b01) == pytest.approx(0.802, **APPROX)
    assert kernel.finding_likelihood(n1, 0, True, 0b00) == pytest.approx(0.01, **APPROX)
    assert kernel.finding_likelihood(n1, 1, False, 0b10) == pytest.approx(0.95 * 0.1, **APPROX)


def test_absorb_adjusted_odds(n1, e1, n1_exact):
    ab = kernel.absorb(n1, e1)
    assert ab.absorbed
    assert math.exp(ab.log_adj_odds[0]) == pytest.approx(float(n1_exact.odds_d1), **APPROX)
    assert math.exp(ab.log_adj_odds[1]) == pytest.approx(float(n1_exact.adj_odds_d2), **APPROX)
    assert math.exp(ab.log_baseline) == pytest.approx(float(n1_exact.baseline), **APPROX)


def test_absorb_without_negatives_keeps_raw_odds(n1):
    ab = kernel.absorb(n1, Evidence(frozenset({0}), frozenset()))
    assert np.allclose(ab.log_adj_odds, ab.log_raw_odds)


def test_absorb_unlinked_disease_keeps_prior_odds(n1, e1):
    n3 = Network(n1.mode, n1.diseases + (Disease("d3", 0.3),), n1.findings)
    ab = kernel.absorb(n3, e1)
    assert math.exp(ab.log_adj_odds[2]) == pytest.approx(3 / 7, **APPROX)


def test_adjusted_odds_never_exceed_raw(n1, e1):
    for seed in range(10):
        network, evidence, _ = small_random_case(seed)
        ab = kernel.absorb(network, evidence)
        assert np.all(ab.log_adj_odds <= ab.log_raw_odds + 1e-12)


def test_log_relative_probability_values(n1, e1, n1_exact):
    ab = kernel.absorb(n1, e1)
    assert kernel.log_relative_probability(ab, 0) == 0.0
    assert math.exp(kernel.log_relative_probability(ab, 0b01)) == pytest.approx(
        float(n1_exact.r_d1), **APPROX
    )
    assert math.exp(kernel.log_relative_probability(ab, 0b11)) == pytest.approx(
        float(n1_exact.r_d1d2), **APPROX
    )


def test_gain_values(n1, e1, n1_exact):
    ab = kernel.absorb(n1, e1)
    root = kernel.new_cache(ab)
    assert kernel.gain(ab, root, 0) == pytest.approx(float(n1_exact.r_d1), **APPROX)
    with_d1 = kernel.extend_cache(ab, root, 0)
    expected = float(n1_exact.r_d1d2 / n1_exact.r_d1)
    assert kernel.gain(ab, with_d1, 1) == pytest.approx(expected, **APPROX)


def test_gain_of_unobserved_disease_is_its_odds(n1, e1):
    n3 = Network(n1.mode, n1.diseases + (Disease("d3", 0.3),), n1.findings)
    ab = kernel.absorb(n3, e1)
    root = kernel.new_cache(ab)
    assert kernel.gain(ab, root, 2) == pytest.approx(3 / 7, **APPROX)
    deeper = kernel.extend_cache(ab, root, 0)
    assert kernel.gain(ab, deeper, 2) == pytest.approx(3 / 7, **APPROX)


def test_extend_cache_updates_absence_products(n1, e1):
    ab = kernel.absorb(n1, e1)
    root = kernel.new_cache(ab)
    with_d1 = kernel.extend_cache(ab, root, 0)
    assert with_d1.absence[0] == pytest.approx(0.99 * 0.2, **APPROX)
    # f2 is negative (absorbed), so only f1 is cached
    assert with_d1.absence.shape == (1,)
    assert root.absence[0] == pytest.approx(0.99, **APPROX)  # original untouched


def test_extend_cache_commutes(n1, e1):
    ab = kernel.absorb(n1, e1)
    root = kernel.new_cache(ab)
    a = kernel.extend_cache(ab, kernel.extend_cache(ab, root, 0), 1)
    b = kernel.extend_cache(ab, kernel.extend_cache(ab, root, 1), 0)
    assert a.log_r == pytest.approx(b.log_r, rel=1e-12)
    assert np.allclose(a.absence, b.absence, rtol=1e-15)


@pytest.mark.parametrize("seed", range(12))
def test_extend_cache_matches_scratch(seed):
    network, evidence, _ = small_random_case(seed)
    ab = kernel.absorb(network, evidence)
    rng = np.random.default_rng(seed)
    cache = kernel.new_cache(ab)
    order = rng.permutation(network.n_diseases)[:6]
    for d in order:
        cache = kernel.extend_cache(ab, cache, int(d))
        scratch = kernel.log_relative_probability(ab, cache.mask)
        assert cache.log_r == pytest.approx(scratch, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("seed", range(12))
def test_absorption_is_exact(seed):
    # adjusted odds + positive findings == raw odds + full evidence
    network, evidence, _ = small_random_case(seed)
    ab = kernel.absorb(network, evidence)
    rng = np.random.default_rng(seed + 99)
    for _ in range(30):
        mask = int(rng.integers(0, 1 << network.n_diseases))
        fast = kernel.log_relative_probability(ab, mask)
        raw = kernel.log_relative_probability_raw(network, evidence, mask)
        assert fast == pytest.approx(raw, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_relative_probability_matches_oracle(seed):
    # the kernel formula against full joint enumeration, all hypotheses
    network, evidence, _ = small_random_case(seed, n_diseases=7)
    ab = kernel.absorb(network, evidence)
    exact = oracle.enumerate_exact(network, evidence)
    for mask in range(1 << network.n_diseases):
        got = kernel.log_relative_probability(ab, mask)
        assert got == pytest.approx(float(exact.log_r[mask]), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_declining_gain_over_sets(seed):
    # gain(x | z) >= gain(x | y+z) for disjoint sets, via complete hypotheses
    network, evidence, _ = small_random_case(seed, n_diseases=9)
    ab = kernel.absorb(network, evidence)
    rng = np.random.default_rng(seed * 7 + 1)
    n = network.n_diseases
    for _ in range(60):
        assign = rng.integers(0, 4, size=n)  # 0: unused, 1: x, 2: y, 3: z
        x = sum(1 << i for i in range(n) if assign[i] == 1)
        y = sum(1 << i for i in range(n) if assign[i] == 2)
        z = sum(1 << i for i in range(n) if assign[i] == 3)
        gain_xz = kernel.log_relative_probability(ab, x | z) - kernel.log_relative_probability(ab, z)
        gain_xyz = kernel.log_relative_probability(ab, x | y | z) - kernel.log_relative_probability(
            ab, y | z
        )
        assert math.exp(gain_xz) >= math.exp(gain_xyz) - 1e-12


def test_q_one_negative_link_excludes_disease():
    net = Network(
        mode="noisy-or-leaky",
        diseases=(Disease("a", 0.2), Disease("b", 0.3)),
        findings=(
            NoisyOrFinding("f", 0.1, ((0, 1.0),)),
            NoisyOrFinding("g", 0.2, ((0, 0.5), (1, 0.5))),
        ),
    )
    ev = Evidence(positive=frozenset({1}), negative=frozenset({0}))
    ab = kernel.absorb(net, ev)
    assert ab.log_adj_odds[0] == -math.inf
    assert kernel.log_relative_probability(ab, 0b01) == -math.inf
    assert math.isfinite(kernel.log_relative_probability(ab, 0b10))
