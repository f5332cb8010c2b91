import math

import numpy as np
import pytest

from diagbound import oracle
from diagbound.model import Disease, Evidence, Network, NoisyOrFinding, TabularFinding
from diagbound.netgen import GenSpec, generate

from conftest import small_random_case

APPROX = dict(rel=1e-12, abs=0)


def test_n1_exact_numbers(n1, e1, n1_exact):
    ex = oracle.enumerate_exact(n1, e1)
    assert math.exp(ex.log_pf) == pytest.approx(float(n1_exact.p_evidence), **APPROX)
    assert ex.posterior(0b01) == pytest.approx(float(n1_exact.posterior_d1_only), **APPROX)
    assert ex.posterior(0b00) == pytest.approx(float(n1_exact.posterior_none), **APPROX)
    assert ex.marginals[0] == pytest.approx(float(n1_exact.marginal_d1), **APPROX)
    assert ex.marginals[1] == pytest.approx(float(n1_exact.marginal_d2), **APPROX)
    assert ex.r(0b01) == pytest.approx(float(n1_exact.r_d1), **APPROX)


def test_partial_masses(n1, e1, n1_exact):
    ex = oracle.enumerate_exact(n1, e1)
    assert ex.partial_mass(0b01, 0b00) == pytest.approx(float(n1_exact.mass_d1), **APPROX)
    assert ex.partial_mass(0b00, 0b00) == pytest.approx(float(n1_exact.total), **APPROX)
    assert ex.partial_mass(0b00, 0b11) == pytest.approx(1.0, **APPROX)
    assert oracle.exact_partial_mass(n1, e1, 0b01, 0b00) == pytest.approx(
        float(n1_exact.mass_d1), **APPROX
    )


def test_empty_evidence_marginals_are_priors(n1):
    ex = oracle.enumerate_exact(n1, Evidence(frozenset(), frozenset()))
    assert ex.marginals[0] == pytest.approx(0.1, **APPROX)
    assert ex.marginals[1] == pytest.approx(0.2, **APPROX)


def test_two_term_bayes_closed_form():
    p, leak, q = 0.05, 0.02, 0.7
    net = Network(
        mode="noisy-or-leaky",
        diseases=(Disease("d", p),),
        findings=(NoisyOrFinding("f", leak, ((0, q),)),),
    )
    ex = oracle.enumerate_exact(net, Evidence(frozenset({0}), frozenset()))
    present = 1 - (1 - leak) * (1 - q)
    expected = p * present / (p * present + (1 - p) * leak)
    assert ex.marginals[0] == pytest.approx(expected, **APPROX)


def test_self_consistency(n1, e1):
    for seed in range(5):
        network, evidence, _ = small_random_case(seed, n_diseases=8)
        ex = oracle.enumerate_exact(network, evidence)
        assert ex.posteriors.sum() == pytest.approx(1.0, abs=1e-9)
        hyps = np.arange(1 << ex.n)
        for d in range(ex.n):
            from_posteriors = ex.posteriors[(hyps >> d) & 1 == 1].sum()
            assert ex.marginals[d] == pytest.approx(from_posteriors, abs=1e-9)


def test_oracle_guard(monkeypatch):
    net = generate(GenSpec(seed=0, n_diseases=25, n_findings=5))
    with pytest.raises(oracle.OracleSizeError, match="too large for oracle"):
        oracle.enumerate_exact(net, Evidence(frozenset({0}), frozenset()))
    monkeypatch.setenv("DIAGBOUND_ORACLE_MAX", "10")
    small = generate(GenSpec(seed=0, n_diseases=11, n_findings=5))
    with pytest.raises(oracle.OracleSizeError):
        oracle.enumerate_exact(small, Evidence(frozenset({0}), frozenset()))
    monkeypatch.setenv("DIAGBOUND_ORACLE_MAX", "12")
    oracle.enumerate_exact(small, Evidence(frozenset({0}), frozenset()))


# ---------------------------------------------------------------------------
# qualitative checkers


def _tab_net(table, n_parents=2, priors=None):
    priors = priors or [0.2] * n_parents
    return Network(
        mode="tabular-nps",
        diseases=tuple(Disease(f"d{i}", priors[i]) for i in range(n_parents)),
        findings=(TabularFinding("f", tuple(range(n_parents)), tuple(table)),),
    )


def test_noisy_or_passes_all_checkers():
    for seed in range(6):
        net = generate(GenSpec(seed=seed, n_diseases=10, n_findings=8, mean_links=3.0))
        for f in range(net.n_findings):
            assert oracle.check_positive_influence(net, f).passed
            assert oracle.check_nps_pairwise(net, f).passed
            assert oracle.check_nps_general(net, f).passed


def test_positive_influence_failure_witness():
    res = oracle.check_positive_influence(_tab_net([0.1, 0.05], n_parents=1), 0)
    assert not res.passed
    assert res.witness is not None


def test_positive_influence_xor_table_fails():
    res = oracle.check_positive_influence(_tab_net([0.05, 0.9, 0.9, 0.05]), 0)
    assert not res.passed


def test_nps_pairwise_failure_arithmetic():
    # 0.9 * 0.1 = 0.09 > 0.2 * 0.2 = 0.04
    res = oracle.check_nps_pairwise(_tab_net([0.1, 0.2, 0.2, 0.9]), 0)
    assert not res.passed
    assert res.witness[:2] == (0, 1)


def test_nps_pairwise_single_parent_vacuous():
    assert oracle.check_nps_pairwise(_tab_net([0.1, 0.4], n_parents=1), 0).passed


def test_nps_general_finds_pairwise_failure():
    res = oracle.check_nps_general(_tab_net([0.1, 0.2, 0.2, 0.9]), 0)
    assert not res.passed
    x, y, z = res.witness
    assert z == ()
    assert {x, y} == {(0,), (1,)}


def test_nps_general_accepts_custom_priors():
    net = generate(GenSpec(seed=1, n_diseases=6, n_findings=4, mean_links=3.0))
    for f in range(net.n_findings):
        k = len(net.finding_parents(f))
        rng = np.random.default_rng(f)
        assert oracle.check_nps_general(net, f, priors=rng.uniform(0.05, 0.5, size=k)).passed


def test_nps_general_parent_guard():
    net = generate(GenSpec(seed=2, n_diseases=30, n_findings=1, mean_links=12.0))
    k = len(net.finding_parents(0))
    if k > oracle.NPS_GENERAL_MAX_PARENTS:
        with pytest.raises(oracle.OracleSizeError):
            oracle.check_nps_general(net, 0)


def test_declining_gain_passes_on_reference_case(n1, e1, n1_exact):
    assert oracle.check_declining_gain(n1, e1).passed
    ex = oracle.enumerate_exact(n1, e1)
    gain_d1_given_none = ex.r(0b01)
    gain_d1_given_d2 = ex.r(0b11) / ex.r(0b10)
    assert gain_d1_given_none == pytest.approx(float(n1_exact.r_d1), **APPROX)
    assert gain_d1_given_d2 == pytest.approx(float(n1_exact.r_d1d2 / n1_exact.r_d2), **APPROX)
    assert gain_d1_given_none >= gain_d1_given_d2


def test_declining_gain_fails_on_synergistic_table():
    # positive influence holds but the pair reinforces instead of explaining away
    net = _tab_net([0.1, 0.2, 0.2, 0.9])
    assert oracle.check_positive_influence(net, 0).passed
    ev = Evidence(positive=frozenset({0}), negative=frozenset())
    res = oracle.check_declining_gain(net, ev)
    assert not res.passed
    assert res.witness == ((0,), (1,), ())


def test_declining_gain_on_random_noisy_or_cases():
    for seed in range(8):
        network, evidence, _ = small_random_case(seed, n_diseases=7)
        assert oracle.check_declining_gain(network, evidence).passed


def test_generated_tabular_networks_are_well_behaved():
    net = generate(GenSpec(seed=4, n_diseases=8, n_findings=6, mode="tabular-nps"))
    for f in range(net.n_findings):
        assert oracle.check_positive_influence(net, f).passed
        assert oracle.check_nps_pairwise(net, f).passed
        assert oracle.check_nps_general(net, f).passed
