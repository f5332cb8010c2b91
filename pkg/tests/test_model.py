import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diagbound.model import (
    Disease,
    Evidence,
    ModelError,
    Network,
    NoisyOrFinding,
    TabularFinding,
    case_from_doc,
    case_to_doc,
    finding_present_probability,
    network_from_doc,
    parse_network,
    serialize_network,
    validate_case,
    validate_network,
)
from diagbound.netgen import GenSpec, generate

from conftest import small_random_case


def test_n1_validates(n1):
    assert validate_network(n1).ok


def test_prior_must_be_interior(n1):
    bad = Network(n1.mode, (Disease("d1", 1.0), n1.diseases[1]), n1.findings)
    report = validate_network(bad)
    assert not report.ok
    assert any("prior not in open interval" in i.message for i in report.issues)
    worse = Network(n1.mode, (Disease("d1", 0.0), n1.diseases[1]), n1.findings)
    assert not validate_network(worse).ok


def test_table_length_must_be_power_of_two():
    net = Network(
        mode="tabular-nps",
        diseases=tuple(Disease(f"d{i}", 0.1) for i in range(3)),
        findings=(TabularFinding("f0", (0, 1, 2), tuple([0.5] * 7)),),
    )
    report = validate_network(net)
    assert not report.ok
    assert any("table length" in i.message for i in report.issues)


@pytest.mark.parametrize(
    "leak,q,ok",
    [(0.0, 0.5, True), (0.5, 1.0, True), (1.0, 0.5, False), (0.5, 0.0, False), (-0.1, 0.5, False)],
)
def test_noisy_or_parameter_ranges(leak, q, ok):
    net = Network(
        mode="noisy-or-leaky",
        diseases=(Disease("d", 0.2),),
        findings=(NoisyOrFinding("f", leak, ((0, q),)),),
    )
    assert validate_network(net).ok is ok


def test_duplicate_and_invalid_parent_refs():
    net = Network(
        mode="noisy-or-leaky",
        diseases=(Disease("d", 0.2),),
        findings=(NoisyOrFinding("f", 0.1, ((0, 0.5), (0, 0.6))),),
    )
    assert any("duplicate parent" in i.message for i in validate_network(net).issues)
    net = Network(
        mode="noisy-or-leaky",
        diseases=(Disease("d", 0.2),),
        findings=(NoisyOrFinding("f", 0.1, ((3, 0.5),)),),
    )
    assert any("invalid disease index" in i.message for i in validate_network(net).issues)


def test_mode_mismatch_rejected(n1):
    net = Network("tabular-nps", n1.diseases, n1.findings)
    assert not validate_network(net).ok


def test_case_validation(n1, e1):
    assert validate_case(n1, e1).ok

    overlap = Evidence(positive=frozenset({0}), negative=frozenset({0}))
    report = validate_case(n1, overlap)
    assert any("overlapping evidence" in i.message and "f1" in i.location for i in report.issues)

    zero_leak = Network(
        n1.mode,
        n1.diseases,
        (NoisyOrFinding("f1", 0.0, ((0, 0.8),)), n1.findings[1]),
    )
    report = validate_case(zero_leak, Evidence(frozenset({0}), frozenset()))
    assert any("zero-leak positive finding" in i.message for i in report.issues)

    out_of_range = Evidence(positive=frozenset({7}), negative=frozenset())
    assert not validate_case(n1, out_of_range).ok


def test_tabular_zero_baseline_case_rejected():
    net = Network(
        mode="tabular-nps",
        diseases=(Disease("d", 0.2),),
        findings=(TabularFinding("f", (0,), (0.0, 0.9)), TabularFinding("g", (0,), (1.0, 1.0))),
    )
    assert validate_network(net).ok
    assert not validate_case(net, Evidence(frozenset({0}), frozenset())).ok
    assert not validate_case(net, Evidence(frozenset(), frozenset({1}))).ok
    assert validate_case(net, Evidence(frozenset({1}), frozenset())).ok


def test_round_trip_hand_network(n1):
    again = parse_network(serialize_network(n1))
    assert again == n1


def test_round_trip_tabular():
    net = Network(
        mode="tabular-nps",
        diseases=(Disease("a", 0.05), Disease("b", 1e-4)),
        findings=(TabularFinding("f", (0, 1), (0.01, 0.4, 0.3, 0.9)),),
    )
    assert parse_network(serialize_network(net)) == net


@pytest.mark.parametrize("seed", range(8))
def test_round_trip_generated(seed):
    net = generate(GenSpec(seed=seed, n_diseases=12, n_findings=20))
    assert parse_network(serialize_network(net)) == net


def test_parse_accepts_scientific_notation_and_names():
    doc = {
        "mode": "noisy-or-leaky",
        "diseases": [{"name": "a", "prior": 1e-3}, {"name": "b", "prior": 2.5e-2}],
        "findings": [{"name": "f", "leak": 1E-2, "links": [{"disease": "b", "q": 5e-1}]}],
    }
    net = network_from_doc(doc)
    assert net.diseases[0].prior == 1e-3
    assert net.findings[0].links == ((1, 0.5),)


def test_case_doc_uses_names(n1, e1):
    doc = case_to_doc(e1, n1)
    assert doc == {"positive": ["f1"], "negative": ["f2"]}
    assert case_from_doc(doc, n1) == e1
    assert case_from_doc({"positive": [0], "negative": [1]}, n1) == e1
    with pytest.raises(ModelError):
        case_from_doc({"positive": ["nope"], "negative": []}, n1)


def test_unknown_link_name_is_parse_error():
    doc = {
        "mode": "noisy-or-leaky",
        "diseases": [{"name": "a", "prior": 0.1}],
        "findings": [{"name": "f", "leak": 0.1, "links": [{"disease": "zz", "q": 0.5}]}],
    }
    with pytest.raises(ModelError):
        network_from_doc(doc)


def test_serialization_is_deterministic():
    net = generate(GenSpec(seed=3, n_diseases=10, n_findings=15))
    assert serialize_network(net) == serialize_network(net)
    assert json.loads(serialize_network(net)) == json.loads(serialize_network(net))


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    extra=st.integers(0, 2 ** 12 - 1),
    base=st.integers(0, 2 ** 12 - 1),
)
def test_noisy_or_monotone_in_present_set(seed, base, extra):
    # growing the present set can only raise P(finding present)
    network, _, _ = small_random_case(seed % 50, n_diseases=8, n_findings=6)
    small = base & ((1 << network.n_diseases) - 1)
    large = small | (extra & ((1 << network.n_diseases) - 1))
    for f in range(network.n_findings):
        p_small = finding_present_probability(network, f, small)
        p_large = finding_present_probability(network, f, large)
        assert p_large >= p_small - 1e-12
