from collections import defaultdict

import numpy as np
import pytest

from ftbn.bn_model import BayesianNetwork, Node, TableCpt, Variable, prior
from ftbn.cutsets import minimal_cut_sets
from ftbn.inference import (
    Factor, InferenceError, ZeroProbabilityEvidence, enumerate_joint, evidence_indices, marginal,
    probability_of_evidence, query_probability, top_k_diagnoses,
)
from ftbn.variants import plc_noisy_network, plc_seqdep_network
from helpers import random_network

TE = {"TE": "faulty"}


def chain():
    a = Node(Variable("a"), (), prior(0.3))
    b = Node(Variable("b"), ("a",), TableCpt(((0.9, 0.1), (0.2, 0.8))))
    return BayesianNetwork((a, b))


# -------------------------------------------------------------- oracle basics

def test_chain_joint_by_hand():
    joint = enumerate_joint(chain()).as_dict()
    assert joint == pytest.approx({(0, 0): 0.63, (0, 1): 0.07, (1, 0): 0.06, (1, 1): 0.24})


def test_plc_oracle(plc_net):
    joint = enumerate_joint(plc_net)
    assert len(joint.probs) == 2 ** 18
    assert joint.total == pytest.approx(1.0, abs=1e-12)
    assert abs(joint.mass({"TE": 1}) - 0.22053) <= 1e-5


@pytest.mark.parametrize("seed", range(5))
def test_oracle_sums_to_one(seed):
    bn = random_network(np.random.default_rng(seed), 10, multistate=True)
    assert enumerate_joint(bn).total == pytest.approx(1.0, abs=1e-12)


def test_oracle_size_guard(monkeypatch):
    import ftbn.inference as inf
    monkeypatch.setattr(inf, "MAX_STATES", 8)
    bn = random_network(np.random.default_rng(0), 6, max_parents=0)
    with pytest.raises(InferenceError):
        enumerate_joint(bn)


# ------------------------------------------------------------------ factors

def test_factor_product_and_sum():
    f = Factor(("a", "b"), np.array([[1.0, 2.0], [3.0, 4.0]]))
    g = Factor(("b", "c"), np.array([[1.0, 0.0], [0.5, 0.5]]))
    h = f * g
    assert h.scope == ("a", "b", "c")
    assert h.values[1, 1, 0] == 2.0
    assert h.sum_out("b").values.tolist() == [[2.0, 1.0], [5.0, 2.0]]
    assert f.reduce({"a": 1}).values.tolist() == [3.0, 4.0]
    with pytest.raises(InferenceError):
        Factor(("a",), np.array([-1.0, 1.0]))


# -------------------------------------------------------- published numbers

def test_plc_prior_marginals(plc_net):
    assert abs(marginal(plc_net, "TE")["faulty"] - 0.22053) <= 1e-5
    assert abs(marginal(plc_net, "CH")["faulty"] - 0.18674) <= 1e-5
    for x in "ABC":
        assert abs(marginal(plc_net, f"In_{x}")["faulty"] - 0.03248) <= 1e-5


def test_plc_cpu_posterior(plc_net):
    assert abs(marginal(plc_net, "CPU_A", TE)["faulty"] - 0.38382) <= 1e-5


def test_mcs_joint_prior(plc_net):
    assert abs(query_probability(plc_net, {"CPU_A": "faulty", "CPU_B": "faulty"}) - 0.03075) <= 1e-5
    assert abs(query_probability(plc_net, {"In_A": "faulty"}) - 0.03248) <= 1e-5


def test_single_root():
    bn = BayesianNetwork((Node(Variable("a"), (), prior(0.3)),))
    assert marginal(bn, "a") == pytest.approx({"working": 0.7, "faulty": 0.3})
    (d,) = top_k_diagnoses(bn, {}, 1)
    assert d.assignment == {"a": "working"}
    assert d.posterior == pytest.approx(0.7)


def test_target_equals_evidence(plc_net):
    ev = {"TE": "faulty", "Voter": "working"}
    assert query_probability(plc_net, ev, ev) == 1.0
    assert query_probability(plc_net, {"TE": "working"}, TE) == 0.0


def test_evidence_on_query_variable(plc_net):
    assert marginal(plc_net, "Voter", {"Voter": "faulty"}) == {"working": 0.0, "faulty": 1.0}


def test_errors(plc_net):
    impossible = {"TE": "faulty", "PSS": "working", "Voter": "working", "CH": "working"}
    with pytest.raises(ZeroProbabilityEvidence):
        marginal(plc_net, "CPU_A", impossible)
    with pytest.raises(ZeroProbabilityEvidence):
        query_probability(plc_net, {"CPU_A": "faulty"}, impossible)
    with pytest.raises(ZeroProbabilityEvidence):
        top_k_diagnoses(plc_net, impossible, 3)
    with pytest.raises(InferenceError):
        marginal(plc_net, "nope")
    with pytest.raises(InferenceError):
        evidence_indices(plc_net, {"TE": "exploded"})
    with pytest.raises(InferenceError):
        top_k_diagnoses(plc_net, TE, 0)


# ------------------------------------------------------- oracle equivalence

def _random_evidence(rng, bn, joint):
    """Evidence drawn from a positive-mass assignment so P(E) > 0."""
    row = joint.states[rng.choice(len(joint.probs), p=joint.probs / joint.total)]
    chosen = rng.choice(len(joint.variables), size=int(rng.integers(0, 4)), replace=False)
    return {joint.variables[i]: bn.variable(joint.variables[i]).states[row[i]] for i in chosen}


@pytest.mark.parametrize("seed", range(50))
def test_elimination_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    bn = random_network(rng, int(rng.integers(2, 17)))
    joint = enumerate_joint(bn)
    ev = _random_evidence(rng, bn, joint)
    ev_idx = evidence_indices(bn, ev)
    p_e = joint.mass(ev_idx)
    assert abs(probability_of_evidence(bn, ev) - p_e) <= 1e-10
    for var in bn.ids:
        dist = marginal(bn, var, ev)
        for s, name in enumerate(bn.variable(var).states):
            expect = joint.mass({**ev_idx, var: s}) / p_e if ev_idx.get(var, s) == s else 0.0
            assert abs(dist[name] - expect) <= 1e-10
    pair = [bn.ids[i] for i in rng.choice(len(bn.ids), size=min(2, len(bn.ids)), replace=False)]
    target = {v: bn.variable(v).states[int(rng.integers(bn.card(v)))] for v in pair}
    tg_idx = evidence_indices(bn, target)
    consistent = all(ev_idx.get(v, s) == s for v, s in tg_idx.items())
    expect = joint.mass({**ev_idx, **tg_idx}) / p_e if consistent else 0.0
    assert abs(query_probability(bn, target, ev) - expect) <= 1e-10


@pytest.mark.parametrize("seed", range(10))
def test_multistate_matches_enumeration(seed):
    rng = np.random.default_rng(500 + seed)
    bn = random_network(rng, 12, multistate=True)
    joint = enumerate_joint(bn)
    ev = _random_evidence(rng, bn, joint)
    ev_idx = evidence_indices(bn, ev)
    for var in bn.ids:
        if var in ev:
            continue
        dist = marginal(bn, var, ev)
        for s, name in enumerate(bn.variable(var).states):
            assert abs(dist[name] - joint.mass({**ev_idx, var: s}) / joint.mass(ev_idx)) <= 1e-10


@pytest.mark.parametrize("seed", range(15))
def test_posterior_consistency(seed):
    rng = np.random.default_rng(900 + seed)
    bn = random_network(rng, 10)
    joint = enumerate_joint(bn)
    ev = _random_evidence(rng, bn, joint)
    var = bn.ids[int(rng.integers(len(bn.ids)))]
    if var in ev:
        return
    target = {var: bn.variable(var).states[1]}
    lhs = query_probability(bn, target, ev) * probability_of_evidence(bn, ev)
    assert abs(lhs - query_probability(bn, {**target, **ev})) <= 1e-12


# ---------------------------------------------------------------- diagnoses

def _explained(bn, ev):
    def stochastic(v):
        table = bn.cpt_array(v)
        return not np.all((table == 0.0) | (table == 1.0))
    return sorted(v for v in bn.ids if not bn[v].parents or (v not in ev and stochastic(v)))


def _oracle_diagnoses(bn, ev):
    joint = enumerate_joint(bn, ev)
    roots = _explained(bn, ev)
    cols = [joint.variables.index(r) for r in roots]
    mass = defaultdict(float)
    for row, p in zip(joint.states, joint.probs):
        mass[tuple(int(row[c]) for c in cols)] += p
    total = joint.total
    return roots, {k: v / total for k, v in mass.items() if v > 0}


@pytest.mark.parametrize("seed", range(20))
def test_top_k_matches_oracle(seed):
    rng = np.random.default_rng(300 + seed)
    bn = random_network(rng, int(rng.integers(3, 12)), multistate=bool(seed % 2))
    joint = enumerate_joint(bn)
    ev = _random_evidence(rng, bn, joint)
    roots, oracle = _oracle_diagnoses(bn, ev)
    k = int(rng.integers(1, 6))
    got = top_k_diagnoses(bn, ev, k)
    expected = sorted(oracle.values(), reverse=True)[:k]
    assert [d.posterior for d in got] == pytest.approx(expected, abs=1e-10)
    for d in got:
        key = tuple(bn.variable(r).index(d.assignment[r]) for r in roots)
        assert oracle[key] == pytest.approx(d.posterior, abs=1e-10)
    everything = top_k_diagnoses(bn, ev, 10 ** 6)
    assert len(everything) == len(oracle)
    assert abs(sum(d.posterior for d in everything) - 1.0) <= 1e-9


def test_plc_diagnoses_published(plc_net):
    ranked = top_k_diagnoses(plc_net, TE, 18)
    expected = [({"CPU_A", "CPU_B"}, 0.04533), ({"CPU_A", "CPU_C"}, 0.04533), ({"CPU_B", "CPU_C"}, 0.04533),
                ({"Voter"}, 0.02681)]
    for d, (members, post) in zip(ranked, expected):
        assert set(d.abnormal) == members
        assert abs(d.posterior - post) <= 1e-5
    assert set(ranked[17].abnormal) == {"CPU_A", "CPU_B", "CPU_C"}
    assert abs(ranked[17].posterior - 0.00963) <= 1e-5


def test_plc_best_first_matches_oracle(plc_net):
    roots, oracle = _oracle_diagnoses(plc_net, TE)
    got = top_k_diagnoses(plc_net, TE, 25)
    assert [d.posterior for d in got] == pytest.approx(sorted(oracle.values(), reverse=True)[:25], abs=1e-12)


def test_diagnoses_deterministic_tie_order(plc_net):
    first = top_k_diagnoses(plc_net, TE, 11)
    assert [d.abnormal for d in first[:3]] == [("CPU_A", "CPU_B"), ("CPU_A", "CPU_C"), ("CPU_B", "CPU_C")]
    assert first == top_k_diagnoses(plc_net, TE, 11)


def test_all_diagnoses_sum_to_one():
    ranked = top_k_diagnoses(chain(), {"b": "faulty"}, 100)
    assert len(ranked) == 2
    assert abs(sum(d.posterior for d in ranked) - 1.0) <= 1e-9
    assert ranked[0].assignment == {"a": "faulty"}
    assert ranked[0].posterior == pytest.approx(0.24 / 0.31)


def test_every_root_observed(plc_net):
    ev = {r: "working" for r in plc_net.roots()}
    (d,) = top_k_diagnoses(plc_net, ev, 5)
    assert d.abnormal == () and d.posterior == pytest.approx(1.0)
    (d,) = top_k_diagnoses(chain(), {"a": "faulty", "b": "working"}, 5)
    assert d.assignment == {"a": "faulty"} and d.posterior == pytest.approx(1.0)


def test_mcs_diagnosis_identity(plc_tree, plc_net, plc_priors):
    p_te = marginal(plc_net, "TE")["faulty"]
    for cs in minimal_cut_sets(plc_tree):
        diagnosis = {p: "faulty" if p in cs.members else "working" for p in plc_tree.primary_ids}
        prior_mass = query_probability(plc_net, diagnosis)
        assert abs(query_probability(plc_net, diagnosis, TE) - prior_mass / p_te) <= 1e-12


def test_variants_answer_queries():
    noisy = plc_noisy_network()
    assert 0 < marginal(noisy, "TE")["faulty"] < marginal(plc_seqdep_network(), "TE")["faulty"]
    d = top_k_diagnoses(plc_seqdep_network(), TE, 3)
    assert d[0].posterior >= d[1].posterior >= d[2].posterior
    assert {"CPU_A", "CPU_B", "CPU_C"} <= set(d[0].assignment)


def test_seqdep_diagnoses_match_oracle():
    bn = plc_seqdep_network()
    ev = evidence_indices(bn, TE)
    explained, oracle = _oracle_diagnoses(bn, ev)
    got = top_k_diagnoses(bn, TE, 12)
    assert [d.posterior for d in got] == pytest.approx(sorted(oracle.values(), reverse=True)[:12], abs=1e-12)
    for d in got:
        key = tuple(bn.variable(v).index(d.assignment[v]) for v in explained)
        assert oracle[key] == pytest.approx(d.posterior, abs=1e-12)
