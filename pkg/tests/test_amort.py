import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings

from netdisc.amort import (Report, chain_rule_check, channel_div, channel_div_amortized, check_amortizable,
                           classical_exact, classical_joint, classical_strategy_divergences, constant_output,
                           lemma_inequality_suite, net_div, parse_base, penalty_upper, sup_div,
                           verify_classical_adaptive, verify_meta_converse)
from netdisc.dvg import EXACT, LOWER, UPPER, DivergenceEstimate, rel_entropy
from netdisc.qobj import (classical_channel, depolarizing, diag_state, random_channel,
                          random_classical_superchannel, random_state, replacer_channel)
from netdisc.strat import random_descriptor
from netdisc.zoo import make_replacer, random_env_instance

from conftest import seeds


def _kl(p, q):
    p, q = np.asarray(p).ravel(), np.asarray(q).ravel()
    m = p > 0
    return float(np.sum(p[m] * np.log2(p[m] / q[m])))


def test_base_parsing():
    assert parse_base("sandwiched:2") == ("sandwiched", 2.0)
    check_amortizable("D")
    check_amortizable("sandwiched:2")
    for bad in ("petz:2", "sandwiched:0.5"):
        with pytest.raises(ValueError):
            check_amortizable(bad)
    with pytest.raises(ValueError):
        parse_base("renyi")


def test_classical_channel_divergence_is_row_max():
    n = classical_channel(np.array([[0.9, 0.1], [0.3, 0.7]]))
    m = classical_channel(np.array([[0.5, 0.5], [0.2, 0.8]]))
    want = max(_kl([0.9, 0.1], [0.5, 0.5]), _kl([0.3, 0.7], [0.2, 0.8]))
    est = channel_div(n, m)
    assert est.kind == EXACT and est.value == pytest.approx(want, abs=1e-12)
    assert channel_div_amortized(n, m).value == pytest.approx(want, abs=1e-12)


def test_replacer_channel_divergence_search():
    t1, t2 = random_state(2, seed=1), random_state(2, seed=2)
    est = channel_div(replacer_channel(t1, 2), replacer_channel(t2, 2), budget="2x200")
    assert est.kind == LOWER
    assert est.value == pytest.approx(rel_entropy(t1, t2).value, abs=1e-6)


@settings(max_examples=5)
@given(seeds)
def test_amortized_between_plain_and_dmax(seed):
    rng = np.random.default_rng(seed)
    n, m = random_channel(2, 2, seed=rng), depolarizing(2, 0.5)
    plain = channel_div(n, m, budget="1x100", seed=0).value
    amort = channel_div_amortized(n, m, budget="1x100", seed=0).value
    assert plain - 1e-9 <= amort <= penalty_upper(n, m) + 1e-9


@settings(max_examples=10)
@given(seeds)
def test_classical_exact_matches_brute_force(seed):
    """Enumerate deterministic single-copy strategies with an independent loop."""
    rng = np.random.default_rng(seed)
    t1, t2 = (random_classical_superchannel(seed=rng) for _ in range(2))
    best = -math.inf
    for c in range(2):
        for f in itertools.product(range(2), repeat=2):
            p = [sum(t1.e[c, a, s] * t1.d[f[a], s, x] for s in range(2)) for a in range(2) for x in range(2)]
            q = [sum(t2.e[c, a, s] * t2.d[f[a], s, x] for s in range(2)) for a in range(2) for x in range(2)]
            best = max(best, _kl(p, q))
    assert classical_exact(t1, t2).value == pytest.approx(best, abs=1e-12)
    vals = classical_strategy_divergences(t1, t2, ["E1", "D1"])
    assert float(np.max(vals)) == pytest.approx(best, abs=1e-12)


def test_classical_joint_is_distribution(rng):
    t = random_classical_superchannel(seed=rng)
    j = classical_joint(t, 1, (0, 1))
    assert j.shape == (2, 2) and j.sum() == pytest.approx(1.0)


@settings(max_examples=5)
@given(seeds)
def test_adaptive_classical_strategies_obey_bound(seed):
    t1, t2 = (random_classical_superchannel(seed=seed + i) for i in range(2))
    rep = verify_classical_adaptive(t1, t2, 2)
    assert rep.passed, rep.details


def test_classical_flavors_collapse(rng):
    t1, t2 = (random_classical_superchannel(seed=rng) for _ in range(2))
    exact = classical_exact(t1, t2).value
    for fl in ("sup_sA", "sup_cA", "sup_A"):
        assert sup_div(t1, t2, fl, budget="2x200").value == pytest.approx(exact, abs=1e-6)


def test_replacer_sup_d_matches_channel_divergence():
    r1, r2 = random_channel(2, 2, seed=11), random_channel(2, 2, seed=12)
    got = sup_div(make_replacer(r1), make_replacer(r2), "sup_D", budget="3x300").value
    want = channel_div(r1, r2, budget="3x300").value
    assert got == pytest.approx(want, abs=2e-3)


def test_constant_replacer_flavors_below_state_divergence():
    t1, t2 = random_state(2, seed=4), random_state(2, seed=5)
    th1, th2 = (make_replacer(replacer_channel(t, 2)) for t in (t1, t2))
    _, chain = sup_div(th1, th2, "sup_A", budget="1x100", return_chain=True)
    bound = rel_entropy(t1, t2).value
    assert all(v <= bound + 1e-6 for v in chain.values())
    assert chain["sup_D"] == pytest.approx(bound, abs=1e-6)


def test_equal_superchannels_zero(rng):
    th = make_replacer(random_channel(2, 2, seed=rng))
    assert sup_div(th, th, "sup_tildeA").value == 0.0
    assert net_div(th, th).value == 0.0


@pytest.mark.slow
def test_flavor_chain_is_monotone():
    inst = random_env_instance(seed=2, w1=1, w2=2)
    rep = lemma_inequality_suite(*inst.pair, budget="1x60")
    assert rep.passed, rep.details


def test_net_div_one_slot_at_least_zero():
    inst = random_env_instance(seed=1)
    assert net_div(*inst.pair, "net_A", budget="1x40").value >= 0


def test_meta_converse_needs_certified_bound(rng):
    t1, t2 = diag_state([0.8, 0.2]), diag_state([0.3, 0.7])
    th1, th2 = (make_replacer(replacer_channel(t, 2)) for t in (t1, t2))
    s = random_descriptor("nested_adaptive", th1, 2, seed=rng, ref_dim=2)
    with pytest.raises(ValueError):
        verify_meta_converse(s, th1, th2, DivergenceEstimate(1.0, LOWER, 1e-3))
    rep = verify_meta_converse(s, th1, th2, rel_entropy(t1, t2))
    assert rep.passed
    # a bound that is too small must be caught
    assert not verify_meta_converse(s, th1, th2, DivergenceEstimate(0.0, UPPER, 1e-9)).passed


def test_constant_output_detection(rng):
    tau = random_state(2, seed=rng)
    assert np.allclose(constant_output(make_replacer(replacer_channel(tau, 2))), tau, atol=1e-10)
    assert constant_output(make_replacer(random_channel(2, 2, seed=rng))) is None


def test_chain_rule_replacer_and_classical(rng):
    th1, th2 = (make_replacer(replacer_channel(random_state(2, seed=rng), 2)) for _ in range(2))
    n, m = random_channel(2, 2, seed=rng), random_channel(2, 2, seed=rng)
    rep = chain_rule_check(th1, th2, n, m, random_state(2, seed=rng), random_state(2, seed=rng), 1,
                           0.05, 0.05, 0.05)
    assert rep.passed and rep.margin >= -1e-6
    c1, c2 = (random_classical_superchannel(seed=rng) for _ in range(2))
    n = classical_channel(np.array([[0.8, 0.2], [0.3, 0.7]]))
    m = classical_channel(np.array([[0.6, 0.4], [0.1, 0.9]]))
    rep = chain_rule_check(c1, c2, n, m, diag_state([0.5, 0.5]), diag_state([0.4, 0.6]), 1, 0.05, 0.05, 0.05)
    assert rep.passed


def test_chain_rule_rejects_uncertified_pairs(rng):
    th1, th2 = (make_replacer(random_channel(2, 2, seed=rng)) for _ in range(2))
    n = random_channel(2, 2, seed=rng)
    with pytest.raises(ValueError):
        chain_rule_check(th1, th2, n, n, np.eye(2) / 2, np.eye(2) / 2)


def test_report_json():
    rep = Report("x", True, math.inf, {"v": DivergenceEstimate(1.0)})
    assert '"margin": "inf"' in rep.to_json()
