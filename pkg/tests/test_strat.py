import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netdisc.qobj import (Superchannel, diag_state, random_channel, random_state, replacer_channel)
from netdisc.sdp import helstrom_closed_form
from netdisc.strat import (CLASSES, PARALLEL, Budget, DiscriminationResult, StrategyDescriptor, all_words,
                           build_outputs, check_word, embed_in_general, embed_parallel_full,
                           embed_parallel_in_nested, embed_product, errors_of, H_hat, nested_word,
                           optimize_strategy, random_descriptor, results_csv, run_nested, run_word,
                           successive_word, xi_hat, zeta_hat)
from netdisc.zoo import make_replacer

from conftest import seeds


def _theta(rng, c=2, a=2, s=2, b=2, d=2):
    return Superchannel(random_channel(c, a * s, seed=rng), random_channel(b * s, d, seed=rng), a, s, b)


def test_words():
    assert nested_word(2) == ["E1", "E2", "D2", "D1"]
    assert successive_word(2) == ["E1", "D1", "E2", "D2"]
    # copies are labeled by their first E use
    assert all_words(2) == [["E1", "E2", "D1", "D2"], ["E1", "E2", "D2", "D1"], ["E1", "D1", "E2", "D2"]]
    assert len(all_words(3)) == 15
    with pytest.raises(ValueError):
        check_word(["D1", "E1"], 1)
    with pytest.raises(ValueError):
        check_word(["E1", "E2", "D1"], 2)


@given(seeds, st.sampled_from(CLASSES))
def test_outputs_are_states(seed, cls):
    rng = np.random.default_rng(seed)
    theta1, theta2 = _theta(rng), _theta(rng)
    s = random_descriptor(cls, theta1, 2, seed=rng, ref_dim=2)
    for rho in build_outputs(s, theta1, theta2):
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.eigvalsh(rho).min() > -1e-10


@settings(max_examples=10)
@given(seeds, st.sampled_from(CLASSES))
def test_equal_superchannels_give_equal_outputs(seed, cls):
    rng = np.random.default_rng(seed)
    theta = _theta(rng)
    r1, r2 = build_outputs(random_descriptor(cls, theta, 2, seed=rng, ref_dim=2), theta, theta)
    assert np.allclose(r1, r2, atol=1e-12)
    res = errors_of((r1, r2), prior=0.5)
    assert res.p_err == pytest.approx(0.5, abs=1e-7)


@settings(max_examples=10)
@given(seeds)
def test_single_copy_classes_coincide(seed):
    rng = np.random.default_rng(seed)
    theta1, theta2 = _theta(rng), _theta(rng)
    s = random_descriptor("product", theta1, 1, seed=rng, ref_dim=2)
    rho, n = s.states[0], s.channels[0]
    want = build_outputs(s, theta1, theta2)
    for cls in CLASSES[1:]:
        chans = (n,)
        order = ("E1", "D1") if cls == "general_adaptive" else ()
        other = StrategyDescriptor(cls, 1, 2, (rho,), chans, order)
        got = build_outputs(other, theta1, theta2)
        assert np.allclose(got[0], want[0], atol=1e-10) and np.allclose(got[1], want[1], atol=1e-10)


@settings(max_examples=10)
@given(seeds, st.sampled_from(["parallel_prod_channels", "parallel_prod_states", "parallel_full"]))
def test_product_embedding(seed, target):
    rng = np.random.default_rng(seed)
    theta1, theta2 = _theta(rng), _theta(rng)
    s = random_descriptor("product", theta1, 2, seed=rng, ref_dim=2)
    a, b = build_outputs(s, theta1, theta2), build_outputs(embed_product(s, target), theta1, theta2)
    assert np.max(np.abs(a[0] - b[0])) < 1e-10 and np.max(np.abs(a[1] - b[1])) < 1e-10


@settings(max_examples=6)
@given(seeds, st.sampled_from(PARALLEL))
def test_parallel_embeds_in_nested(seed, cls):
    rng = np.random.default_rng(seed)
    theta = _theta(rng, s=1)
    s = random_descriptor(cls, theta, 2, seed=rng, ref_dim=1)
    nested, post = embed_parallel_in_nested(s, theta)
    out_par = build_outputs(embed_parallel_full(s), theta, theta)[0]
    out_nest = build_outputs(nested, theta, theta)[0]
    assert np.max(np.abs(post(out_par) - out_nest)) < 1e-10


@settings(max_examples=6)
@given(seeds)
def test_nested_engine_matches_word_engine(seed):
    """Two independent routes: recursive composition vs the general word simulator."""
    rng = np.random.default_rng(seed)
    theta = _theta(rng)
    s = random_descriptor("nested_adaptive", theta, 2, seed=rng, ref_dim=2)
    g = embed_in_general(s)
    assert g.order == tuple(nested_word(2))
    a = run_nested(theta, s.states[0], s.channels)
    b = run_word(theta, g.word, g.states[0], g.channels, 2)
    assert np.max(np.abs(a - b)) < 1e-10


def test_successive_embeds_in_general(rng):
    theta1, theta2 = _theta(rng), _theta(rng)
    s = random_descriptor("successive_adaptive", theta1, 2, seed=rng, ref_dim=2)
    a = build_outputs(s, theta1, theta2)
    b = build_outputs(embed_in_general(s), theta1, theta2)
    assert np.allclose(a[0], b[0], atol=1e-10) and np.allclose(a[1], b[1], atol=1e-10)


def test_descriptor_validation(rng):
    theta = _theta(rng)
    s = random_descriptor("nested_adaptive", theta, 2, seed=rng, ref_dim=2)
    with pytest.raises(ValueError):
        StrategyDescriptor("nested_adaptive", 2, 2, s.states, s.channels[:2])
    with pytest.raises(ValueError):
        StrategyDescriptor("teleport", 1, 1, s.states, s.channels[:1])
    with pytest.raises(ValueError):
        StrategyDescriptor("product", 1, 2, (np.eye(4),), s.channels[:1])


def test_descriptor_json_round_trip(rng):
    theta = _theta(rng)
    s = random_descriptor("general_adaptive", theta, 2, seed=rng, ref_dim=2, order=["E1", "E2", "D1", "D2"])
    back = StrategyDescriptor.from_json(s.to_json())
    assert back.order == s.order
    a, b = build_outputs(s, theta, theta)[0], build_outputs(back, theta, theta)[0]
    assert np.array_equal(a, b)


def test_errors_of_settings():
    r1, r2 = diag_state([0.9, 0.1]), diag_state([0.6, 0.4])
    stein = errors_of((r1, r2), eps=0.1)
    assert stein.alpha <= 0.1 + 1e-9 and stein.beta == pytest.approx(0.6, abs=1e-9)
    bayes = errors_of((r1, r2), prior=0.5)
    assert bayes.p_err == pytest.approx(helstrom_closed_form(0.5, r1, r2), abs=1e-7)
    with pytest.raises(ValueError):
        errors_of((r1, r2), eps=0.1, prior=0.5)


def test_optimizer_reaches_helstrom_on_replacers():
    t1, t2 = diag_state([0.9, 0.1]), random_state(2, seed=3)
    th1, th2 = (make_replacer(replacer_channel(t, 2)) for t in (t1, t2))
    _, res = optimize_strategy("product", th1, th2, 1, "2x150", seed=1)
    assert res.kind == "lower-bound"
    assert res.p_err == pytest.approx(helstrom_closed_form(0.5, t1, t2), abs=1e-6)


def test_optimizer_never_worse_than_init(rng):
    theta1, theta2 = _theta(rng), _theta(rng)
    seed_s = random_descriptor("product", theta1, 1, seed=rng, ref_dim=2)
    base = errors_of(build_outputs(seed_s, theta1, theta2), prior=0.5)
    _, res = optimize_strategy("product", theta1, theta2, 1, "1x5", seed=0, ref_dim=2, init=[seed_s])
    assert res.p_err <= base.p_err + 1e-9


def test_optimizer_is_deterministic(rng):
    theta1, theta2 = _theta(rng), _theta(rng)
    a = optimize_strategy("product", theta1, theta2, 1, "2x30", seed=7)[1]
    b = optimize_strategy("product", theta1, theta2, 1, "2x30", seed=7)[1]
    assert (a.alpha, a.beta) == (b.alpha, b.beta)


def _res(n, alpha, beta):
    return DiscriminationResult(alpha, beta, np.eye(1), np.eye(1), np.eye(1), n)


def test_rate_curves():
    res = [_res(1, 0.1, 0.5), _res(2, 0.1, 0.0)]
    z = zeta_hat(res)
    assert z.values[0] == pytest.approx(1.0) and z.flags[1] == "zero-error"
    x = xi_hat(0.5, res)
    assert x.values[0] == pytest.approx(-math.log2(0.3))
    h = H_hat(0.5, [_res(1, 0.5, 0.9), _res(2, 0.75, 0.25)])
    assert math.isnan(h.values[0]) and h.flags[0] == "beta-constraint-violated"
    assert h.values[1] == pytest.approx(1.0)
    assert results_csv(res).splitlines()[0] == "n,alpha,beta,rate"


def test_budget_parse():
    assert Budget.parse("3x40") == Budget(3, 40)
    assert Budget.parse(50) == Budget(1, 50)
    assert Budget.parse(None) == Budget()
