import numpy as np
import pytest
from hypothesis import given, settings

from netdisc.amort import channel_div
from netdisc.dvg import EXACT, rel_entropy
from netdisc.qobj import (classical_channel, depolarizing, diag_state, identity_channel, random_channel,
                          random_classical_superchannel, random_state, random_unitary, replacer_channel,
                          superchannels_equal)
from netdisc.zoo import (FamilyInstance, amortized_channel_bound, check_env_bound, check_seizable, check_trivial_S,
                         illumination_case, make_env_param, make_env_seizable, make_replacer, make_side_param,
                         make_side_seizable, make_trivial_s, random_env_instance, replacer_pair, replacer_target)

from conftest import seeds


@settings(max_examples=8)
@given(seeds)
def test_family_identities_hold(seed):
    rng = np.random.default_rng(seed)
    insts = [
        replacer_pair(random_channel(2, 2, seed=rng), random_channel(2, 2, seed=rng)),
        random_env_instance(seed=rng),
        make_side_param(random_channel(2, 4, seed=rng), random_channel(4, 2, seed=rng),
                        random_channel(2, 2, seed=rng), random_channel(2, 2, seed=rng), 2, 2),
        make_trivial_s(*(random_channel(2, 2, seed=rng) for _ in range(4))),
    ]
    for inst in insts:
        assert inst.check_identity().passed, inst.family


def test_identity_negative_control(rng):
    inst = random_env_instance(seed=rng)
    # pair the first superchannel with an unrelated one, keep the decomposition
    other = random_env_instance(seed=rng).pair[1]
    bad = FamilyInstance(inst.family, (inst.pair[0], other), inst.params, inst.direct)
    rep = bad.check_identity()
    assert not rep.passed and rep.details["residual"] > 1e-3


def test_unknown_family_rejected():
    with pytest.raises(ValueError):
        FamilyInstance("nope", ())


def test_equal_parameters_give_equal_superchannels(rng):
    om = random_state(4, seed=rng)
    p_e, p_d = random_channel(4, 2, seed=rng), random_channel(4, 2, seed=rng)
    inst = make_env_param(p_e, p_d, om, om, 2, 1, 2, 2)
    assert superchannels_equal(*inst.pair)
    s = random_channel(2, 2, seed=rng)
    inst = make_side_param(random_channel(2, 4, seed=rng), random_channel(4, 2, seed=rng), s, s, 2, 2)
    assert superchannels_equal(*inst.pair)


def test_dimension_mismatch_rejected(rng):
    with pytest.raises(ValueError):
        make_env_param(random_channel(4, 2, seed=rng), random_channel(4, 2, seed=rng),
                       random_state(4, seed=rng), random_state(2, seed=rng), 2, 1, 2, 2)
    with pytest.raises(ValueError):
        make_side_param(random_channel(2, 4, seed=rng), random_channel(4, 2, seed=rng),
                        random_channel(2, 3, seed=rng), random_channel(2, 2, seed=rng), 2, 2)


def test_replacer_target_detection(rng):
    tau = random_state(2, seed=rng)
    assert np.allclose(replacer_target(replacer_channel(tau, 3)), tau)
    assert replacer_target(depolarizing(2, 0.3)) is None


def test_amortized_channel_bound_kinds(rng):
    t1, t2 = random_state(2, seed=rng), random_state(2, seed=rng)
    est = amortized_channel_bound(replacer_channel(t1, 2), replacer_channel(t2, 2))
    assert est.kind == EXACT and est.value == pytest.approx(rel_entropy(t1, t2).value)
    n = random_channel(2, 2, seed=rng)
    assert amortized_channel_bound(n, n).value == 0.0
    c1 = classical_channel(np.array([[0.9, 0.1], [0.2, 0.8]]))
    c2 = classical_channel(np.array([[0.5, 0.5], [0.5, 0.5]]))
    assert amortized_channel_bound(c1, c2).kind == EXACT


@settings(max_examples=4)
@given(seeds)
def test_env_bound_on_sampled_strategies(seed):
    inst = random_env_instance(seed=seed)
    rep = check_env_bound(inst, n=2, count=8, seed=seed)
    assert rep.passed, rep.details


def test_env_seizable_matches_closed_form(rng):
    u = random_unitary(4, seed=rng)
    inst, psi = make_env_seizable(random_state(4, seed=rng), random_state(4, seed=rng), 2, 2, u=u)
    assert inst.check_identity().passed
    rep = check_seizable(inst, psi, budget="2x150")
    assert rep.passed, rep.details


def test_side_seizable_matches_channel_divergence(rng):
    s1, s2 = random_channel(2, 2, seed=rng), depolarizing(2, 0.4)
    inst, psi = make_side_seizable(s1, s2, u=random_unitary(2, seed=rng))
    rep = check_seizable(inst, psi, budget="2x150")
    assert rep.passed, rep.details
    assert rep.details["channel_div"] == pytest.approx(channel_div(s1, s2, budget="2x150").value, abs=1e-6)


def test_seizable_wrong_psi_fails(rng):
    inst, _ = make_env_seizable(random_state(4, seed=rng), random_state(4, seed=rng), 2, 2,
                                u=random_unitary(4, seed=rng))
    rep = check_seizable(inst, lambda th: th(identity_channel(th.a[0]), 1))
    assert not rep.passed and rep.details["residual"] > 1e-6


def test_trivial_s_classical_is_tight(rng):
    def rand_cc(n, m):
        return classical_channel(rng.dirichlet(np.ones(m), size=n))
    inst = make_trivial_s(rand_cc(2, 2), rand_cc(2, 2), rand_cc(2, 2), rand_cc(2, 2))
    rep = check_trivial_S(inst, n=1, count=6)
    assert rep.passed and rep.details["certified_exact"]
    assert rep.details["enumerated_max"] <= rep.details["bound"] + 1e-9


def test_trivial_s_equal_components_zero_bound(rng):
    e, d = random_channel(2, 2, seed=rng), random_channel(2, 2, seed=rng)
    rep = check_trivial_S(make_trivial_s(e, e, d, d), n=2, count=6)
    assert rep.passed and rep.details["bound"] == 0.0 and rep.details["max_lhs"] <= 1e-9


def test_trivial_s_needs_trivial_side(rng):
    inst = random_env_instance(seed=rng)
    with pytest.raises(ValueError):
        check_trivial_S(inst)


def test_illumination_equal_pair():
    tau = diag_state([0.7, 0.3])
    rep = illumination_case(make_replacer(replacer_channel(tau, 2)), tau)
    assert rep.passed and rep.details["sup_D"] == 0.0


def test_illumination_replacer_and_classical(rng):
    r = random_channel(2, 2, seed=rng)
    rep = illumination_case(make_replacer(r), random_state(2, seed=rng), n_values=(1, 2), count=4, budget="2x150")
    assert rep.passed, rep.details
    t1 = random_classical_superchannel(seed=rng)
    rep = illumination_case(t1, diag_state([0.6, 0.4]), n_values=(1, 2, 3), count=4)
    assert rep.passed, rep.details


def test_instance_json_roundtrip_keys(rng):
    js = random_env_instance(seed=rng).to_json()
    assert js["family"] == "env_param" and len(js["pair"]) == 2 and "omega1" in js["params"]
