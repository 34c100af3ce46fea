import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netdisc import linalg as la
from netdisc.qobj import (depolarizing, identity_channel, random_channel, random_state, unitary_channel)
from netdisc.sdp import (SdpProblem, channel_min_error, comb_discrimination, diamond_norm, dh_epsilon,
                         dh_epsilon_classical, dh_epsilon_iid, dmax, dmax_channel, dmax_smooth,
                         helstrom_closed_form, hypothesis_test, min_error)

from conftest import seeds, well_conditioned
from oracles import cvx_hypothesis_test, cvx_min_error, lp_beta_iid


@given(seeds, st.integers(2, 4), st.floats(0.05, 0.95))
def test_min_error_matches_helstrom(seed, d, p):
    rng = np.random.default_rng(seed)
    a, b = random_state(d, seed=rng), random_state(d, seed=rng)
    val, q = min_error(p, a, b)
    assert val == pytest.approx(helstrom_closed_form(p, a, b), abs=1e-7)
    w = np.linalg.eigvalsh(q)
    assert w.min() > -1e-7 and w.max() < 1 + 1e-7


@settings(max_examples=10)
@given(seeds, st.integers(2, 3), st.sampled_from([0.05, 0.2, 0.5]))
def test_hypothesis_test_against_cvxopt(seed, d, eps):
    rng = np.random.default_rng(seed)
    a, b = random_state(d, seed=rng), random_state(d, seed=rng)
    beta, q = hypothesis_test(a, b, eps)
    assert beta == pytest.approx(cvx_hypothesis_test(a, b, eps), abs=1e-6)
    assert np.trace(q @ a).real >= 1 - eps - 1e-7


@settings(max_examples=10)
@given(seeds, st.floats(0.1, 0.9))
def test_min_error_against_cvxopt(seed, p):
    rng = np.random.default_rng(seed)
    a, b = random_state(3, seed=rng), random_state(3, seed=rng)
    assert min_error(p, a, b)[0] == pytest.approx(cvx_min_error(p, a, b), abs=1e-7)


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.5])
def test_dh_identical_states(eps, rng):
    rho = random_state(3, seed=rng)
    assert dh_epsilon(rho, rho, eps) == pytest.approx(-math.log2(1 - eps), abs=1e-6)


def test_commuting_states_use_exact_neyman_pearson():
    p, q = np.array([0.9, 0.1]), np.array([0.6, 0.4])
    beta, _ = hypothesis_test(np.diag(p), np.diag(q), 0.1)
    assert beta == pytest.approx(0.6, abs=1e-14)
    # eps = 0.05: all of outcome 0 and half of outcome 1
    assert dh_epsilon_classical(p, q, 0.05) == pytest.approx(-math.log2(0.8), abs=1e-14)


@pytest.mark.parametrize("n", [1, 2, 5, 8])
@pytest.mark.parametrize("eps", [0.1, 0.3])
def test_dh_iid_matches_plain_lp(n, eps):
    p, q = [0.9, 0.1], [0.6, 0.4]
    beta = lp_beta_iid(p, q, eps, n)
    assert dh_epsilon_iid(p, q, eps, n) == pytest.approx(-math.log2(beta), abs=1e-9)


def test_dh_iid_three_letters():
    p, q = [0.5, 0.3, 0.2], [0.2, 0.3, 0.5]
    assert dh_epsilon_iid(p, q, 0.2, 4) == pytest.approx(-math.log2(lp_beta_iid(p, q, 0.2, 4)), abs=1e-9)


def test_bad_epsilon_rejected():
    with pytest.raises(ValueError):
        dh_epsilon(np.eye(2) / 2, np.eye(2) / 2, 1.0)
    with pytest.raises(ValueError):
        min_error(1.2, np.eye(2) / 2, np.eye(2) / 2)


def test_diamond_norm_orthogonal_unitaries():
    x = unitary_channel(la.PAULI_X)
    assert diamond_norm(x, identity_channel(2)) == pytest.approx(2.0, abs=1e-6)
    assert diamond_norm(x, x) == 0.0


def test_diamond_norm_depolarizing_pair():
    # for depolarizing channels the maximally entangled input is optimal
    n, m = depolarizing(2, 0.2), depolarizing(2, 0.6)
    want = la.trace_norm(n.choi / 2 - m.choi / 2)
    assert diamond_norm(n, m) == pytest.approx(want, abs=1e-6)


@settings(max_examples=8)
@given(seeds)
def test_channel_min_error_is_diamond(seed):
    rng = np.random.default_rng(seed)
    n, m = random_channel(2, 2, seed=rng), random_channel(2, 2, seed=rng)
    err, _ = channel_min_error(0.5, n, m)
    assert err == pytest.approx(0.5 * (1 - 0.5 * diamond_norm(n, m)), abs=1e-6)


@settings(max_examples=5)
@given(seeds)
def test_replacer_comb_discrimination(seed):
    from netdisc.zoo import make_replacer

    rng = np.random.default_rng(seed)
    r1, r2 = random_channel(2, 2, seed=rng), random_channel(2, 2, seed=rng)
    err, tester = comb_discrimination(make_replacer(r1), make_replacer(r2))
    assert err == pytest.approx(channel_min_error(0.5, r1, r2)[0], abs=1e-5)
    assert max(tester.residuals().values()) < 1e-6


def test_dmax_closed_form():
    assert dmax(np.diag([0.5, 0.5]), np.diag([0.25, 0.75])) == pytest.approx(1.0)
    assert dmax(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == math.inf
    rho = random_state(3, seed=1)
    assert dmax(rho, rho) == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=10)
@given(seeds, st.floats(0.01, 0.3))
def test_dmax_smooth_below_dmax(seed, eps):
    rng = np.random.default_rng(seed)
    rho, sigma = random_state(2, seed=rng), well_conditioned(2, rng)
    smooth, state = dmax_smooth(rho, sigma, eps, return_state=True)
    assert smooth <= dmax(rho, sigma) + 1e-6
    assert la.purified_distance(state, rho) <= eps + 1e-6


def test_dmax_channel_is_choi_dmax():
    n, m = depolarizing(2, 0.3), depolarizing(2, 0.8)
    assert dmax_channel(n, m) == pytest.approx(dmax(n.choi / 2, m.choi / 2), abs=1e-12)


def test_infeasible_problem_reports_failure():
    prob = SdpProblem("min")
    x = prob.herm(1, "x")
    prob.objective([(x, np.eye(1))])
    prob.ge([(x, np.eye(1))], 1.0, "x>=1")
    prob.mat_le([(x, lambda v: v)], np.zeros((1, 1)), "x<=0")
    sol = prob.solve()
    assert sol.status != "optimal"
