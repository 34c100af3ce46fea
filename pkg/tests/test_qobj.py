import numpy as np
import pytest
from hypothesis import given, strategies as st

from netdisc import linalg as la
from netdisc.qobj import (Channel, ClassicalSuperchannel, Superchannel, channel_basis, choi_of, classical_apply,
                          classical_channel, comb_apply, comb_choi, compose, depolarizing, embed_classical,
                          identity_channel, kraus_of, maximally_mixed, random_channel,
                          random_classical_superchannel, random_state, replacer_channel, superchannels_equal,
                          tensor)

from conftest import seeds


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_random_channel_is_cptp(seed, d_in, d_out):
    ch = random_channel(d_in, d_out, seed=seed)
    assert np.linalg.eigvalsh(ch.choi).min() > -1e-10
    assert np.allclose(la.partial_trace(ch.choi, [d_in, d_out], [0]), np.eye(d_in), atol=1e-10)


@given(seeds)
def test_kraus_round_trip(seed):
    ch = random_channel(2, 3, seed=seed)
    again = choi_of(kraus_of(ch))
    assert np.allclose(again.choi, ch.choi, atol=1e-10)


@given(seeds)
def test_compose_matches_sequential_application(seed):
    rng = np.random.default_rng(seed)
    n, m = random_channel(2, 3, seed=rng), random_channel(3, 2, seed=rng)
    rho = random_state(2, seed=rng)
    assert np.allclose(compose(m, n)(rho), m(n(rho)), atol=1e-12)


@given(seeds)
def test_tensor_acts_factorwise(seed):
    rng = np.random.default_rng(seed)
    n, m = random_channel(2, 2, seed=rng), random_channel(3, 2, seed=rng)
    a, b = random_state(2, seed=rng), random_state(3, seed=rng)
    assert np.allclose(tensor(n, m)(la.kron(a, b)), la.kron(n(a), m(b)), atol=1e-12)


def test_invalid_choi_rejected():
    with pytest.raises(ValueError):
        Channel(np.eye(4) * 2, 2, 2)
    with pytest.raises(ValueError):
        Channel(np.diag([1.0, -0.5, 0.5, 1.0]), 2, 2)


def test_choi_convention_input_first():
    # replacer of |0><0|: J = 1 x |0><0|
    ch = replacer_channel(np.diag([1.0, 0.0]), 2)
    assert np.allclose(ch.choi, np.kron(np.eye(2), np.diag([1.0, 0.0])))


def test_channel_basis_spans_choi_space():
    basis = channel_basis(2, 2)
    assert len(basis) == 13
    vecs = np.array([b.choi.reshape(-1) for b in basis])
    assert np.linalg.matrix_rank(vecs, tol=1e-8) == 13


def _identity_superchannel(d=2):
    # E = id on C = A (S trivial), D = id
    return Superchannel(identity_channel(d), identity_channel(d), d, 1)


@given(seeds)
def test_identity_superchannel_returns_input(seed):
    n = random_channel(2, 2, seed=seed)
    out = _identity_superchannel()(n)
    assert np.allclose(out.choi, n.choi, atol=1e-12)


@given(seeds)
def test_comb_apply_threads_reference(seed):
    rng = np.random.default_rng(seed)
    theta = Superchannel(random_channel(2, 4, seed=rng), random_channel(4, 2, seed=rng), 2, 2)
    n = random_channel(2, 2, seed=rng)
    with_ref = comb_apply(theta, [tensor(n, identity_channel(2))], 2)
    assert np.allclose(with_ref.choi, tensor(theta(n), identity_channel(2)).choi, atol=1e-10)


@given(seeds)
def test_superchannel_output_is_channel(seed):
    rng = np.random.default_rng(seed)
    theta = Superchannel(random_channel(2, 4, seed=rng), random_channel(4, 3, seed=rng), 2, 2)
    out = theta(random_channel(2, 2, seed=rng))
    Channel(out.choi, out.dim_in, out.dim_out)


def test_comb_choi_pairing_matches_link_product(rng):
    # tr[J_theta (J_N^T x 1)] style check through equality of actions
    theta = Superchannel(random_channel(2, 4, seed=rng), random_channel(4, 2, seed=rng), 2, 2)
    twin = Superchannel(theta.E, theta.D, 2, 2)
    assert superchannels_equal(theta, twin)
    other = Superchannel(theta.E, random_channel(4, 2, seed=rng), 2, 2)
    assert not superchannels_equal(theta, other)
    assert comb_choi(theta).shape == (16, 16)


def test_superchannel_dims_validated():
    with pytest.raises(ValueError):
        Superchannel(identity_channel(2), identity_channel(2), 3, 1)


@given(seeds)
def test_classical_embedding_matches_transfer(seed):
    rng = np.random.default_rng(seed)
    th = random_classical_superchannel(2, 2, 2, 2, 2, seed=rng)
    n = rng.dirichlet(np.ones(2), size=2)
    p = rng.dirichlet(np.ones(2))
    want = classical_apply(th, n, p)
    got = embed_classical(th)(classical_channel(n))(np.diag(p))
    assert np.allclose(np.diag(got).real, want, atol=1e-12)
    assert np.allclose(got, np.diag(np.diag(got)), atol=1e-12)


def test_classical_superchannel_validation():
    with pytest.raises(ValueError):
        ClassicalSuperchannel(np.ones((2, 2, 2)), np.ones((2, 2, 2)) / 2)


def test_depolarizing_fixed_point():
    assert np.allclose(depolarizing(2, 0.7)(maximally_mixed(2)), maximally_mixed(2))


def test_json_round_trip(rng):
    theta = Superchannel(random_channel(2, 4, seed=rng), random_channel(4, 2, seed=rng), 2, 2)
    back = Superchannel.from_json(theta.to_json())
    assert superchannels_equal(theta, back, 1e-12)
    ch = random_channel(2, 3, seed=rng)
    assert np.array_equal(Channel.from_json(ch.to_json()).choi, ch.choi)
