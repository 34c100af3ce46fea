import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from netdisc import linalg as la
from netdisc.qobj import random_state, random_unitary

from conftest import dims, seeds


def test_logm2_matches_scipy_on_full_rank(rng):
    rho = random_state(3, seed=rng) + 0.1 * np.eye(3)
    want = scipy.linalg.logm(rho) / np.log(2)
    assert np.allclose(la.logm2(rho), want, atol=1e-10)


def test_log_acts_on_support_only():
    m = np.diag([0.5, 0.5, 0.0])
    out = la.logm2(m)
    assert np.allclose(out, np.diag([-1.0, -1.0, 0.0]))


def test_tiny_negative_eigenvalues_are_clipped():
    m = np.diag([1.0, -1e-12])
    assert np.all(la.eigvals_psd(m) >= 0)
    with pytest.raises(la.NotPSDError):
        la.eigvals_psd(np.diag([1.0, -1e-6]))


def test_non_hermitian_rejected():
    with pytest.raises(la.NotHermitianError):
        la.check_hermitian(np.array([[0, 1], [0, 0]]))


@given(seeds, dims, dims)
def test_partial_trace_of_product(seed, d1, d2):
    rng = np.random.default_rng(seed)
    a, b = random_state(d1, seed=rng), random_state(d2, seed=rng)
    ab = la.kron(a, b)
    assert np.allclose(la.partial_trace(ab, [d1, d2], [0]), a, atol=1e-12)
    assert np.allclose(la.partial_trace(ab, [d1, d2], [1]), b, atol=1e-12)


@given(seeds, dims, dims)
def test_permute_swaps_factors(seed, d1, d2):
    rng = np.random.default_rng(seed)
    a, b = random_state(d1, seed=rng), random_state(d2, seed=rng)
    out = la.permute_systems(la.kron(a, b), [d1, d2], [1, 0])
    assert np.allclose(out, la.kron(b, a), atol=1e-12)


@given(seeds, st.integers(2, 4))
def test_trace_norm_unitarily_invariant(seed, d):
    rng = np.random.default_rng(seed)
    m = random_state(d, seed=rng) - random_state(d, seed=rng)
    u = random_unitary(d, seed=rng)
    assert la.trace_norm(u @ m @ u.conj().T) == pytest.approx(la.trace_norm(m), abs=1e-10)


@given(seeds, st.integers(2, 4))
def test_fidelity_bounds_and_symmetry(seed, d):
    rng = np.random.default_rng(seed)
    a, b = random_state(d, seed=rng), random_state(d, seed=rng)
    f = la.fidelity(a, b)
    assert 0 <= f <= 1
    assert f == pytest.approx(la.fidelity(b, a), abs=1e-8)
    assert la.fidelity(a, a) == pytest.approx(1.0, abs=1e-8)


def test_fidelity_pure_states():
    psi = np.array([1, 0], dtype=complex)
    phi = np.array([1, 1], dtype=complex) / np.sqrt(2)
    assert la.fidelity(la.proj(psi), la.proj(phi)) == pytest.approx(0.5, abs=1e-12)


def test_generalized_fidelity_subnormalized():
    # (sqrt(.25) + sqrt(.5 * .5))^2 = 1 for rho = sigma = diag(.5, 0)
    m = np.diag([0.5, 0.0])
    assert la.fidelity(m, m) == pytest.approx(1.0, abs=1e-12)
    assert la.purified_distance(m, m) == pytest.approx(0.0, abs=1e-6)


def test_operator_json_round_trip(rng):
    op = la.Operator(random_state(4, seed=rng), (2, 2))
    back = la.Operator.from_json(op.to_json())
    assert back.dims == (2, 2)
    assert np.array_equal(back.data, op.data)
