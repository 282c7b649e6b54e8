import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinphase import oracle
from spinphase.errors import DimensionError, ValidationError
from spinphase.pauli import PauliPolynomial
from spinphase.sw import state_library


def test_zero_state_matrix():
    rho = oracle.density_from_poly(PauliPolynomial.from_labels({"I": 1, "Z": 1}))
    np.testing.assert_allclose(rho, np.diag([1, 0]), atol=1e-15)


def test_bell_projector():
    rho = oracle.density_from_poly(state_library("bell:phi+").coeffs)
    v = np.array([1, 0, 0, 1]) / np.sqrt(2)
    np.testing.assert_allclose(rho, np.outer(v, v), atol=1e-15)


@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_roundtrip(n, seed):
    p = oracle.random_hermitian_poly(n, seed)
    assert oracle.expansion_from_matrix(oracle.operator_matrix(p)).allclose(p, 1e-12)


def test_density_validation():
    with pytest.raises(ValidationError):
        oracle.density_from_poly(PauliPolynomial.from_labels({"I": 1, "Z": 2}), check_state=True)
    with pytest.raises(DimensionError):
        oracle.operator_matrix(PauliPolynomial.identity(oracle.MAX_QUBITS + 1))


def test_precession_oracle():
    rho0 = oracle.density_from_poly(state_library("plus").coeffs)
    H = PauliPolynomial.from_labels({"Z": 1})
    _, rhos = oracle.evolve_oracle(rho0, H, kind="unitary", t=np.pi / 4)
    x = oracle.expectation_oracle(rhos[-1], PauliPolynomial.from_labels({"X": 1}))
    assert abs(x) < 1e-10


def test_gamma_zero_is_von_neumann():
    rng = np.random.default_rng(1)
    rho0 = oracle.random_density(2, rng=rng)
    H = oracle.random_hermitian_poly(2, rng)
    L = [oracle.random_hermitian_poly(2, rng)]
    _, a = oracle.evolve_oracle(rho0, H, L, 0.0, "lindblad", t=0.5)
    _, b = oracle.evolve_oracle(rho0, H, kind="unitary", t=0.5)
    np.testing.assert_allclose(a[-1], b[-1], atol=1e-12)


def test_dephasing_decay():
    g, t = 0.4, 1.0
    rho0 = oracle.density_from_poly(state_library("plus").coeffs)
    Z = PauliPolynomial.from_labels({"Z": 1})
    _, rhos = oracle.evolve_oracle(rho0, PauliPolynomial.zero(1), [Z], g, "lindblad", t=t, dt=1e-3)
    assert abs(rhos[-1][0, 1] - 0.5 * np.exp(-2 * g * t)) < 1e-10


def test_partial_trace_examples():
    bell = oracle.density_from_poly(state_library("bell:phi+").coeffs)
    np.testing.assert_allclose(oracle.partial_trace(bell, [1]), np.eye(2) / 2, atol=1e-15)
    a = oracle.random_density(1, rng=np.random.default_rng(3))
    b = oracle.random_density(1, rng=np.random.default_rng(4))
    np.testing.assert_allclose(oracle.partial_trace(np.kron(a, b), [1]), a, atol=1e-14)
    ghz = oracle.density_from_poly(state_library("ghz").coeffs)
    red = oracle.partial_trace(ghz, [2])
    np.testing.assert_allclose(red, np.diag([0.5, 0, 0, 0.5]), atol=1e-15)


def test_purify_pure_and_mixed():
    psi0 = np.array([0.6, 0.8j])
    psi, n_anc = oracle.purify(oracle.pure_density(psi0))
    assert n_anc == 1
    assert abs(abs(np.vdot(np.kron(psi0, [1, 0]), psi)) - 1) < 1e-12
    psi, _ = oracle.purify(np.eye(2) / 2)
    # any purification of I/2 is maximally entangled: both marginals are I/2
    rho = oracle.pure_density(psi)
    np.testing.assert_allclose(oracle.partial_trace(rho, [1]), np.eye(2) / 2, atol=1e-12)
    np.testing.assert_allclose(oracle.partial_trace(rho, [0]), np.eye(2) / 2, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_purify_roundtrip(seed):
    rho = oracle.random_density(2, rng=seed)
    psi, n_anc = oracle.purify(rho)
    red = oracle.partial_trace(oracle.pure_density(psi), range(2, 2 + n_anc))
    assert np.abs(red - rho).max() < 1e-10


def test_born_sample_bell():
    bell = oracle.density_from_poly(state_library("bell:phi+").coeffs)
    shots = oracle.born_sample(bell, 0, 10_000)
    assert all(s in ("00", "11") for s in shots)
    k = shots.count("00")
    assert abs(k - 5000) < 3 * 50


def test_rank_and_fixed_points():
    assert oracle.rank_oracle(oracle.pure_density([1, 1j])) == 1
    rho = oracle.random_density(2, rng=np.random.default_rng(9))
    assert oracle.star_fixed_point_dim(rho) == 0
    bell = oracle.density_from_poly(state_library("bell:phi+").coeffs)
    assert oracle.star_fixed_point_dim(bell) == 4
