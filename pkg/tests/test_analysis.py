import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinphase import oracle
from spinphase.analysis import (
    MarginalSpec,
    diagnostic_report,
    dilation_check,
    marginalize,
    physicality_residual,
    product_test,
    purity_coefficients,
    purity_integral,
    purity_phase,
    rank_report,
    wehrl_entropy,
)
from spinphase.brackets import GridFunction
from spinphase.errors import DimensionError, UnsupportedRepresentationError, ValidationError
from spinphase.estimation import McConfig
from spinphase.harmonics import real_sph_harm
from spinphase.pauli import PauliPolynomial
from spinphase.sw import PhaseSpaceFunction, evaluate, state_function, state_library


def from_rho(rho, s=-1.0):
    return state_function(oracle.poly_from_density(rho).real(), s)


def test_bell_marginal_is_maximally_mixed():
    m = marginalize(state_library("bell:phi+"), [1])
    assert m.coeffs.allclose(PauliPolynomial.identity(1))
    assert abs(evaluate(m, [0.4], [1.0]) - 1 / (4 * np.pi)) < 1e-15


def test_product_marginal_factor():
    m = marginalize(state_library("product:+0"), MarginalSpec(2, (0,)))
    assert m.coeffs.allclose(state_library("plus").coeffs)


@pytest.mark.parametrize("keep", [(0, 1), (0, 2), (1, 2), (0,), (2,)])
def test_w_marginal_matches_partial_trace(keep):
    f = state_library("w")
    rho = oracle.density_from_poly(f.coeffs)
    red = oracle.partial_trace(rho, [i for i in range(3) if i not in keep])
    assert marginalize(f, keep).coeffs.distance(oracle.poly_from_density(red)) < 1e-15


@given(st.integers(0, 2**32 - 1))
def test_marginal_equals_partial_trace_random(seed):
    rho = oracle.random_density(3, rng=seed)
    f = from_rho(rho)
    want = oracle.poly_from_density(oracle.partial_trace(rho, [1]))
    assert marginalize(f, [0, 2]).coeffs.distance(want) < 1e-14


def test_marginal_spec_validation():
    with pytest.raises(ValidationError):
        MarginalSpec(2, ())
    with pytest.raises(ValidationError):
        MarginalSpec(2, (2,))


@pytest.mark.parametrize("p", [0.0, 0.2, 0.5, 0.9])
def test_classical_purity(p):
    out = purity_phase(state_library("classical", p=p))
    want = p**2 + (1 - p) ** 2
    assert abs(out["coefficient"] - want) < 1e-14
    assert abs(out["integral"] - want) < 1e-12


@pytest.mark.parametrize("name", ["zero", "minus_i", "bell:psi+", "product:+-"])
def test_pure_state_purity(name):
    out = purity_phase(state_library(name))
    assert all(abs(v - 1) < 1e-12 for v in out.values())


def test_maximally_mixed_floor():
    assert abs(purity_integral(state_library("mixed:max")) - 0.5) < 1e-14


def test_three_qubit_integral_purity():
    f = state_library("w")
    assert abs(purity_integral(f) - purity_coefficients(f)) < 1e-12


def test_wehrl_maximally_mixed():
    est, err = wehrl_entropy(state_library("mixed:max"), method="quadrature")
    assert abs(est - math.log(4 * np.pi)) < 1e-12 and err == 0.0
    est, err = wehrl_entropy(state_library("mixed:max"), McConfig(20_000))
    assert abs(est - math.log(4 * np.pi)) < 1e-12


def test_wehrl_coherent_state_closed_form():
    # -int Q log Q for Q = (1 + cos theta)/(4 pi) equals log(2 pi) + 1/2
    est, _ = wehrl_entropy(state_library("zero"), method="quadrature", order=128)
    assert abs(est - (math.log(2 * np.pi) + 0.5)) < 1e-6


def test_wehrl_mixed_exceeds_pure():
    vals = [wehrl_entropy(state_library("classical", p=p), method="quadrature")[0] for p in np.linspace(0, 0.5, 6)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_wehrl_needs_q():
    with pytest.raises(UnsupportedRepresentationError):
        wehrl_entropy(state_library("zero", s=0.0), method="quadrature")


def test_wehrl_mc_matches_quadrature_two_qubits():
    f = state_library("bell:phi+")
    est, err = wehrl_entropy(f, McConfig(100_000, seed=2))
    # product-rule quadrature reference
    from spinphase.quadrature import product_rule

    t, p, w = product_rule(2, 24, 48)
    q = np.real(evaluate(f, t, p))
    ref = float(-np.sum(w * q * np.log(np.maximum(q, 1e-300))))
    assert abs(est - ref) < 4 * err


@pytest.mark.parametrize("name", ["zero", "plus_i", "bell:phi-", "classical", "thermal_x"])
@pytest.mark.parametrize("s", [-1.0, 0.0, 1.0])
def test_physicality_residual_library(name, s):
    kw = {"p": 0.3} if name == "classical" else {"beta": 0.4} if name == "thermal_x" else {}
    assert physicality_residual(state_library(name, s, **kw)) < 1e-10


def test_physicality_detects_y20():
    f = state_library("plus")
    fn = lambda t, p: np.real(evaluate(f, t, p))[..., None][..., 0] + 0.1 * real_sph_harm(2, 0, t[:, 0], p[:, 0])
    assert abs(physicality_residual(fn, n_sites=1) - 0.1) < 1e-8


def test_physicality_grid_input():
    # midpoint rule on the lat-long grid: O(h^2) accurate only
    g = GridFunction.from_function(state_library("plus"), 64, 128)
    assert physicality_residual(g) < 1e-3


def test_physical_subspace_is_not_positivity():
    f = PhaseSpaceFunction(PauliPolynomial.from_labels({"I": 1.0, "X": 0.9, "Z": 0.9}))
    assert physicality_residual(f) < 1e-12
    with pytest.raises(ValidationError):
        oracle.validate_density(oracle.density_from_poly(f.coeffs))


def test_physicality_order_guard():
    with pytest.raises(ValidationError):
        physicality_residual(state_library("zero"), lmax_check=4, order=6)
    with pytest.raises(DimensionError):
        physicality_residual(state_library("ghz"))


def test_product_test_examples():
    ok, (a, b) = product_test(state_library("product:+0"), [0])
    assert ok and a.coeffs.allclose(state_library("plus").coeffs) and b.coeffs.allclose(state_library("zero").coeffs)
    assert product_test(state_library("bell:phi+"), [0])[0] is False
    for site in range(3):
        assert product_test(state_library("ghz"), [site])[0] is False


def test_dilation_examples():
    pure = dilation_check(state_library("plus").coeffs)
    assert pure["residual"] < 1e-12
    assert dilation_check(PauliPolynomial.identity(1))["residual"] < 1e-10


@pytest.mark.parametrize("seed", range(4))
def test_dilation_random_s_independent(seed):
    rho = oracle.random_density(2, rng=seed)
    poly = oracle.poly_from_density(rho).real()
    for s in (-1.0, 0.5):
        assert dilation_check(poly, s)["residual"] < 1e-10


def test_rank_report():
    rep = rank_report(state_library("bell:phi+"))
    assert rep == {"rank": 1, "star_fixed_point_dim": 4}
    rep = rank_report(from_rho(oracle.random_density(2, rng=1)))
    assert rep["rank"] == 4 and rep["star_fixed_point_dim"] == 0


def test_diagnostic_report():
    rep = diagnostic_report(state_library("classical", p=0.5))
    assert rep["purity"]["coefficient"] == pytest.approx(0.5)
    rep = diagnostic_report(state_library("bell:phi+"), McConfig(20_000, seed=1))
    assert rep["product"] == {"1": False}
    assert rep["wehrl"]["seed"] == 1
