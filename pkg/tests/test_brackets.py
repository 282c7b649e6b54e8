import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinphase import oracle
from spinphase.brackets import (
    MIN_GRID_POINTS,
    CoordOperator,
    GridFunction,
    apply_coord_operator,
    cosine_bracket,
    grid_coord_operator_1q,
    j_table,
    jacobi_residual,
    jordan_residual,
    k_table,
    metric_audit,
    poisson_audit,
    sine_bracket,
    string_bracket_via_coords,
    tensor_bracket_check,
)
from spinphase.errors import UnsupportedRepresentationError, ValidationError
from spinphase.pauli import PauliOp, PauliPolynomial, PauliString, embed
from spinphase.sw import PhaseSpaceFunction, star_product, symbol_of

from .conftest import pauli_strings, polys

# reference J/K tables: (operator, argument) -> (result, sign)
J_ENTRIES = {
    ("I", "I"): ("I", 0), ("I", "X"): ("I", 0), ("I", "Y"): ("I", 0), ("I", "Z"): ("I", 0),
    ("X", "I"): ("I", 0), ("X", "X"): ("I", 0), ("X", "Y"): ("Z", 1), ("X", "Z"): ("Y", -1),
    ("Y", "I"): ("I", 0), ("Y", "X"): ("Z", -1), ("Y", "Y"): ("I", 0), ("Y", "Z"): ("X", 1),
    ("Z", "I"): ("I", 0), ("Z", "X"): ("Y", 1), ("Z", "Y"): ("X", -1), ("Z", "Z"): ("I", 0),
}
K_ENTRIES = {
    ("I", "I"): ("I", 1), ("I", "X"): ("X", 1), ("I", "Y"): ("Y", 1), ("I", "Z"): ("Z", 1),
    ("X", "I"): ("X", 1), ("X", "X"): ("I", 1), ("X", "Y"): ("I", 0), ("X", "Z"): ("I", 0),
    ("Y", "I"): ("Y", 1), ("Y", "X"): ("I", 0), ("Y", "Y"): ("I", 1), ("Y", "Z"): ("I", 0),
    ("Z", "I"): ("Z", 1), ("Z", "X"): ("I", 0), ("Z", "Y"): ("I", 0), ("Z", "Z"): ("I", 1),
}


def sym(labels, s=-1.0):
    return symbol_of(PauliPolynomial.from_labels(labels), s)


def herm_sym(poly, s=-1.0):
    return symbol_of(poly, s)


def _canon(entry):
    r, sign = entry
    return ("I", 0) if sign == 0 else (r, sign)


@pytest.mark.parametrize("key", sorted(J_ENTRIES))
def test_j_table_entries(key):
    assert _canon(j_table(*key)) == J_ENTRIES[key]


@pytest.mark.parametrize("key", sorted(K_ENTRIES))
def test_k_table_entries(key):
    assert _canon(k_table(*key)) == K_ENTRIES[key]


def _apply(kind, p, poly):
    return apply_coord_operator(CoordOperator(0, PauliOp(p), kind), PhaseSpaceFunction(poly)).coeffs


def test_j_algebra_implied_by_tables():
    # the tables give [J_x, J_y] = J_z (unit structure constant)
    for a, b, c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
        for q in "IXYZ":
            f = PauliPolynomial.from_labels({q: 1.0})
            lhs = _apply("J", a, _apply("J", b, f)) - _apply("J", b, _apply("J", a, f))
            assert lhs.allclose(_apply("J", c, f))


def test_sine_bracket_examples():
    fx, fy = sym({"X": 1}), sym({"Y": 1})
    assert sine_bracket(fx, fy).coeffs.allclose((sym({"Z": 1}).coeffs * 2))
    assert len(sine_bracket(fx, fx).coeffs) == 0


@given(polys(3, real=True), polys(3, real=True), st.floats(-1, 1))
def test_sine_bracket_matches_oracle(a, b, s):
    A, B = oracle.operator_matrix(a), oracle.operator_matrix(b)
    want = oracle.expansion_from_matrix(-1j * (A @ B - B @ A))
    got = sine_bracket(herm_sym(a, s), herm_sym(b, s))
    assert got.coeffs.allclose(symbol_of(want, s, require_real=False).coeffs, 1e-9)


def test_cosine_bracket_examples():
    fx, fy = sym({"X": 1}), sym({"Y": 1})
    assert cosine_bracket(fx, fx).coeffs.allclose(sym({"I": 1}).coeffs * 2)
    assert len(cosine_bracket(fx, fy).coeffs) == 0


@given(polys(2, real=True), polys(2, real=True))
def test_cosine_bracket_matches_oracle(a, b):
    A, B = oracle.operator_matrix(a), oracle.operator_matrix(b)
    want = oracle.expansion_from_matrix(A @ B + B @ A)
    got = cosine_bracket(herm_sym(a), herm_sym(b))
    assert got.coeffs.allclose(symbol_of(want, require_real=False).coeffs, 1e-9)


@given(polys(2, real=True), polys(2, real=True))
def test_antisymmetry_and_symmetry(a, b):
    fa, fb = herm_sym(a), herm_sym(b)
    assert (sine_bracket(fa, fb).coeffs + sine_bracket(fb, fa).coeffs).distance(PauliPolynomial.zero(2)) < 1e-12
    assert (cosine_bracket(fa, fb).coeffs - cosine_bracket(fb, fa).coeffs).distance(PauliPolynomial.zero(2)) < 1e-12


@given(polys(2, real=True), polys(2, real=True), polys(2, real=True))
def test_jacobi(a, b, c):
    assert jacobi_residual(herm_sym(a), herm_sym(b), herm_sym(c)) < 1e-9


@given(polys(2, real=True), polys(2, real=True))
def test_star_decomposition(a, b):
    assert jordan_residual(herm_sym(a), herm_sym(b)) < 1e-12


def test_coord_operator_examples():
    fx = sym({"X": 1})
    jz = apply_coord_operator(CoordOperator(0, PauliOp.Z, "J"), fx)
    assert jz.coeffs.allclose(sym({"Y": 1}).coeffs)
    fi = sym({"I": 1})
    for p in PauliOp:
        assert len(apply_coord_operator(CoordOperator(0, p, "J"), fi).coeffs) == 0
    kz = apply_coord_operator(CoordOperator(0, PauliOp.Z, "K"), sym({"Z": 1}))
    assert kz.coeffs.allclose(fi.coeffs)


def test_k_rejects_other_representations():
    with pytest.raises(UnsupportedRepresentationError):
        apply_coord_operator(CoordOperator(0, PauliOp.X, "K"), sym({"X": 1}, 0.0))


def test_bracket_is_twice_coord_operator():
    for p, q in itertools.product("XYZ", repeat=2):
        fp, fq = sym({p: 1}), sym({q: 1})
        j = apply_coord_operator(CoordOperator(0, PauliOp(p), "J"), fq).coeffs * 2
        k = apply_coord_operator(CoordOperator(0, PauliOp(p), "K"), fq).coeffs * 2
        assert sine_bracket(fp, fq).coeffs.allclose(j)
        assert cosine_bracket(fp, fq).coeffs.allclose(k)


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(pauli_strings(n), polys(n, real=True))))
def test_string_bracket_via_coords(pair):
    p, c = pair
    f = herm_sym(c)
    fp = symbol_of(PauliPolynomial(p.n, {p: 1.0}))
    assert string_bracket_via_coords(p, f, "sine").coeffs.allclose(sine_bracket(fp, f).coeffs, 1e-9)
    assert string_bracket_via_coords(p, f, "cosine").coeffs.allclose(cosine_bracket(fp, f).coeffs, 1e-9)


def test_tensor_compatibility_example():
    rng = np.random.default_rng(0)
    fa = sym({"XI": 1})
    fb = sym({"IZ": 1})
    fc = herm_sym(oracle.random_hermitian_poly(2, rng))
    rs, rc = tensor_bracket_check(fa, fb, fc)
    assert rs < 1e-12 and rc < 1e-12


def test_tensor_identity_with_identity_factor():
    fa = sym({"XI": 1})
    fb = sym({"II": 1})
    fc = herm_sym(oracle.random_hermitian_poly(2, 3))
    rs, rc = tensor_bracket_check(fa, fb, fc)
    # with B = I: {{f_I, g}} = 2g and [[f_I, g]] = 0, so both sides collapse
    assert rs < 1e-12 and rc < 1e-12
    lhs = sine_bracket(star_product(fa, fb), fc).coeffs
    half = (sine_bracket(fa, cosine_bracket(fb, fc)).coeffs + cosine_bracket(fa, sine_bracket(fb, fc)).coeffs) * 0.5
    assert lhs.allclose(half, 1e-12)


def test_tensor_identity_with_spectator():
    a = embed(PauliPolynomial.from_labels({"Y": 1.0}), 3, [0])
    b = embed(PauliPolynomial.from_labels({"X": 0.5, "Z": 1.0}), 3, [2])
    fc = herm_sym(oracle.random_hermitian_poly(3, 5))
    rs, rc = tensor_bracket_check(herm_sym(a), herm_sym(b), fc)
    assert rs < 1e-12 and rc < 1e-12


def test_tensor_check_rejects_overlap():
    with pytest.raises(ValidationError):
        tensor_bracket_check(sym({"XI": 1}), sym({"ZI": 1}), sym({"II": 1}))


# -- grid operators -------------------------------------------------------------


def _grid_error(n):
    g = GridFunction.from_callable(lambda t, p: np.sin(t) * np.cos(p), n, 2 * n)
    out = grid_coord_operator_1q(CoordOperator(0, PauliOp.Z, "J"), g)
    tt, pp = g.mesh()
    return np.abs(out.values - np.sin(tt) * np.sin(pp)).max()


def test_grid_jz_derivative_second_order():
    e1, e2 = _grid_error(16), _grid_error(32)
    assert e2 < 1e-2
    assert 3.5 < e1 / e2 < 4.5


def test_grid_kx_on_constant():
    n = 32
    g = GridFunction.from_callable(lambda t, p: np.ones_like(t), n, 2 * n)
    out = grid_coord_operator_1q(CoordOperator(0, PauliOp.X, "K"), g)
    tt, pp = g.mesh()
    assert np.abs(out.values - np.sin(tt) * np.cos(pp)).max() < 1e-12


@pytest.mark.parametrize("p", list(PauliOp))
def test_grid_j_on_constant_is_zero(p):
    g = GridFunction.from_callable(lambda t, q: np.full_like(t, 2.5), 16, 32)
    out = grid_coord_operator_1q(CoordOperator(0, p, "J"), g)
    assert np.abs(out.values).max() < 1e-12


@pytest.mark.parametrize("pole", ["reflect", "one_sided"])
@pytest.mark.parametrize("p,kind", [("X", "J"), ("Y", "J"), ("X", "K"), ("Y", "K"), ("Z", "K")])
def test_grid_operators_match_tables(p, kind, pole):
    n = 48
    errs = []
    for q in "XYZ":
        f = sym({q: 1})
        g = GridFunction.from_function(f, n, 2 * n)
        out = grid_coord_operator_1q(CoordOperator(0, PauliOp(p), kind), g, pole=pole)
        want = GridFunction.from_function(apply_coord_operator(CoordOperator(0, PauliOp(p), kind), f), n, 2 * n)
        errs.append(np.abs(out.values - want.values).max())
    assert max(errs) < 5e-3


def test_grid_too_small():
    g = GridFunction.from_callable(lambda t, p: t, MIN_GRID_POINTS - 1, 16)
    with pytest.raises(ValidationError):
        grid_coord_operator_1q(CoordOperator(0, PauliOp.Z, "J"), g)


def test_grid_k_rejects_w():
    g = GridFunction.from_callable(lambda t, p: t, 16, 32)
    with pytest.raises(UnsupportedRepresentationError):
        grid_coord_operator_1q(CoordOperator(0, PauliOp.Z, "K"), g, s=0.0)


# -- audits -----------------------------------------------------------------------


def test_poisson_audit_single_constant():
    rep = poisson_audit()
    assert rep["spread"] < 1e-12 and rep["pointwise_spread"] < 1e-12
    assert abs(rep["constant"] - 1 / (4 * np.pi)) < 1e-12
    assert abs(rep["unit_normalized_constant"] - 0.5) < 1e-12


def test_metric_audit_single_constant():
    rep = metric_audit()
    assert rep["spread"] < 1e-12 and rep["pointwise_spread"] < 1e-12
    assert abs(rep["unit_normalized_constant"] - 0.5) < 1e-12
