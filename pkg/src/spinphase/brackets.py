"""Sine/cosine brackets, the J/K coordinate operators, and lat-long grid functions.

The brackets are defined through the operator correspondence::

    [[f_A, f_B]] = f_{-i[A, B]},    {{f_A, f_B}} = f_{{A, B}}

On a single site, bracketing with the symbol of a Pauli operator acts as
``2 J_P`` (sine) or ``2 K_P`` (cosine) on the other argument.  The J/K
operators are implemented twice: as exact tables on Pauli coefficients and as
finite-difference differential operators on a one-sphere grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError, UnsupportedRepresentationError, ValidationError
from .pauli import (
    PauliOp,
    PauliPolynomial,
    PauliString,
    anticommutator_poly,
    commutator_poly,
    poly_product,
)
from .sw import PhaseSpaceFunction, _check_pair, evaluate, lat_long_nodes, symbol_of

MIN_GRID_POINTS = 8

# ---------------------------------------------------------------------------
# brackets on stored coefficients
# ---------------------------------------------------------------------------


def sine_bracket(fa: PhaseSpaceFunction, fb: PhaseSpaceFunction) -> PhaseSpaceFunction:
    """Symbol of ``-i[A, B]``; independent of ``s``."""
    _check_pair(fa, fb)
    return PhaseSpaceFunction(commutator_poly(fa.coeffs, fb.coeffs) / 2**fa.n_qubits, fa.s)


def cosine_bracket(fa: PhaseSpaceFunction, fb: PhaseSpaceFunction) -> PhaseSpaceFunction:
    """Symbol of ``{A, B}``."""
    _check_pair(fa, fb)
    return PhaseSpaceFunction(anticommutator_poly(fa.coeffs, fb.coeffs) / 2**fa.n_qubits, fa.s)


def jordan_residual(fa: PhaseSpaceFunction, fb: PhaseSpaceFunction) -> float:
    """Coefficient distance between ``f * g`` and ``(1/2)({{f,g}} + i[[f,g]])``."""
    _check_pair(fa, fb)
    star = poly_product(fa.coeffs, fb.coeffs) / 2**fa.n_qubits
    rhs = (cosine_bracket(fa, fb).coeffs + sine_bracket(fa, fb).coeffs * 1j) * 0.5
    return star.distance(rhs)


def jacobi_residual(fa, fb, fc) -> float:
    """Distance of the cyclic sum ``[[a,[[b,c]]]] + ...`` from zero."""
    t1 = sine_bracket(fa, sine_bracket(fb, fc)).coeffs
    t2 = sine_bracket(fb, sine_bracket(fc, fa)).coeffs
    t3 = sine_bracket(fc, sine_bracket(fa, fb)).coeffs
    return (t1 + t2 + t3).distance(PauliPolynomial.zero(fa.n_qubits))


# ---------------------------------------------------------------------------
# coordinate operators: exact tables
# ---------------------------------------------------------------------------

_EPS = {("X", "Y"): ("Z", 1), ("Y", "Z"): ("X", 1), ("Z", "X"): ("Y", 1),
        ("Y", "X"): ("Z", -1), ("Z", "Y"): ("X", -1), ("X", "Z"): ("Y", -1)}


def j_table(p: str, q: str) -> tuple[str, int]:
    """``J_p f_q = sign * f_r``; returns ``(r, sign)`` with sign 0 for a vanishing entry."""
    if p == "I" or q == "I" or p == q:
        return "I", 0
    return _EPS[(p, q)]


def k_table(p: str, q: str) -> tuple[str, int]:
    """``K_p f_q = sign * f_r`` (Jordan action ``{p, q}/2`` on the Pauli basis)."""
    if p == "I":
        return q, 1
    if q == "I":
        return p, 1
    if p == q:
        return "I", 1
    return "I", 0


@dataclass(frozen=True)
class CoordOperator:
    """``J`` or ``K`` for Pauli ``pauli`` acting on 0-based ``site``."""

    site: int
    pauli: PauliOp
    kind: str

    def __post_init__(self):
        if self.kind not in ("J", "K"):
            raise ValidationError(f"kind must be 'J' or 'K', got {self.kind!r}")
        if not isinstance(self.pauli, PauliOp):
            object.__setattr__(self, "pauli", PauliOp(self.pauli))
        if self.site < 0:
            raise ValidationError("site must be non-negative")


def _coord_on_coeffs(op: CoordOperator, poly: PauliPolynomial) -> PauliPolynomial:
    if op.site >= poly.n_qubits:
        raise DimensionError(f"site {op.site} out of range for {poly.n_qubits} qubits")
    table = j_table if op.kind == "J" else k_table
    out: dict[PauliString, complex] = {}
    p = op.pauli.value
    for string, c in poly.items():
        q = string.op(op.site).value
        r, sign = table(p, q)
        if sign == 0:
            continue
        label = list(string.label)
        label[op.site] = r
        key = PauliString.from_label("".join(label))
        out[key] = out.get(key, 0j) + sign * c
    return PauliPolynomial(poly.n_qubits, out)


def apply_coord_operator(op: CoordOperator, f: PhaseSpaceFunction) -> PhaseSpaceFunction:
    """Apply ``J`` or ``K`` sitewise through the action tables.

    ``K`` changes Pauli weight, so as an operator on functions it matches the
    table only in the Q representation; other ``s`` raise.
    """
    if op.kind == "K" and abs(f.s + 1.0) > 1e-15:
        raise UnsupportedRepresentationError("K operators act on Q functions only (s = -1)")
    return PhaseSpaceFunction(_coord_on_coeffs(op, f.coeffs), f.s)


def string_bracket_via_coords(p: PauliString, f: PhaseSpaceFunction, kind: str = "sine") -> PhaseSpaceFunction:
    """Bracket of ``symbol_of(P)`` with ``f`` expanded into J/K compositions.

    Uses the tensor identities recursively: for ``P = P_1 (x) R``::

        S_P = (1/2)(S_1 C_R + C_1 S_R),   C_P = (1/2)(C_1 C_R - S_1 S_R)

    with ``S_1 = 2 J_{P_1}`` and ``C_1 = 2 K_{P_1}`` on the first site.  The
    result is computed on coefficients, so no ``s`` restriction applies.
    """
    if p.n != f.n_qubits:
        raise DimensionError("string and function sizes differ")
    if kind not in ("sine", "cosine"):
        raise ValidationError(f"kind must be 'sine' or 'cosine', got {kind!r}")

    def rec(site: int, poly: PauliPolynomial) -> tuple[PauliPolynomial, PauliPolynomial]:
        # returns (S, C) images of poly for the suffix string starting at site
        op = p.op(site)
        sj = _coord_on_coeffs(CoordOperator(site, op, "J"), poly) * 2
        ck = _coord_on_coeffs(CoordOperator(site, op, "K"), poly) * 2
        if site == p.n - 1:
            return sj, ck
        s_of_c, c_of_c = rec(site + 1, ck)
        s_of_s, c_of_s = rec(site + 1, sj)
        return (s_of_c + c_of_s) * 0.5, (c_of_c - s_of_s) * 0.5

    s_img, c_img = rec(0, f.coeffs)
    return PhaseSpaceFunction(s_img if kind == "sine" else c_img, f.s)


# ---------------------------------------------------------------------------
# tensor compatibility
# ---------------------------------------------------------------------------


def _support(f: PhaseSpaceFunction) -> set[int]:
    sites: set[int] = set()
    for s in f.coeffs:
        sites.update(s.support)
    return sites


def tensor_bracket_check(fa: PhaseSpaceFunction, fb: PhaseSpaceFunction, fc: PhaseSpaceFunction) -> tuple[float, float]:
    """Residuals of the sine and cosine tensor identities.

    ``fa`` and ``fb`` are symbols of operators on disjoint sites (given on the
    full ``N``-site manifold); ``fc`` is arbitrary.
    """
    _check_pair(fa, fb)
    _check_pair(fa, fc)
    if _support(fa) & _support(fb):
        raise ValidationError("local operators must act on disjoint sites")
    n = fa.n_qubits
    fab = PhaseSpaceFunction(poly_product(fa.coeffs, fb.coeffs) / 2**n, fa.s)
    lhs_s = sine_bracket(fab, fc).coeffs
    rhs_s = (sine_bracket(fa, cosine_bracket(fb, fc)).coeffs + cosine_bracket(fa, sine_bracket(fb, fc)).coeffs) * 0.5
    lhs_c = cosine_bracket(fab, fc).coeffs
    rhs_c = (cosine_bracket(fa, cosine_bracket(fb, fc)).coeffs - sine_bracket(fa, sine_bracket(fb, fc)).coeffs) * 0.5
    return lhs_s.distance(rhs_s), lhs_c.distance(rhs_c)


# ---------------------------------------------------------------------------
# grid functions and differential forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridFunction:
    """Real samples on the cell-centred ``n_theta x n_phi`` lat-long grid."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise DimensionError("grid values must be 2-D")
        if not np.all(np.isfinite(v)):
            raise ValidationError("grid values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def nodes(self):
        return lat_long_nodes(*self.shape)

    @property
    def h(self) -> tuple[float, float]:
        nt, nph = self.shape
        return np.pi / nt, 2 * np.pi / nph

    def mesh(self):
        th, ph = self.nodes
        return np.meshgrid(th, ph, indexing="ij")

    @classmethod
    def from_callable(cls, fn: Callable, n_theta: int, n_phi: int | None = None) -> "GridFunction":
        n_phi = n_theta if n_phi is None else n_phi
        th, ph = lat_long_nodes(n_theta, n_phi)
        tt, pp = np.meshgrid(th, ph, indexing="ij")
        return cls(np.broadcast_to(fn(tt, pp), tt.shape).astype(float))

    @classmethod
    def from_function(cls, f: PhaseSpaceFunction, n_theta: int, n_phi: int | None = None) -> "GridFunction":
        if f.n_qubits != 1:
            raise DimensionError("grid functions live on a single sphere")

        def fn(tt, pp):
            return np.real(evaluate(f, tt.reshape(-1, 1), pp.reshape(-1, 1))).reshape(tt.shape)

        return cls.from_callable(fn, n_theta, n_phi)

    def integrate(self) -> float:
        """Midpoint rule ``sum f sin(theta) dtheta dphi``."""
        th, _ = self.nodes
        ht, hp = self.h
        return float(np.sum(self.values * np.sin(th)[:, None]) * ht * hp)

    def __add__(self, other):
        return GridFunction(self.values + _vals(other))

    def __sub__(self, other):
        return GridFunction(self.values - _vals(other))

    def __mul__(self, k):
        return GridFunction(self.values * k)

    __rmul__ = __mul__


def _vals(g):
    return g.values if isinstance(g, GridFunction) else np.asarray(g)


def _check_grid(v: np.ndarray):
    if v.shape[0] < MIN_GRID_POINTS or v.shape[1] < MIN_GRID_POINTS:
        raise ValidationError(f"grid needs at least {MIN_GRID_POINTS} points per axis, got {v.shape}")


def d_phi(v: np.ndarray) -> np.ndarray:
    """Periodic central difference in ``phi``."""
    hp = 2 * np.pi / v.shape[1]
    return (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) / (2 * hp)


POLE_MODES = ("reflect", "one_sided")


def d_theta(v: np.ndarray, pole: str = "reflect") -> np.ndarray:
    """Central difference in ``theta`` with a closure at the polar rows.

    ``"reflect"`` continues the stencil across the pole through
    ``f(-theta, phi) = f(theta, phi + pi)`` (needs an even ``n_phi``);
    ``"one_sided"`` uses second-order one-sided differences instead.
    """
    ht = np.pi / v.shape[0]
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2 * ht)
    if pole == "reflect":
        if v.shape[1] % 2:
            raise ValidationError("cross-pole closure needs an even number of phi points")
        half = v.shape[1] // 2
        north = np.roll(v[0], -half)
        south = np.roll(v[-1], -half)
        out[0] = (v[1] - north) / (2 * ht)
        out[-1] = (south - v[-2]) / (2 * ht)
    elif pole == "one_sided":
        out[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * ht)
        out[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * ht)
    else:
        raise ValidationError(f"pole must be one of {POLE_MODES}")
    return out


def _coord_grid_values(pauli: str, kind: str, v: np.ndarray, tt: np.ndarray, pp: np.ndarray,
                       pole: str = "reflect") -> np.ndarray:
    if pauli == "I":
        return np.zeros_like(v) if kind == "J" else v.copy()
    ft, fp = d_theta(v, pole), d_phi(v)
    st, ct = np.sin(tt), np.cos(tt)
    sp, cp = np.sin(pp), np.cos(pp)
    if kind == "J":
        if pauli == "X":
            return sp * ft + ct / st * cp * fp
        if pauli == "Y":
            return -cp * ft + ct / st * sp * fp
        return -fp
    if pauli == "X":
        return st * cp * v + ct * cp * ft - sp / st * fp
    if pauli == "Y":
        return st * sp * v + ct * sp * ft + cp / st * fp
    return ct * v - st * ft


def grid_coord_operator_1q(op: CoordOperator, grid: GridFunction, s: float = -1.0,
                           pole: str = "reflect") -> GridFunction:
    """Finite-difference application of the J/K differential forms.

    ``J_x = sin(phi) d_theta + cot(theta) cos(phi) d_phi``,
    ``J_y = -cos(phi) d_theta + cot(theta) sin(phi) d_phi``, ``J_z = -d_phi``;
    ``K_x = sin(theta)cos(phi) + cos(theta)cos(phi) d_theta - csc(theta) sin(phi) d_phi``,
    ``K_y = sin(theta)sin(phi) + cos(theta)sin(phi) d_theta + csc(theta) cos(phi) d_phi``,
    ``K_z = cos(theta) - sin(theta) d_theta``.  K requires ``s = -1``.
    """
    if op.site != 0:
        raise DimensionError("grid operators act on a single sphere (site 0)")
    if op.kind == "K" and abs(s + 1.0) > 1e-15:
        raise UnsupportedRepresentationError("K operators act on Q functions only (s = -1)")
    _check_grid(grid.values)
    tt, pp = grid.mesh()
    return GridFunction(_coord_grid_values(op.pauli.value, op.kind, grid.values, tt, pp, pole))


# ---------------------------------------------------------------------------
# coordinate-form audits
# ---------------------------------------------------------------------------


def _grad_1q(f: PhaseSpaceFunction, tt, pp):
    """Value and analytic (theta, phi) derivatives of a one-qubit l<=1 function."""
    ev = f.evaluated_coefficients()
    c = {k.label: complex(v).real for k, v in ev.items()}
    st, ct, sp, cp = np.sin(tt), np.cos(tt), np.sin(pp), np.cos(pp)
    n = {"X": st * cp, "Y": st * sp, "Z": ct}
    dn_t = {"X": ct * cp, "Y": ct * sp, "Z": -st}
    dn_p = {"X": -st * sp, "Y": st * cp, "Z": 0 * tt}
    val = c.get("I", 0.0) + sum(c.get(k, 0.0) * n[k] for k in "XYZ")
    dt = sum(c.get(k, 0.0) * dn_t[k] for k in "XYZ")
    dp = sum(c.get(k, 0.0) * dn_p[k] for k in "XYZ")
    norm = 4 * np.pi
    return val / norm, dt / norm, dp / norm


def poisson_form(fa, fb, tt, pp):
    """``(1/sin theta)(d_theta f d_phi g - d_phi f d_theta g)``."""
    _, at, ap = _grad_1q(fa, tt, pp)
    _, bt, bp = _grad_1q(fb, tt, pp)
    return (at * bp - ap * bt) / np.sin(tt)


def metric_form(fa, fb, tt, pp):
    """``f g + d_theta f d_theta g + (1/sin^2 theta) d_phi f d_phi g``."""
    av, at, ap = _grad_1q(fa, tt, pp)
    bv, bt, bp = _grad_1q(fb, tt, pp)
    return av * bv + at * bt + ap * bp / np.sin(tt) ** 2


def _ratio_report(pairs, lhs_fn, rhs_fn, n_points, seed):
    rng = np.random.default_rng(seed)
    tt = np.arccos(rng.uniform(-0.95, 0.95, n_points))
    pp = rng.uniform(0, 2 * np.pi, n_points)
    ratios = {}
    for a, b in pairs:
        fa = symbol_of(PauliPolynomial.from_labels({a: 1.0}), -1.0)
        fb = symbol_of(PauliPolynomial.from_labels({b: 1.0}), -1.0)
        form = lhs_fn(fa, fb, tt, pp)
        br = np.real(evaluate(rhs_fn(fa, fb), tt[:, None], pp[:, None]))
        if np.max(np.abs(br)) < 1e-14 and np.max(np.abs(form)) < 1e-14:
            continue
        mask = np.abs(br) > 1e-6
        r = form[mask] / br[mask]
        ratios[f"{a}{b}"] = (float(np.mean(r)), float(np.max(np.abs(r - np.mean(r)))))
    values = np.array([v[0] for v in ratios.values()])
    return {
        "pairs": ratios,
        "constant": float(np.mean(values)),
        "spread": float(np.max(values) - np.min(values)),
        "pointwise_spread": float(max(v[1] for v in ratios.values())),
        # same constant with unit-normalized symbols f_P = n_P
        "unit_normalized_constant": float(np.mean(values) * 4 * np.pi / 2),
    }


def poisson_audit(n_points: int = 64, seed: int = 0) -> dict:
    """Ratio of the coordinate Poisson form to the sine bracket on basis pairs.

    Every pair with a nonzero bracket should give the same ratio; the value of
    that ratio is measured, not assumed.
    """
    pairs = [(a, b) for a in "XYZ" for b in "XYZ" if a != b]
    return _ratio_report(pairs, poisson_form, sine_bracket, n_points, seed)


def metric_audit(n_points: int = 64, seed: int = 0) -> dict:
    """Ratio of the coordinate metric form to the cosine bracket on basis pairs."""
    pairs = [(a, b) for a in "IXYZ" for b in "IXYZ" if a == b or "I" in (a, b)]
    return _ratio_report(pairs, metric_form, cosine_bracket, n_points, seed)
