"""Phase-space functions on (S^2)^N built from the s-parametrised kernel.

A :class:`PhaseSpaceFunction` stores the Pauli expectations ``c_P = Tr[A P]``
of its operator; they do not depend on ``s``.  The index only enters when the
function is evaluated::

    f(Omega) = (4 pi)^-N  sum_P c_P lam(s)^w(P) prod_i n_{P_i}(Omega_i)

with ``lam(s) = 3**((1 + s) / 2)`` and ``n_I = 1``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .errors import DimensionError, ValidationError
from .pauli import PauliPolynomial, PauliString, poly_product, tensor
from .quadrature import bloch, sphere_rule

STATE_TOL = 1e-10

_SIGMA = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
)


def lam(s: float) -> float:
    """Per-site weight ``3**((1+s)/2)``: 1 for Q, sqrt(3) for W, 3 for P."""
    check_s(s)
    return 3.0 ** ((1.0 + s) / 2.0)


def check_s(s: float) -> float:
    if not np.isfinite(s) or s < -1 - 1e-12 or s > 1 + 1e-12:
        raise ValidationError(f"s-index {s} outside [-1, 1]")
    return float(s)


@dataclass(frozen=True)
class SpherePoint:
    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise ValidationError(f"theta={self.theta} outside [0, pi]")
        if not (0.0 <= self.phi < 2 * math.pi):
            raise ValidationError(f"phi={self.phi} outside [0, 2pi)")

    @property
    def n(self) -> np.ndarray:
        return bloch(self.theta, self.phi)


def as_point_arrays(thetas, phis=None, n_sites: int | None = None):
    """Normalize point input to ``(M, N)`` theta and phi arrays.

    Accepts a sequence of :class:`SpherePoint` (one manifold point), or
    array-likes of shape ``(N,)`` or ``(M, N)``.
    """
    if phis is None:
        pts = list(thetas)
        if not all(isinstance(p, SpherePoint) for p in pts):
            raise ValidationError("expected a sequence of SpherePoint")
        thetas = [p.theta for p in pts]
        phis = [p.phi for p in pts]
    t = np.atleast_1d(np.asarray(thetas, dtype=float))
    p = np.atleast_1d(np.asarray(phis, dtype=float))
    if t.shape != p.shape:
        raise DimensionError("theta and phi arrays differ in shape")
    if t.ndim == 1:
        t, p = t[None, :], p[None, :]
    if n_sites is not None and t.shape[1] != n_sites:
        raise DimensionError(f"points have {t.shape[1]} sites, function has {n_sites}")
    return t, p


@dataclass(frozen=True)
class PhaseSpaceFunction:
    """Symbol ``f_A^{(s)}`` stored through ``c_P = Tr[A P]``.

    Parameters
    ----------
    coeffs : PauliPolynomial
        Pauli expectations of the underlying operator.
    s : float
        Representation index in ``[-1, 1]`` used at evaluation.
    is_state : bool
        Marks a density operator; requires ``c_I = 1`` and ``|c_P| <= 1``.
    """

    coeffs: PauliPolynomial
    s: float = -1.0
    is_state: bool = False

    def __post_init__(self):
        check_s(self.s)
        if self.is_state:
            cI = self.coeffs.get(PauliString.identity(self.n_qubits), 0.0)
            if abs(cI - 1.0) > STATE_TOL:
                raise ValidationError(f"state must have identity coefficient 1, got {cI}")
            if not self.coeffs.is_hermitian(STATE_TOL):
                raise ValidationError("state coefficients must be real")
            worst = max(abs(c) for c in self.coeffs.values())
            if worst > 1 + STATE_TOL:
                raise ValidationError(f"state coefficient of modulus {worst} exceeds 1")

    @property
    def n_qubits(self) -> int:
        return self.coeffs.n_qubits

    def with_s(self, s: float) -> "PhaseSpaceFunction":
        return PhaseSpaceFunction(self.coeffs, check_s(s), self.is_state)

    def __call__(self, thetas, phis=None):
        return evaluate(self, thetas, phis)

    def evaluated_coefficients(self) -> dict[PauliString, complex]:
        """Coefficients of ``prod n_{P_i}`` in ``(4 pi)^N f``: ``c_P lam^w``."""
        L = lam(self.s)
        return {p: c * L**p.weight for p, c in self.coeffs.items()}

    def to_dict(self) -> dict:
        d = self.coeffs.to_dict()
        d["s"] = float(self.s)
        return d

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data, is_state: bool | None = None) -> "PhaseSpaceFunction":
        poly = PauliPolynomial.from_dict(data)
        s = float(data.get("s", -1.0))
        if is_state is None:
            cI = poly.get(PauliString.identity(poly.n_qubits), 0.0)
            is_state = abs(cI - 1) <= STATE_TOL and poly.is_hermitian()
        return cls(poly, s, is_state)

    @classmethod
    def from_json(cls, text: str, is_state: bool | None = None) -> "PhaseSpaceFunction":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(data, is_state)


def symbol_of(A: PauliPolynomial, s: float = -1.0, require_real: bool = True) -> PhaseSpaceFunction:
    """Symbol ``Tr[A Delta^{(s)}]`` of an operator given as ``sum_P a_P P``."""
    if require_real and not A.is_hermitian():
        raise ValidationError("operator is not Hermitian; pass require_real=False")
    return PhaseSpaceFunction(A * 2**A.n_qubits, check_s(s), False)


def state_function(coeffs: PauliPolynomial, s: float = -1.0) -> PhaseSpaceFunction:
    """State from Pauli expectations ``<P>`` (identity coefficient 1)."""
    return PhaseSpaceFunction(coeffs, check_s(s), True)


def evaluate(f: PhaseSpaceFunction, thetas, phis=None):
    """Evaluate at one or many points of ``(S^2)^N``.

    ``thetas``/``phis`` of shape ``(N,)`` return a scalar; ``(M, N)`` return
    an ``(M,)`` array.  Complex coefficients give complex values.
    """
    scalar = phis is None or np.ndim(thetas) == 1
    t, p = as_point_arrays(thetas, phis, f.n_qubits)
    nvec = bloch(t, p)
    x, z, c = f.coeffs.arrays()
    weights = lam(f.s) ** np.bitwise_count(x | z).astype(float)
    norm = (4 * np.pi) ** f.n_qubits
    if x.size == 0:
        out = np.zeros(t.shape[0])
    else:
        wc = c * weights
        out = _kernels.eval_terms(x, z, wc.real.copy(), nvec)
        if np.any(np.abs(wc.imag) > 0):
            out = out + 1j * _kernels.eval_terms(x, z, wc.imag.copy(), nvec)
    out = out / norm
    return out[0] if scalar else out


def kernel_1q(s: float, theta: float, phi: float) -> np.ndarray:
    """Single-site kernel ``(1/4pi)(I + lam(s) n . sigma)``."""
    n = bloch(theta, phi)
    return (np.eye(2) + lam(s) * np.einsum("k,kij->ij", n, _SIGMA)) / (4 * np.pi)


def kernel_1q_projector_form(s: float, theta: float, phi: float) -> np.ndarray:
    """Same kernel written with the coherent-state projector."""
    L = lam(s)
    ket = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    proj = np.outer(ket, ket.conj())
    return (L * proj - (L - 1) / 2 * np.eye(2)) / (2 * np.pi)


def kernel_matrix(s: float, thetas, phis=None) -> np.ndarray:
    """Tensor product of single-site kernels at one manifold point."""
    t, p = as_point_arrays(thetas, phis)
    if t.shape[0] != 1:
        raise DimensionError("kernel_matrix takes a single manifold point")
    out = np.ones((1, 1), dtype=complex)
    for th, ph in zip(t[0], p[0]):
        out = np.kron(out, kernel_1q(s, th, ph))
    return out


def change_representation(f: PhaseSpaceFunction, s_new: float) -> PhaseSpaceFunction:
    """Heat-kernel flow to index ``s_new``.

    Storage is representation-free, so only the index changes; evaluated
    coefficients pick up ``(lam(s_new)/lam(s))**w(P)``.
    """
    return f.with_s(s_new)


def _check_pair(fa: PhaseSpaceFunction, fb: PhaseSpaceFunction):
    if fa.n_qubits != fb.n_qubits:
        raise DimensionError(f"n_qubits mismatch: {fa.n_qubits} vs {fb.n_qubits}")
    if abs(fa.s - fb.s) > 1e-15:
        raise ValidationError(f"s mismatch: {fa.s} vs {fb.s}")


def star_product(fa: PhaseSpaceFunction, fb: PhaseSpaceFunction) -> PhaseSpaceFunction:
    """Symbol of the operator product ``A B``."""
    _check_pair(fa, fb)
    prod = poly_product(fa.coeffs, fb.coeffs) / 2**fa.n_qubits
    return PhaseSpaceFunction(prod, fa.s, False)


# ---------------------------------------------------------------------------
# triple kernel
# ---------------------------------------------------------------------------

TRIPLE_PREFACTOR = {"exact": 4 * np.pi**2, "four_pi": 4 * np.pi}


def triple_kernel(s: float, omega, omega1, omega2, normalization: str = "exact") -> complex:
    """``C Tr[Delta^{(-s)}(omega1) Delta^{(-s)}(omega2) Delta^{(s)}(omega)]``.

    With ``C = 4 pi^2`` the double integral of ``f_A(omega1) f_B(omega2)``
    against this kernel reproduces ``(f_A * f_B)(omega)``.  ``"four_pi"``
    selects ``C = 4 pi``, which misses that identity by a factor ``pi``.
    """
    if normalization not in TRIPLE_PREFACTOR:
        raise ValidationError(f"unknown normalization {normalization!r}")
    k = kernel_1q(s, *omega)
    k1 = kernel_1q(-s, *omega1)
    k2 = kernel_1q(-s, *omega2)
    return complex(TRIPLE_PREFACTOR[normalization] * np.trace(k1 @ k2 @ k))


def integral_star_1q(fa: PhaseSpaceFunction, fb: PhaseSpaceFunction, theta: float, phi: float,
                     order: int = 8, normalization: str = "exact") -> complex:
    """Star product at one point through the triple-kernel double integral."""
    _check_pair(fa, fb)
    if fa.n_qubits != 1:
        raise DimensionError("integral form is single-qubit only")
    t, p, w = sphere_rule(order, 2 * order)
    va = evaluate(fa, t[:, None], p[:, None])
    vb = evaluate(fb, t[:, None], p[:, None])
    s = fa.s
    k = kernel_1q(s, theta, phi)
    # kernels at every node, shape (M, 2, 2)
    n = bloch(t, p)
    km = (np.eye(2)[None] + lam(-s) * np.einsum("mk,kij->mij", n, _SIGMA)) / (4 * np.pi)
    a = np.einsum("m,m,mij->ij", w, va, km)
    b = np.einsum("m,m,mij->ij", w, vb, km)
    return complex(TRIPLE_PREFACTOR[normalization] * np.trace(a @ b @ k))


# ---------------------------------------------------------------------------
# kernel axioms
# ---------------------------------------------------------------------------

TRACIALITY_CONSTANT = 2 * np.pi
FOUR_PI_TRACIALITY_CONSTANT = 4 * np.pi


def _rotation_from_su2(u: np.ndarray) -> np.ndarray:
    return np.array(
        [[0.5 * np.trace(_SIGMA[i] @ u @ _SIGMA[j] @ u.conj().T).real for j in range(3)] for i in range(3)]
    )


def _random_su2(rng) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    a, b, c, d = q
    return np.array([[a + 1j * b, c + 1j * d], [-c + 1j * d, a - 1j * b]])


def kernel_axiom_report(s: float, order: int = 64, n_rotations: int = 5, seed: int = 0) -> dict:
    """Quadrature residuals of the single-site kernel axioms.

    Returns max-abs residuals for Hermiticity, normalization ``int Delta = I``,
    covariance ``U Delta(n) U^dag = Delta(R n)`` and dual traciality
    ``2 pi int f_A^{(s)} f_B^{(-s)} = Tr[A B]``, plus the ratio between the
    traciality constant and its ``4 pi`` alternative.
    """
    check_s(s)
    rng = np.random.default_rng(seed)
    t, p, w = sphere_rule(order, order)
    n = bloch(t, p)
    L = lam(s)
    ks = (np.eye(2)[None] + L * np.einsum("mk,kij->mij", n, _SIGMA)) / (4 * np.pi)
    herm = float(np.max(np.abs(ks - ks.conj().transpose(0, 2, 1))))
    norm = float(np.max(np.abs(np.einsum("m,mij->ij", w, ks) - np.eye(2))))

    proj = kernel_1q_projector_form(s, t[0], p[0])
    form = float(np.max(np.abs(proj - ks[0])))

    cov = 0.0
    for _ in range(n_rotations):
        u = _random_su2(rng)
        R = _rotation_from_su2(u)
        idx = rng.choice(t.size, size=16, replace=False)
        for m in idx:
            lhs = u @ ks[m] @ u.conj().T
            rn = R @ n[m]
            rhs = (np.eye(2) + L * np.einsum("k,kij->ij", rn, _SIGMA)) / (4 * np.pi)
            cov = max(cov, float(np.max(np.abs(lhs - rhs))))

    kd = (np.eye(2)[None] + lam(-s) * np.einsum("mk,kij->mij", n, _SIGMA)) / (4 * np.pi)
    trac = 0.0
    for _ in range(5):
        A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        B = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        A, B = A + A.conj().T, B + B.conj().T
        fa = np.einsum("ij,mji->m", A, ks)
        fb = np.einsum("ij,mji->m", B, kd)
        integral = np.sum(w * fa * fb)
        trac = max(trac, float(abs(TRACIALITY_CONSTANT * integral - np.trace(A @ B))))
    return {
        "s": float(s),
        "order": int(order),
        "hermiticity": herm,
        "normalization": norm,
        "projector_form": form,
        "covariance": cov,
        "traciality": trac,
        "traciality_constant": float(TRACIALITY_CONSTANT),
        "four_pi_constant_ratio": float(FOUR_PI_TRACIALITY_CONSTANT / TRACIALITY_CONSTANT),
    }


# ---------------------------------------------------------------------------
# named states
# ---------------------------------------------------------------------------

_SINGLE = {
    "zero": {"I": 1, "Z": 1},
    "one": {"I": 1, "Z": -1},
    "plus": {"I": 1, "X": 1},
    "minus": {"I": 1, "X": -1},
    "plus_i": {"I": 1, "Y": 1},
    "minus_i": {"I": 1, "Y": -1},
}
_SINGLE_ALIAS = {"0": "zero", "1": "one", "+": "plus", "-": "minus", "+i": "plus_i", "-i": "minus_i",
                 "r": "plus_i", "l": "minus_i"}

_BELL = {
    "phi+": {"II": 1, "XX": 1, "YY": -1, "ZZ": 1},
    "phi-": {"II": 1, "XX": -1, "YY": 1, "ZZ": 1},
    "psi+": {"II": 1, "XX": 1, "YY": 1, "ZZ": -1},
    "psi-": {"II": 1, "XX": -1, "YY": -1, "ZZ": -1},
}

STATE_NAMES = (
    "zero", "one", "plus", "minus", "plus_i", "minus_i", "classical", "mixed:max",
    "bell:phi+", "bell:phi-", "bell:psi+", "bell:psi-", "ghz", "w",
    "thermal_x", "thermal_zz", "product:<labels>",
)


def _ghz_coeffs(n: int) -> dict[str, float]:
    out = {}
    # strings over {I, Z} with an even number of Z
    for mask in range(1 << n):
        if bin(mask).count("1") % 2 == 0:
            out["".join("Z" if (mask >> (n - 1 - i)) & 1 else "I" for i in range(n))] = 1.0
    # full-weight X/Y strings: <P> = Re((-i)^k) with k the number of Y
    for mask in range(1 << n):
        k = bin(mask).count("1")
        val = (1, 0, -1, 0)[k % 4]
        if val:
            out["".join("Y" if (mask >> (n - 1 - i)) & 1 else "X" for i in range(n))] = float(val)
    return out


def _from_vector(psi: np.ndarray) -> PauliPolynomial:
    from .oracle import poly_from_density, pure_density

    return poly_from_density(pure_density(psi)).real()


def w_vector(n: int) -> np.ndarray:
    psi = np.zeros(2**n)
    for i in range(n):
        psi[1 << i] = 1.0
    return psi / np.sqrt(n)


def product_state(labels: Sequence[str]) -> PauliPolynomial:
    """Product of single-qubit eigenstates, e.g. ``["+", "0"]``."""
    poly = None
    for lab in labels:
        name = _SINGLE_ALIAS.get(lab, lab)
        if name not in _SINGLE:
            raise ValidationError(f"unknown single-qubit state {lab!r}")
        local = PauliPolynomial.from_labels(_SINGLE[name])
        poly = local if poly is None else tensor(poly, local)
    if poly is None:
        raise ValidationError("product state needs at least one label")
    return poly


def thermal_state(H: PauliPolynomial, beta: float) -> PauliPolynomial:
    """Expectations of ``exp(-beta H)/Z`` computed densely."""
    from .oracle import operator_matrix, poly_from_density

    if beta < 0 or not np.isfinite(beta):
        raise ValidationError("beta must be finite and non-negative")
    m = expm(-beta * operator_matrix(H))
    return poly_from_density(m / np.trace(m)).real()


def _split_product_labels(text: str) -> list[str]:
    out, i = [], 0
    while i < len(text):
        if text[i] in "+-" and text[i + 1:i + 2] == "i":
            out.append(text[i:i + 2])
            i += 2
        else:
            out.append(text[i])
            i += 1
    return out


def state_library(name: str, s: float = -1.0, *, n: int | None = None, p: float | None = None,
                  beta: float | None = None) -> PhaseSpaceFunction:
    """Named states with exact coefficients.

    Parameters
    ----------
    name : str
        One of ``STATE_NAMES``; ``classical`` needs ``p``, the thermal families
        need ``beta``, ``ghz``/``w`` default to 3 qubits, ``mixed:max`` to 1.
        ``product:0+`` builds ``|0> (x) |+>``.
    """
    key = name.strip().lower()
    key = _SINGLE_ALIAS.get(key, key)
    if key in _SINGLE:
        poly = PauliPolynomial.from_labels(_SINGLE[key])
    elif key == "classical":
        if p is None or not (0.0 <= p <= 1.0):
            raise ValidationError("classical state needs p in [0, 1]")
        poly = PauliPolynomial.from_labels({"I": 1.0, "Z": 2 * p - 1})
    elif key in ("mixed:max", "mixed", "maximally_mixed"):
        nn = 1 if n is None else n
        if nn < 1:
            raise ValidationError("n must be positive")
        poly = PauliPolynomial.identity(nn)
    elif key.startswith("bell"):
        which = key.split(":", 1)[1] if ":" in key else "phi+"
        if which not in _BELL:
            raise ValidationError(f"unknown Bell state {which!r}")
        poly = PauliPolynomial.from_labels(_BELL[which])
    elif key == "ghz":
        nn = 3 if n is None else n
        if nn < 2:
            raise ValidationError("GHZ needs n >= 2")
        poly = PauliPolynomial.from_labels(_ghz_coeffs(nn))
    elif key == "w":
        nn = 3 if n is None else n
        if not (2 <= nn <= 8):
            raise ValidationError("W state needs 2 <= n <= 8")
        poly = _from_vector(w_vector(nn))
    elif key == "thermal_x":
        if beta is None or beta < 0:
            raise ValidationError("thermal_x needs beta >= 0")
        poly = PauliPolynomial.from_labels({"I": 1.0, "X": -math.tanh(beta)})
    elif key in ("thermal_zz", "two_qubit_thermal_zz"):
        if beta is None or beta < 0:
            raise ValidationError("thermal_zz needs beta >= 0")
        poly = PauliPolynomial.from_labels({"II": 1.0, "ZZ": math.tanh(beta)})
    elif key.startswith("product:"):
        poly = product_state(_split_product_labels(key.split(":", 1)[1]))
    else:
        raise ValidationError(f"unknown state {name!r}")
    return state_function(poly, s)


# ---------------------------------------------------------------------------
# grid export
# ---------------------------------------------------------------------------


def lat_long_nodes(n_theta: int, n_phi: int):
    """Cell-centred latitude/longitude nodes (avoid the poles)."""
    theta = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    phi = np.arange(n_phi) * 2 * np.pi / n_phi
    return theta, phi


def single_site_grid(f: PhaseSpaceFunction, n_theta: int = 121, n_phi: int | None = None):
    """Values of a one-qubit function on the lat-long grid, shape ``(n_theta, n_phi)``."""
    if f.n_qubits != 1:
        raise DimensionError("single_site_grid needs a one-qubit function")
    n_phi = n_theta if n_phi is None else n_phi
    th, ph = lat_long_nodes(n_theta, n_phi)
    tt, pp = np.meshgrid(th, ph, indexing="ij")
    vals = evaluate(f, tt.reshape(-1, 1), pp.reshape(-1, 1))
    return th, ph, np.real(vals).reshape(n_theta, n_phi)


def grid_to_csv(thetas: np.ndarray, phis: np.ndarray, values: Iterable[float]) -> str:
    """CSV with columns ``theta_1, phi_1, ..., theta_N, phi_N, value``.

    ``thetas``/``phis`` have shape ``(M, N)``.
    """
    thetas = np.atleast_2d(thetas)
    phis = np.atleast_2d(phis)
    n = thetas.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = []
    for i in range(n):
        header += [f"theta_{i + 1}", f"phi_{i + 1}"]
    w.writerow(header + ["value"])
    for row_t, row_p, v in zip(thetas, phis, values):
        row = []
        for a, b in zip(row_t, row_p):
            row += [repr(float(a)), repr(float(b))]
        w.writerow(row + [repr(float(np.real(v)))])
    return buf.getvalue()

