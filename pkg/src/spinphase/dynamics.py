"""Bracket flows as sparse linear maps on Pauli-coefficient space.

For a Hamiltonian ``H = sum h_P P`` and jumps ``L = sum l_P P``, the state
coefficients ``c_P = Tr[rho P]`` obey

* unitary:    ``dc/dt = [[f_H, f_rho]]``
* imaginary:  ``dc/dtau = -{{f_H, f_rho}}`` (renormalized to ``c_I = 1``)
* Lindblad:   the unitary term plus ``(gamma/4) sum_L ([[L,[[L^dag,rho]]]] +
  [[L^dag,[[L,rho]]]] + i[[L,{{L^dag,rho}}]] - i[[L^dag,{{L,rho}}]])``

The generator is assembled column by column on the set of Pauli strings
reachable from the initial support, never on all ``4**N`` strings.
"""

from __future__ import annotations

import json
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from .brackets import GridFunction, _check_grid, _coord_grid_values
from .errors import CFLError, DimensionError, StepSizeError, ValidationError
from .pauli import PauliPolynomial, PauliString, anticommutator_poly, commutator_poly
from .sw import PhaseSpaceFunction, lat_long_nodes, state_function

KINDS = ("unitary", "imaginary", "lindblad")
EXACT_MAX_DIM = 4**6
DIVERGENCE_NORM = 1e8
DEFAULT_DT = 1e-3


@dataclass(frozen=True)
class Model:
    """Hamiltonian, jump operators and rate for one of the three flows."""

    hamiltonian: PauliPolynomial
    jumps: tuple[PauliPolynomial, ...] = ()
    gamma: float = 0.0
    kind: str = "unitary"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.hamiltonian.is_hermitian():
            raise ValidationError("Hamiltonian must be Hermitian")
        if self.gamma < 0 or not np.isfinite(self.gamma):
            raise ValidationError("gamma must be finite and non-negative")
        object.__setattr__(self, "jumps", tuple(self.jumps))
        for j in self.jumps:
            if j.n_qubits != self.hamiltonian.n_qubits:
                raise DimensionError("jump operator size differs from the Hamiltonian")

    @property
    def n_qubits(self) -> int:
        return self.hamiltonian.n_qubits

    def rhs(self, c: PauliPolynomial) -> PauliPolynomial:
        """Time derivative of the coefficient polynomial ``c``."""
        h = self.hamiltonian
        if self.kind == "imaginary":
            return -anticommutator_poly(h, c)
        out = commutator_poly(h, c)
        if self.kind == "lindblad" and self.gamma > 0:
            acc = PauliPolynomial.zero(c.n_qubits)
            for low in self.jumps:
                ld = low.conj()
                acc = acc + commutator_poly(low, commutator_poly(ld, c))
                acc = acc + commutator_poly(ld, commutator_poly(low, c))
                acc = acc + commutator_poly(low, anticommutator_poly(ld, c)) * 1j
                acc = acc - commutator_poly(ld, anticommutator_poly(low, c)) * 1j
            out = out + acc * (self.gamma / 4)
        return out


class GeneratorMatrix:
    """Sparse ``G`` with ``dc/dt = G c`` on an ordered Pauli support.

    The support grows lazily: :meth:`close_over` adds every string reachable
    from a seed set under repeated application of the flow.
    """

    def __init__(self, model: Model):
        self.model = model
        self.support: list[PauliString] = []
        self._index: dict[PauliString, int] = {}
        self._cols: dict[int, dict[PauliString, float]] = {}
        self._matrix = None
        self.close_over([PauliString.identity(model.n_qubits)])

    @property
    def n_qubits(self) -> int:
        return self.model.n_qubits

    @property
    def kind(self) -> str:
        return self.model.kind

    @property
    def dim(self) -> int:
        return len(self.support)

    def _add(self, p: PauliString) -> bool:
        if p in self._index:
            return False
        self._index[p] = len(self.support)
        self.support.append(p)
        return True

    def close_over(self, strings) -> None:
        queue = deque()
        for p in strings:
            if p.n != self.n_qubits:
                raise DimensionError("support string size differs from the model")
            if self._add(p):
                queue.append(p)
        while queue:
            p = queue.popleft()
            col = self.model.rhs(PauliPolynomial(self.n_qubits, {p: 1.0}))
            if any(abs(v.imag) > 1e-10 for v in col.values()):
                raise ValidationError("generator does not preserve Hermiticity")
            self._cols[self._index[p]] = {q: v.real for q, v in col.items()}
            for q in col:
                if self._add(q):
                    queue.append(q)
            self._matrix = None

    def matrix(self) -> sp.csr_matrix:
        if self._matrix is None:
            rows, cols, vals = [], [], []
            for j, col in self._cols.items():
                for q, v in col.items():
                    rows.append(self._index[q])
                    cols.append(j)
                    vals.append(v)
            self._matrix = sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim))
        return self._matrix

    def dense(self) -> np.ndarray:
        return self.matrix().toarray()

    def vector(self, poly: PauliPolynomial) -> np.ndarray:
        self.close_over(list(poly))
        v = np.zeros(self.dim)
        for p, c in poly.items():
            v[self._index[p]] = c.real
        return v

    def polynomial(self, v: np.ndarray) -> PauliPolynomial:
        return PauliPolynomial(self.n_qubits, {p: v[i] for i, p in enumerate(self.support)})

    def apply(self, poly: PauliPolynomial) -> PauliPolynomial:
        v = self.vector(poly)
        return self.polynomial(self.matrix() @ v)

    def identity_index(self) -> int:
        return self._index[PauliString.identity(self.n_qubits)]


def _as_model(model_or_gen) -> GeneratorMatrix:
    return model_or_gen if isinstance(model_or_gen, GeneratorMatrix) else GeneratorMatrix(model_or_gen)


def build_unitary_generator(H: PauliPolynomial) -> GeneratorMatrix:
    return GeneratorMatrix(Model(H, (), 0.0, "unitary"))


def build_imaginary_generator(H: PauliPolynomial) -> GeneratorMatrix:
    return GeneratorMatrix(Model(H, (), 0.0, "imaginary"))


def build_lindblad_generator(H: PauliPolynomial, jumps: Sequence[PauliPolynomial], gamma: float) -> GeneratorMatrix:
    if gamma < 0:
        raise ValidationError("gamma must be non-negative")
    return GeneratorMatrix(Model(H, tuple(jumps), float(gamma), "lindblad"))


def sigma_minus(n: int = 1, site: int = 0) -> PauliPolynomial:
    """``|0><1| = (X + iY)/2`` on ``site``; drives population towards ``|0>``."""
    x = PauliString.single(n, site, "X")
    y = PauliString.single(n, site, "Y")
    return PauliPolynomial(n, {x: 0.5, y: 0.5j})


def tfim_hamiltonian(h: Sequence[float], J: Sequence[float], J3: Sequence[float] = ()) -> PauliPolynomial:
    """``sum_i h_i X_i + sum_i J_i Z_i Z_{i+1} (+ sum_i J3_i Z_i Z_{i+1} Z_{i+2})``."""
    n = len(h)
    if n < 1:
        raise ValidationError("need at least one site")
    if len(J) != n - 1:
        raise ValidationError(f"expected {n - 1} couplings, got {len(J)}")
    if len(J3) not in (0, max(n - 2, 0)):
        raise ValidationError(f"expected {max(n - 2, 0)} three-body couplings, got {len(J3)}")
    terms: dict[str, float] = {}
    for i, hi in enumerate(h):
        lab = ["I"] * n
        lab[i] = "X"
        terms["".join(lab)] = terms.get("".join(lab), 0.0) + hi
    for i, ji in enumerate(J):
        lab = ["I"] * n
        lab[i] = lab[i + 1] = "Z"
        terms["".join(lab)] = ji
    for i, ji in enumerate(J3):
        lab = ["I"] * n
        lab[i] = lab[i + 1] = lab[i + 2] = "Z"
        terms["".join(lab)] = ji
    if not terms:
        return PauliPolynomial.zero(n)
    return PauliPolynomial(n, terms)


def depolarizing_jumps(n: int) -> list[PauliPolynomial]:
    """Single-site ``X``, ``Y``, ``Z`` on every site."""
    return [PauliPolynomial(n, {PauliString.single(n, i, op): 1.0}) for i in range(n) for op in "XYZ"]


def build_tfim_generator(h, J, gamma: float = 0.0, jumps: Sequence[PauliPolynomial] | None = None,
                         J3: Sequence[float] = ()) -> GeneratorMatrix:
    """Lindblad generator of the transverse-field Ising chain.

    ``jumps`` defaults to the depolarizing triple on every site.
    """
    H = tfim_hamiltonian(h, J, J3)
    if jumps is None:
        jumps = depolarizing_jumps(len(h))
    return build_lindblad_generator(H, jumps, gamma)


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Sampled coefficient trajectory over a fixed support."""

    times: np.ndarray
    support: list[PauliString]
    coeffs: np.ndarray  # (T, K)
    s: float = -1.0
    n_qubits: int = 1
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def polynomial(self, k: int) -> PauliPolynomial:
        return PauliPolynomial(self.n_qubits, {p: self.coeffs[k, i] for i, p in enumerate(self.support)})

    def state(self, k: int) -> PhaseSpaceFunction:
        return state_function(self.polynomial(k), self.s)

    @property
    def states(self) -> list[PhaseSpaceFunction]:
        return [self.state(k) for k in range(len(self))]

    def coefficient(self, label: str) -> np.ndarray:
        p = PauliString.from_label(label)
        if p not in self.support:
            return np.zeros(len(self.times))
        return self.coeffs[:, self.support.index(p)]

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "n_qubits": self.n_qubits,
            "s": float(self.s),
            "snapshots": [
                {"t": float(t), "state": self.polynomial(k).to_dict()} for k, t in enumerate(self.times)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _snapshot_steps(t_final: float, dt: float, times) -> tuple[int, float, list[int]]:
    """Step count, effective step (``t_final / n_steps`` <= ``dt``) and snapshot indices."""
    n_steps = max(int(np.ceil(t_final / dt - 1e-9)), 1) if t_final > 0 else 0
    h = t_final / n_steps if n_steps else dt
    if times is None:
        keep = list(range(n_steps + 1))
    else:
        times = [float(t) for t in times]
        if any(t < -1e-12 or t > t_final * (1 + 1e-12) + 1e-12 for t in times):
            raise ValidationError("snapshot times outside [0, t_final]")
        keep = sorted({int(round(t / h)) if n_steps else 0 for t in times})
    return n_steps, h, keep


def evolve(f0: PhaseSpaceFunction, G, t_final: float, dt: float = DEFAULT_DT, method: str = "rk4",
           times=None) -> Trajectory:
    """Integrate ``dc/dt = G c`` from ``f0``.

    Parameters
    ----------
    G : GeneratorMatrix or Model
    method : {"rk4", "exact_small"}
        ``exact_small`` applies the dense exponential ``expm(G t)`` and needs a
        support of at most ``4**6`` strings.
    times : sequence of float, optional
        Snapshot times, rounded to the step grid; default is every step.
    """
    G = _as_model(G)
    if f0.n_qubits != G.n_qubits:
        raise DimensionError(f"state has {f0.n_qubits} qubits, generator {G.n_qubits}")
    if not dt > 0:
        raise ValidationError("dt must be positive")
    if t_final < 0:
        raise ValidationError("t_final must be non-negative")
    c = G.vector(f0.coeffs)
    n_steps, dt, keep = _snapshot_steps(t_final, dt, times)
    M = G.matrix()
    iI = G.identity_index()
    imaginary = G.kind == "imaginary"
    out = []
    if method == "exact_small":
        if G.dim > EXACT_MAX_DIM:
            raise ValidationError(f"exact_small needs support <= {EXACT_MAX_DIM}, got {G.dim}")
        D = M.toarray()
        for k in keep:
            v = expm(D * (k * dt)) @ c
            if imaginary:
                v = v / v[iI]
            out.append(v)
    elif method == "rk4":
        keep_set = set(keep)
        for k in range(n_steps + 1):
            if k in keep_set:
                out.append(c.copy())
            if k == n_steps:
                break
            k1 = M @ c
            k2 = M @ (c + 0.5 * dt * k1)
            k3 = M @ (c + 0.5 * dt * k2)
            k4 = M @ (c + dt * k3)
            c = c + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if imaginary:
                if not abs(c[iI]) > 1e-300:
                    raise StepSizeError(f"identity coefficient vanished at step {k + 1}")
                c = c / c[iI]
            norm = float(np.max(np.abs(c)))
            if not np.isfinite(norm) or norm > DIVERGENCE_NORM:
                raise StepSizeError(f"coefficients diverged at t={(k + 1) * dt:.6g}; reduce dt")
    else:
        raise ValidationError(f"unknown method {method!r}")
    return Trajectory(
        times=np.array(keep, dtype=float) * dt,
        support=list(G.support),
        coeffs=np.array(out),
        s=f0.s,
        n_qubits=f0.n_qubits,
        meta={"method": method, "dt": dt, "kind": G.kind},
    )


# ---------------------------------------------------------------------------
# single-sphere PDE picture
# ---------------------------------------------------------------------------


def _coeffs_1q(poly: PauliPolynomial) -> dict[str, complex]:
    if poly.n_qubits != 1:
        raise DimensionError("grid evolution is single-qubit only")
    return {p.label: complex(c) for p, c in poly.items()}


def grid_rhs(model: Model, v: np.ndarray, tt: np.ndarray, pp: np.ndarray, pole: str = "reflect") -> np.ndarray:
    """Right-hand side of the Q-function PDE built from J/K compositions.

    ``2 sum h_P J_P Q`` for the unitary part, ``-2 sum h_P K_P Q`` for the
    imaginary flow, and ``sum_{P,R} 2 gamma (Re(l_P conj l_R) J_P J_R -
    Im(l_P conj l_R) J_P K_R) Q`` per jump for the dissipator.
    """
    h = _coeffs_1q(model.hamiltonian)

    def J(p, w):
        return _coord_grid_values(p, "J", w, tt, pp, pole)

    def K(p, w):
        return _coord_grid_values(p, "K", w, tt, pp, pole)

    out = np.zeros_like(v)
    if model.kind == "imaginary":
        for p, c in h.items():
            out -= 2 * c.real * K(p, v)
        return out
    for p, c in h.items():
        if p != "I":
            out += 2 * c.real * J(p, v)
    if model.kind == "lindblad" and model.gamma > 0:
        for low in model.jumps:
            l = _coeffs_1q(low)
            for r, lr in l.items():
                jr, kr = J(r, v), K(r, v)
                for p, lp in l.items():
                    if p == "I":
                        continue
                    z = lp * np.conj(lr)
                    if z.real != 0:
                        out += 2 * model.gamma * z.real * J(p, jr)
                    if z.imag != 0:
                        out -= 2 * model.gamma * z.imag * J(p, kr)
    return out


def _spectral_radius(fn, shape, iters: int = 40, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=shape)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = fn(v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        est = nw
        v = w / nw
    return float(est)


RK4_STABILITY = 2.5


def grid_evolve_1q(q0: GridFunction, model: Model, t_final: float, dt: float, times=None,
                   on_cfl: str = "halve", pole: str = "reflect") -> tuple[np.ndarray, list[GridFunction]]:
    """Finite-difference integration of the single-qubit Q-function PDE.

    A power-iteration estimate of the discrete operator's spectral radius
    guards the step: ``dt * rho`` must stay below ``2.5`` (inside the RK4
    stability region).  ``on_cfl="halve"`` halves ``dt`` until it does,
    ``"raise"`` raises :class:`CFLError`.  Imaginary-time grids are
    renormalized to unit integral after each step.
    """
    if model.n_qubits != 1:
        raise DimensionError("grid evolution is single-qubit only")
    if on_cfl not in ("halve", "raise"):
        raise ValidationError("on_cfl must be 'halve' or 'raise'")
    _check_grid(q0.values)
    tt, pp = q0.mesh()
    fn = lambda w: grid_rhs(model, w, tt, pp, pole)
    rho = _spectral_radius(fn, q0.shape)
    n_sub = 1
    while dt / n_sub * rho > RK4_STABILITY:
        if on_cfl == "raise":
            raise CFLError(f"dt={dt} exceeds the stability bound {RK4_STABILITY / rho:.3g}")
        n_sub *= 2
    if n_sub > 1:
        warnings.warn(f"dt halved {int(np.log2(n_sub))} times for stability", RuntimeWarning, stacklevel=2)
    n_steps, dt, keep = _snapshot_steps(t_final, dt, times)
    keep_set = set(keep)
    h = dt / n_sub
    v = q0.values.copy()
    th, _ = lat_long_nodes(*q0.shape)
    ht, hp = np.pi / q0.shape[0], 2 * np.pi / q0.shape[1]
    area = np.sin(th)[:, None] * ht * hp
    mass0 = float(np.sum(v * area))
    out_t, out_g = [], []
    for k in range(n_steps + 1):
        if k in keep_set:
            out_t.append(k * dt)
            out_g.append(GridFunction(v.copy()))
        if k == n_steps:
            break
        for _ in range(n_sub):
            k1 = fn(v)
            k2 = fn(v + 0.5 * h * k1)
            k3 = fn(v + 0.5 * h * k2)
            k4 = fn(v + h * k3)
            v = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if model.kind == "imaginary":
                v = v * (mass0 / float(np.sum(v * area)))
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > DIVERGENCE_NORM:
            raise StepSizeError(f"grid evolution diverged at t={(k + 1) * dt:.6g}")
    return np.array(out_t), out_g


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------


def model_from_dict(data: dict) -> tuple[Model, float, float]:
    """Parse ``{"hamiltonian", "jumps", "gamma", "kind", "t_final", "dt"}``."""
    try:
        H = PauliPolynomial.from_dict(data["hamiltonian"])
        jumps = [PauliPolynomial.from_dict(j) for j in data.get("jumps", [])]
        gamma = float(data.get("gamma", 0.0))
        kind = data.get("kind", "lindblad" if jumps else "unitary")
        t_final = float(data.get("t_final", 1.0))
        dt = float(data.get("dt", DEFAULT_DT))
    except KeyError as exc:
        raise ValidationError(f"model spec missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed model spec: {exc}") from exc
    return Model(H, tuple(jumps), gamma, kind), t_final, dt


def model_to_dict(model: Model, t_final: float, dt: float) -> dict:
    return {
        "hamiltonian": model.hamiltonian.to_dict(),
        "jumps": [j.to_dict() for j in model.jumps],
        "gamma": model.gamma,
        "kind": model.kind,
        "t_final": t_final,
        "dt": dt,
    }
