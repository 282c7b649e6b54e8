"""Dense density-matrix reference implementation used for cross-validation.

Everything here works on explicit ``2**N x 2**N`` matrices and is capped at
``MAX_QUBITS`` sites.  Basis index bit ``N-1-i`` corresponds to site ``i``,
matching :class:`~spinphase.pauli.PauliString`.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.linalg import expm

from .errors import DimensionError, ValidationError
from .pauli import PauliPolynomial, PauliString

MAX_QUBITS = 8
EXACT_LINDBLAD_QUBITS = 5
RANK_TOL = 1e-10


def _nq(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise DimensionError(f"oracle is capped at {MAX_QUBITS} qubits")
    return n


def string_matrix(p: PauliString) -> np.ndarray:
    """Dense matrix of a Pauli string."""
    if p.n > MAX_QUBITS:
        raise DimensionError(f"oracle is capped at {MAX_QUBITS} qubits")
    dim = 1 << p.n
    cols = np.arange(dim)
    rows = cols ^ p.x
    parity = np.array([bin(c & p.z).count("1") & 1 for c in cols])
    vals = (1j ** (p.x & p.z).bit_count()) * (1 - 2 * parity)
    out = np.zeros((dim, dim), dtype=complex)
    out[rows, cols] = vals
    return out


def operator_matrix(poly: PauliPolynomial) -> np.ndarray:
    """Dense matrix of ``sum_P a_P P``."""
    dim = 1 << poly.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for p, c in poly.items():
        out += c * string_matrix(p)
    return out


def _all_strings(n: int):
    for label in itertools.product("IXYZ", repeat=n):
        yield PauliString.from_label("".join(label))


def trace_with_strings(mat: np.ndarray) -> dict[PauliString, complex]:
    """``Tr[M P]`` for every Pauli string ``P``."""
    n = _nq(mat.shape[0])
    dim = 1 << n
    b = np.arange(dim)
    popc = np.array([bin(v).count("1") & 1 for v in range(dim)])
    # Walsh-Hadamard signs (-1)^{popcount(z & b)}
    signs = 1 - 2 * popc[b[:, None] & b[None, :]]
    ipow = np.array([1, 1j, -1, -1j])
    zs = np.arange(dim)
    out = {}
    for x in range(dim):
        # Tr[M P] = sum_b M[b, b^x] P[b^x, b]
        vals = signs @ mat[b, b ^ x]
        ph = ipow[popc_count(x & zs) % 4]
        for z in range(dim):
            out[PauliString(n, x, z)] = complex(ph[z] * vals[z])
    return out


def popc_count(v: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(v, dtype=np.uint64)).astype(np.int64)


def expansion_from_matrix(mat: np.ndarray) -> PauliPolynomial:
    """Coefficients ``a_P`` with ``M = sum_P a_P P``."""
    n = _nq(mat.shape[0])
    return PauliPolynomial(n, {p: v / 2**n for p, v in trace_with_strings(mat).items()})


def density_from_poly(poly: PauliPolynomial, check_state: bool = False) -> np.ndarray:
    """``rho = 2**-N sum_P c_P P`` from Pauli expectations ``c_P = Tr[rho P]``."""
    rho = operator_matrix(poly) / 2**poly.n_qubits
    if check_state:
        validate_density(rho)
    return rho


def poly_from_density(rho: np.ndarray) -> PauliPolynomial:
    """Pauli expectations ``c_P = Tr[rho P]``."""
    n = _nq(rho.shape[0])
    return PauliPolynomial(n, trace_with_strings(rho))


def validate_density(rho: np.ndarray, tol: float = 1e-10) -> None:
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12 * max(1.0, np.abs(rho).max()) + 1e-12:
        raise ValidationError("matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-12 + tol:
        raise ValidationError(f"trace {np.trace(rho).real:.3g} differs from 1")
    evals = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if evals.min() < -tol:
        raise ValidationError(f"matrix has negative eigenvalue {evals.min():.3g}")


def pure_density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_density(n: int, rank: int | None = None, rng=None) -> np.ndarray:
    """Ginibre-sampled mixed state of the given rank (full rank by default)."""
    rng = np.random.default_rng(rng)
    dim = 2**n
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian_poly(n: int, rng=None, n_terms: int | None = None, scale: float = 1.0) -> PauliPolynomial:
    rng = np.random.default_rng(rng)
    strings = list(_all_strings(n))
    if n_terms is not None:
        idx = rng.choice(len(strings), size=min(n_terms, len(strings)), replace=False)
        strings = [strings[i] for i in idx]
    return PauliPolynomial(n, {p: scale * rng.normal() for p in strings})


# ---------------------------------------------------------------------------
# dynamics
# ---------------------------------------------------------------------------


def _rhs(rho, h, jumps, gamma, kind):
    if kind == "imaginary":
        return -(h @ rho + rho @ h)
    out = -1j * (h @ rho - rho @ h)
    if kind == "lindblad":
        for low in jumps:
            ld = low.conj().T
            ldl = ld @ low
            out = out + gamma * (low @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl))
    return out


def _liouvillian(h, ls, gamma):
    """Row-major superoperator: ``vec(A rho B) = (A (x) B^T) vec(rho)``."""
    d = h.shape[0]
    eye = np.eye(d)
    out = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for low in ls:
        ldl = low.conj().T @ low
        out = out + gamma * (np.kron(low, low.conj()) - 0.5 * (np.kron(ldl, eye) + np.kron(eye, ldl.T)))
    return out


def _rk4_path(rho, f, t_grid, kind):
    out = [rho.copy()]
    for a, b in zip(t_grid[:-1], t_grid[1:]):
        dt = b - a
        k1 = f(rho)
        k2 = f(rho + 0.5 * dt * k1)
        k3 = f(rho + 0.5 * dt * k2)
        k4 = f(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if kind == "imaginary":
            rho = rho / np.trace(rho)
        out.append(rho.copy())
    return out


def evolve_oracle(rho0, H, jumps=(), gamma=0.0, kind="lindblad", t=1.0, dt=1e-3, times=None):
    """Reference solution of the von Neumann / Lindblad / imaginary-time equation.

    Uses exact exponentials: ``e^{-iHt}`` and ``e^{-tH}`` (renormalized) on
    Hilbert space, and the superoperator exponential for Lindblad up to
    ``EXACT_LINDBLAD_QUBITS``; larger Lindblad problems fall back to RK4 with
    a step no larger than ``dt``.  ``H`` and ``jumps`` may be dense matrices
    or Pauli polynomials.  Returns ``(times, rhos)`` at ``times`` (default:
    ``0, dt, ..., t`` with the last step shortened to land on ``t``).
    """
    if kind not in ("unitary", "imaginary", "lindblad"):
        raise ValidationError(f"unknown kind {kind!r}")
    if t < 0 or dt <= 0:
        raise ValidationError("need t >= 0 and dt > 0")
    h = operator_matrix(H) if isinstance(H, PauliPolynomial) else np.asarray(H, dtype=complex)
    ls = [operator_matrix(j) if isinstance(j, PauliPolynomial) else np.asarray(j, dtype=complex) for j in jumps]
    rho = np.array(rho0, dtype=complex)
    if h.shape != rho.shape or any(m.shape != rho.shape for m in ls):
        raise DimensionError("operator dimensions do not match the state")
    if times is None:
        grid = np.append(np.arange(0.0, t, dt), t) if t > 0 else np.array([0.0])
    else:
        grid = np.array(sorted(float(x) for x in times))
        if grid.size and (grid[0] < 0 or grid[-1] > t + 1e-12):
            raise ValidationError("snapshot times outside [0, t]")
    d = rho.shape[0]
    lindblad = kind == "lindblad" and gamma > 0 and ls
    if lindblad and d > 2**EXACT_LINDBLAD_QUBITS:
        fine = np.unique(np.concatenate([grid, np.linspace(0, t, int(np.ceil(t / dt)) + 1)]))
        path = _rk4_path(rho, lambda r: _rhs(r, h, ls, gamma, kind), fine, kind)
        idx = np.searchsorted(fine, grid)
        return grid, [path[i] for i in idx]
    out = []
    if lindblad:
        L = _liouvillian(h, ls, gamma)
        v = rho.reshape(-1)
        for tt in grid:
            out.append((expm(L * tt) @ v).reshape(d, d))
    else:
        gen = -1j * h if kind != "imaginary" else -h
        for tt in grid:
            u = expm(gen * tt)
            r = u @ rho @ u.conj().T
            if kind == "imaginary":
                r = r / np.trace(r)
            out.append(r)
    return grid, out


# ---------------------------------------------------------------------------
# structure
# ---------------------------------------------------------------------------


def partial_trace(rho: np.ndarray, sites) -> np.ndarray:
    """Trace out the given 0-based ``sites``."""
    n = _nq(rho.shape[0])
    sites = sorted(set(sites))
    if any(s < 0 or s >= n for s in sites):
        raise ValidationError(f"site out of range for {n} qubits")
    keep = [i for i in range(n) if i not in sites]
    if not keep:
        raise ValidationError("cannot trace out every site")
    t = rho.reshape([2] * (2 * n))
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJ"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for s in sites:
        col[s] = row[s]
    out_idx = [row[i] for i in keep] + [col[i] for i in keep]
    res = np.einsum("".join(row + col) + "->" + "".join(out_idx), t)
    d = 2 ** len(keep)
    return res.reshape(d, d)


def purify(rho: np.ndarray, tol: float = RANK_TOL) -> tuple[np.ndarray, int]:
    """Eigendecomposition purification onto system (x) ancilla.

    The ancilla register has ``max(1, ceil(log2 rank))`` qubits, so a pure
    input comes back as ``|psi> (x) |0>``.  Returns ``(psi, n_ancilla)`` with
    the ancilla on the trailing sites.
    """
    evals, evecs = np.linalg.eigh((rho + rho.conj().T) / 2)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    rank = int(np.sum(evals > tol))
    n_anc = max(1, int(np.ceil(np.log2(max(rank, 1)))))
    d_anc = 2**n_anc
    psi = np.zeros((rho.shape[0], d_anc), dtype=complex)
    for k in range(rank):
        psi[:, k] = np.sqrt(evals[k]) * evecs[:, k]
    psi = psi.reshape(-1)
    return psi / np.linalg.norm(psi), n_anc


def born_sample(rho: np.ndarray, rng_seed=None, shots: int = 1) -> list[str]:
    n = _nq(rho.shape[0])
    probs = np.clip(np.real(np.diag(rho)), 0, None)
    probs = probs / probs.sum()
    rng = np.random.default_rng(rng_seed)
    idx = rng.choice(len(probs), size=shots, p=probs)
    return [format(int(i), f"0{n}b") for i in idx]


def expectation_oracle(rho: np.ndarray, A) -> float:
    a = operator_matrix(A) if isinstance(A, PauliPolynomial) else np.asarray(A)
    return float(np.real(np.trace(rho @ a)))


def purity_oracle(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def rank_oracle(rho: np.ndarray, tol: float = RANK_TOL) -> int:
    if tol <= 0:
        raise ValidationError("tol must be positive")
    return int(np.sum(np.linalg.eigvalsh((rho + rho.conj().T) / 2) > tol))


def star_fixed_point_dim(rho: np.ndarray, tol: float = RANK_TOL) -> int:
    """Dimension of ``{A : A rho = A}``, the null space of ``A -> A (rho - 1)``.

    The map is assembled on vectorized operators; the matrix-unit basis and
    the Pauli basis differ by an invertible change of basis, so the null-space
    dimension is the same in either.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    dim = rho.shape[0]
    m = rho - np.eye(dim)
    # row-major vec(A M) = (1 (x) M^T) vec(A)
    op = np.kron(np.eye(dim), m.T)
    sv = np.linalg.svd(op, compute_uv=False)
    return int(np.sum(sv <= tol * max(1.0, sv.max())))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    ev = np.linalg.eigvalsh((a - b + (a - b).conj().T) / 2)
    return float(0.5 * np.abs(ev).sum())
