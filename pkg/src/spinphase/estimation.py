"""Observable estimation: exact contraction, Monte Carlo with P/Q duality,
sequential basis sampling and closed-form moment-generating functions."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ImpossiblePrefixError, ValidationError
from .pauli import PauliPolynomial, PauliString
from .quadrature import SAMPLE_CHUNK, iter_chunks, uniform_chunk
from .sw import PhaseSpaceFunction, check_s, evaluate, lam

PREFIX_TOL = 1e-12
SERIES_RADIUS = 1e-2


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings.

    Samples are drawn in fixed chunks of ``SAMPLE_CHUNK`` keyed by
    ``(seed, chunk index)``; workers only change who computes which chunk.
    """

    n_samples: int = 100_000
    seed: int = 0
    n_workers: int = 1

    def __post_init__(self):
        if int(self.n_samples) <= 0:
            raise ValidationError("n_samples must be positive")
        if int(self.n_workers) <= 0:
            raise ValidationError("n_workers must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must fit in 64 bits")


def _check_dims(state: PhaseSpaceFunction, obs: PauliPolynomial):
    if state.n_qubits != obs.n_qubits:
        raise DimensionError(f"state has {state.n_qubits} qubits, observable {obs.n_qubits}")


def expectation_exact(state: PhaseSpaceFunction, obs: PauliPolynomial) -> float:
    """``<A> = sum_P a_P c_P`` for ``A = sum_P a_P P``."""
    _check_dims(state, obs)
    total = sum(a * state.coeffs.get(p, 0.0) for p, a in obs.items())
    return float(np.real(total))


def _combine(parts):
    """Chan-style merge of per-chunk ``(count, mean, M2)`` in the given order."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        if nb == 0:
            continue
        delta = mb - mean
        tot = n + nb
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def mc_integrate(integrand, n_sites: int, cfg: McConfig) -> tuple[float, float]:
    """``int_{(S^2)^N} g`` by uniform sampling; returns ``(estimate, stderr)``.

    ``integrand(thetas, phis)`` receives ``(m, N)`` arrays.  Per-chunk
    statistics are merged in chunk order, so the result is bitwise identical
    for any ``n_workers``.
    """
    chunks = list(iter_chunks(int(cfg.n_samples), SAMPLE_CHUNK))

    def work(item):
        k, size = item
        t, p = uniform_chunk(int(cfg.seed), k, size, n_sites)
        vals = np.asarray(integrand(t, p), dtype=float)
        mu = float(np.mean(vals))
        return size, mu, float(np.sum((vals - mu) ** 2))

    if cfg.n_workers == 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=int(cfg.n_workers)) as pool:
            parts = list(pool.map(work, chunks))
    n, mean, m2 = _combine(parts)
    vol = (4 * np.pi) ** n_sites
    std = math.sqrt(m2 / (n - 1)) if n > 1 else 0.0
    return vol * mean, vol * std / math.sqrt(n)


def dual_function(obs: PauliPolynomial, s: float) -> PhaseSpaceFunction:
    """Observable in expansion normalization at index ``s``.

    ``(4 pi)^N int f_rho^{(s)} g_A^{(-s)} = <A>`` where ``g_A`` carries the
    coefficients ``a_P`` of ``A = sum a_P P``.
    """
    return PhaseSpaceFunction(obs, check_s(s))


def expectation_mc(state: PhaseSpaceFunction, obs: PauliPolynomial, cfg: McConfig) -> tuple[float, float]:
    """Monte Carlo estimate of ``<A>`` through the dual pairing.

    The state is evaluated at its own index ``s`` and the observable at
    ``-s``: the estimate is ``(4 pi)^{2N} mean[f_rho^{(s)} g_A^{(-s)}]``.
    """
    _check_dims(state, obs)
    if not obs.is_hermitian():
        raise ValidationError("observable must be Hermitian")
    g = dual_function(obs.real(), -state.s)
    n = state.n_qubits
    scale = (4 * np.pi) ** n

    def integrand(t, p):
        return scale * np.real(evaluate(state, t, p)) * np.real(evaluate(g, t, p))

    return mc_integrate(integrand, n, cfg)


# ---------------------------------------------------------------------------
# sequential computational-basis sampling
# ---------------------------------------------------------------------------


def projector_poly(n: int, outcomes: dict[int, int]) -> PauliPolynomial:
    """``prod_i (I + (-1)^{b_i} Z_i) / 2`` over the given sites."""
    sites = sorted(outcomes)
    terms = {}
    for mask in itertools.product((0, 1), repeat=len(sites)):
        label = ["I"] * n
        sign = 1
        for use, site in zip(mask, sites):
            if use:
                label[site] = "Z"
                sign *= -1 if outcomes[site] else 1
        terms["".join(label)] = sign / 2 ** len(sites)
    return PauliPolynomial(n, terms)


class BasisSampler:
    """Draw bitstrings qubit by qubit from ``p(b_i | b_1 ... b_{i-1})``.

    Each conditional is a ratio of projector-string expectations, computed by
    exact contraction or (``method="mc"``) by :func:`expectation_mc`.
    Prefix probabilities are memoized.
    """

    def __init__(self, state: PhaseSpaceFunction, method: str = "exact", mc: McConfig | None = None):
        if not state.is_state:
            raise ValidationError("sampling needs a normalized state")
        if method not in ("exact", "mc"):
            raise ValidationError(f"method must be 'exact' or 'mc', got {method!r}")
        self.state = state
        self.method = method
        self.mc = mc or McConfig(n_samples=20_000)
        self._memo: dict[str, float] = {"": 1.0}

    def prefix_probability(self, prefix: str) -> float:
        if prefix in self._memo:
            return self._memo[prefix]
        n = self.state.n_qubits
        proj = projector_poly(n, {i: int(b) for i, b in enumerate(prefix)})
        if self.method == "exact":
            val = expectation_exact(self.state, proj)
        else:
            val, _ = expectation_mc(self.state, proj, self.mc)
        val = min(max(val, 0.0), 1.0)
        self._memo[prefix] = val
        return val

    def conditional(self, prefix: str) -> float:
        """Probability that the next qubit reads 0 given ``prefix``."""
        den = self.prefix_probability(prefix)
        if den < PREFIX_TOL:
            raise ImpossiblePrefixError(f"prefix {prefix!r} has probability {den:.3g}")
        p0 = self.prefix_probability(prefix + "0")
        return min(max(p0 / den, 0.0), 1.0)

    def draw(self, shots: int, seed: int = 0) -> list[str]:
        if shots <= 0:
            raise ValidationError("shots must be positive")
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
        u = rng.random((shots, self.state.n_qubits))
        out = []
        for row in u:
            prefix = ""
            for ui in row:
                prefix += "0" if ui < self.conditional(prefix) else "1"
            out.append(prefix)
        return out


def sample_basis(state: PhaseSpaceFunction, cfg: McConfig | None = None, shots: int = 1,
                 method: str = "exact") -> list[str]:
    """Sequential conditional sampling of computational-basis bitstrings.

    Character ``i`` of each returned string is the outcome on site ``i``.
    """
    cfg = cfg or McConfig()
    return BasisSampler(state, method, cfg).draw(shots, cfg.seed)


# ---------------------------------------------------------------------------
# moment-generating functions
# ---------------------------------------------------------------------------


_AXIS = {"X": 0, "Y": 1, "Z": 2}


def _site_integrals(w: np.ndarray) -> tuple[float, np.ndarray]:
    """``(int e^{w.n}, int n e^{w.n})`` over one sphere."""
    r = float(np.linalg.norm(w))
    if r < SERIES_RADIUS:
        r2 = r * r
        sinhc = 1 + r2 / 6 + r2**2 / 120 + r2**3 / 5040
        g = 1 / 3 + r2 / 30 + r2**2 / 840 + r2**3 / 45360
    else:
        sinhc = math.sinh(r) / r
        g = (r * math.cosh(r) - math.sinh(r)) / r**3
    return 4 * np.pi * sinhc, 4 * np.pi * g * w


def _as_omega(state: PhaseSpaceFunction, omega) -> np.ndarray:
    w = np.asarray(omega, dtype=float).reshape(-1)
    if w.size != 3 * state.n_qubits:
        raise DimensionError(f"omega needs {3 * state.n_qubits} entries, got {w.size}")
    if not np.all(np.isfinite(w)):
        raise ValidationError("omega must be finite")
    return w.reshape(state.n_qubits, 3)


def mgf_eval(state: PhaseSpaceFunction, omega) -> float:
    """Closed form of ``int f^{(s)}(Omega) exp(omega . n) dOmega``.

    ``omega`` lists ``(w_x, w_y, w_z)`` per site.
    """
    w = _as_omega(state, omega)
    per_site = [_site_integrals(wi) for wi in w]
    L = lam(state.s)
    norm = (4 * np.pi) ** state.n_qubits
    total = 0.0
    for p, c in state.coeffs.items():
        term = c.real * L**p.weight
        for i, op in enumerate(p.label):
            I0, In = per_site[i]
            term *= I0 if op == "I" else In[_AXIS[op]]
            if term == 0.0:
                break
        total += term
    return float(total / norm)


def _site_factor(op: str, w: np.ndarray) -> float:
    I0, In = _site_integrals(w)
    return I0 if op == "I" else In[_AXIS[op]]


def _fd_moment(state, string: PauliString, h: float) -> float:
    """Mixed central difference of the MGF at 0 along the string's axes.

    The MGF is a sum of per-site products, so the ``2^w``-point stencil
    factorizes term by term into one-dimensional central differences.  The
    value equals the full stencil; evaluating it sitewise avoids the
    cancellation that the full stencil suffers at high weight.
    """
    axes = {i: _AXIS[op.value] for i, op in enumerate(string.ops) if op.value != "I"}
    if not axes:
        return mgf_eval(state, np.zeros(3 * state.n_qubits))
    L = lam(state.s)
    zero = np.zeros(3)
    total = 0.0
    for p, c in state.coeffs.items():
        term = c.real * L**p.weight
        for i, op in enumerate(p.label):
            if i in axes:
                e = np.zeros(3)
                e[axes[i]] = h
                term *= (_site_factor(op, e) - _site_factor(op, -e)) / (2 * h)
            else:
                term *= _site_factor(op, zero)
            if term == 0.0:
                break
        total += term
    return float(total / (4 * np.pi) ** state.n_qubits)


def mgf_moment(state: PhaseSpaceFunction, string: PauliString | str, h: float = 1e-3,
               richardson: bool = False) -> float:
    """``<P>`` from central differences of the MGF at ``omega = 0``.

    The mixed derivative over the non-identity sites is scaled by
    ``(3 / lam(s))**w(P)``.  Error is ``O(h^2)``; ``richardson=True``
    combines steps ``h`` and ``h/2`` for ``O(h^4)``.
    """
    if not h > 0:
        raise ValidationError("h must be positive")
    if isinstance(string, str):
        string = PauliString.from_label(string)
    if string.n != state.n_qubits:
        raise DimensionError("string and state sizes differ")
    scale = (3.0 / lam(state.s)) ** string.weight
    d = _fd_moment(state, string, h)
    if richardson:
        d = (4 * _fd_moment(state, string, h / 2) - d) / 3
    return float(scale * d)


def mgf_rep_rescale_check(state: PhaseSpaceFunction, s: float, s_new: float, omega) -> dict:
    """Test ``chi^{(s')}(omega) = chi^{(s)}((lam(s')/lam(s)) omega)``.

    Returns the functional residual at ``omega`` and, for comparison, the
    largest residual between the first-order moments of both sides, which
    the linear terms do satisfy.
    """
    check_s(s)
    check_s(s_new)
    k = lam(s_new) / lam(s)
    f_s = state.with_s(s)
    f_new = state.with_s(s_new)
    w = _as_omega(state, omega).reshape(-1)
    functional = abs(mgf_eval(f_new, w) - mgf_eval(f_s, k * w))
    h = 1e-4
    grad = 0.0
    for j in range(w.size):
        e = np.zeros_like(w)
        e[j] = h
        lhs = (mgf_eval(f_new, e) - mgf_eval(f_new, -e)) / (2 * h)
        rhs = (mgf_eval(f_s, k * e) - mgf_eval(f_s, -k * e)) / (2 * h)
        grad = max(grad, abs(lhs - rhs))
    return {"s": s, "s_new": s_new, "scale": k, "functional_residual": float(functional),
            "first_moment_residual": float(grad)}
