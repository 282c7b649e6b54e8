"""Structural diagnostics: marginals, purity, Wehrl entropy, physicality,
product structure and purification consistency."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import oracle
from .brackets import GridFunction, cosine_bracket
from .errors import DimensionError, UnsupportedRepresentationError, ValidationError
from .estimation import McConfig, mc_integrate
from .harmonics import lm_pairs, product_harmonic_coefficients, real_sph_harm
from .pauli import PauliPolynomial, PauliString
from .quadrature import product_rule, sphere_rule
from .sw import PhaseSpaceFunction, evaluate, lam, state_function

Q_FLOOR = 1e-300
PRODUCT_TOL = 1e-8


@dataclass(frozen=True)
class MarginalSpec:
    """Sites to keep out of ``n_qubits``; the rest are integrated out."""

    n_qubits: int
    keep: tuple[int, ...]

    def __post_init__(self):
        keep = tuple(sorted(set(int(k) for k in self.keep)))
        if not keep:
            raise ValidationError("keep set must be nonempty")
        if keep[0] < 0 or keep[-1] >= self.n_qubits:
            raise ValidationError(f"site out of range for {self.n_qubits} qubits")
        object.__setattr__(self, "keep", keep)

    @property
    def trace_out(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n_qubits) if i not in self.keep)


def marginalize(f: PhaseSpaceFunction, keep: Sequence[int] | MarginalSpec) -> PhaseSpaceFunction:
    """Integrate out every site not in ``keep``.

    Strings with a non-identity factor on a traced site integrate to zero;
    the others are restricted to the kept sites with unchanged coefficients.
    """
    spec = keep if isinstance(keep, MarginalSpec) else MarginalSpec(f.n_qubits, tuple(keep))
    if spec.n_qubits != f.n_qubits:
        raise DimensionError("marginal spec size differs from the function")
    traced = spec.trace_out
    out = {}
    for p, c in f.coeffs.items():
        if all(p.op(i).value == "I" for i in traced):
            out[p.restrict(spec.keep)] = c
    poly = PauliPolynomial(len(spec.keep), out)
    return PhaseSpaceFunction(poly, f.s, f.is_state)


def purity_coefficients(f: PhaseSpaceFunction) -> float:
    """``Tr[rho^2] = 2^-N sum_P c_P^2``."""
    return float(sum(abs(c) ** 2 for c in f.coeffs.values()) / 2**f.n_qubits)


def purity_integral(f: PhaseSpaceFunction, order: int = 8) -> float:
    """Quadrature of the phase-space purity formulas.

    One qubit: ``6 pi int Q^2 - 1``.  Two or more: ``(1/2) int {{Q, Q}}``.
    """
    q = f.with_s(-1.0)
    n = f.n_qubits
    if n == 1:
        t, p, w = sphere_rule(order, 2 * order)
        vals = np.real(evaluate(q, t[:, None], p[:, None]))
        return float(6 * np.pi * np.sum(w * vals**2) - 1)
    if n > 3:
        raise DimensionError("integral purity is limited to three qubits")
    br = cosine_bracket(q, q)
    t, p, w = product_rule(n, max(2, order // 4), max(3, order // 2))
    vals = np.real(evaluate(br, t, p))
    return float(0.5 * np.sum(w * vals))


def purity_phase(f: PhaseSpaceFunction, order: int = 8) -> dict:
    """Coefficient purity plus, for ``N <= 2``, the integral form."""
    if not f.is_state:
        raise ValidationError("purity needs a normalized state")
    out = {"coefficient": purity_coefficients(f)}
    if f.n_qubits <= 2:
        out["integral"] = purity_integral(f, order)
    return out


def wehrl_entropy(f: PhaseSpaceFunction, cfg: McConfig | None = None, method: str = "mc",
                  order: int = 64) -> tuple[float, float]:
    """``-int Q log Q`` for a Q function; returns ``(estimate, stderr)``.

    ``method="quadrature"`` (single qubit) is deterministic with stderr 0.
    """
    if abs(f.s + 1.0) > 1e-15:
        raise UnsupportedRepresentationError("Wehrl entropy needs the Q representation (s = -1)")
    if not f.is_state:
        raise ValidationError("Wehrl entropy needs a normalized state")

    def integrand(t, p):
        q = np.maximum(np.real(evaluate(f, t, p)), Q_FLOOR)
        return -q * np.log(q)

    if method == "quadrature":
        if f.n_qubits != 1:
            raise DimensionError("quadrature Wehrl entropy is single-qubit only")
        t, p, w = sphere_rule(order, 2 * order)
        return float(np.sum(w * integrand(t[:, None], p[:, None]))), 0.0
    if method != "mc":
        raise ValidationError(f"unknown method {method!r}")
    return mc_integrate(integrand, f.n_qubits, cfg or McConfig())


def _grid_harmonic_coefficients(g: GridFunction, lmax: int) -> dict:
    th, ph = g.nodes
    tt, pp = np.meshgrid(th, ph, indexing="ij")
    ht, hp = g.h
    w = np.sin(tt) * ht * hp
    return {
        ((l, m),): float(np.sum(w * g.values * real_sph_harm(l, m, tt, pp)))
        for l, m in lm_pairs(lmax)
    }


def physicality_residual(f_raw, lmax_check: int = 4, order: int | None = None,
                         n_sites: int | None = None) -> float:
    """L2 norm of the harmonic content with some site degree ``l > 1``.

    Parameters
    ----------
    f_raw : PhaseSpaceFunction, GridFunction or callable
        Callables take ``(thetas, phis)`` of shape ``(M, N)`` and need
        ``n_sites``.  Grid input uses the midpoint rule and is approximate.
    lmax_check : int
        Highest per-site degree probed (at least 2).
    order : int
        Gauss-Legendre nodes in ``cos(theta)`` per sphere; must be
        ``>= 2 * lmax_check``.
    """
    if lmax_check < 2:
        raise ValidationError("lmax_check must be at least 2")
    order = 2 * lmax_check if order is None else order
    if order < 2 * lmax_check:
        raise ValidationError(f"quadrature order {order} < 2 * lmax_check = {2 * lmax_check}")
    if isinstance(f_raw, GridFunction):
        coeffs = _grid_harmonic_coefficients(f_raw, lmax_check)
    else:
        if isinstance(f_raw, PhaseSpaceFunction):
            n_sites = f_raw.n_qubits
            fn = lambda t, p, f=f_raw: np.real(evaluate(f, t, p))
        else:
            if n_sites is None:
                raise ValidationError("callable input needs n_sites")
            fn = f_raw
        if n_sites > 2:
            raise DimensionError("physicality check is limited to two sites")
        coeffs = product_harmonic_coefficients(fn, n_sites, lmax_check, order)
    outside = sum(c * c for key, c in coeffs.items() if any(l > 1 for l, _ in key))
    return float(math.sqrt(outside))


def _matricize(f: PhaseSpaceFunction, part_a: Sequence[int]):
    n = f.n_qubits
    a = sorted(part_a)
    b = [i for i in range(n) if i not in a]
    la = ["".join(x) for x in itertools.product("IXYZ", repeat=len(a))]
    lb = ["".join(x) for x in itertools.product("IXYZ", repeat=len(b))]
    ia = {s: i for i, s in enumerate(la)}
    ib = {s: i for i, s in enumerate(lb)}
    m = np.zeros((len(la), len(lb)))
    for p, c in f.coeffs.items():
        lab = p.label
        m[ia["".join(lab[i] for i in a)], ib["".join(lab[i] for i in b)]] = c.real
    return m, a, b


def product_test(f: PhaseSpaceFunction, part_a: Sequence[int], tol: float = PRODUCT_TOL):
    """Rank-1 test of the coefficient matrix across ``part_a | rest``.

    Returns ``(is_product, factors)``; ``factors`` are the marginals on
    ``part_a`` and its complement when the test passes, else ``None``.
    """
    if not f.is_state:
        raise ValidationError("product test needs a normalized state")
    n = f.n_qubits
    part = sorted(set(part_a))
    if not part or len(part) == n or part[0] < 0 or part[-1] >= n:
        raise ValidationError("bipartition must split the sites into two nonempty parts")
    if n > 8:
        raise DimensionError("product test is limited to 8 qubits")
    m, a, b = _matricize(f, part)
    sv = np.linalg.svd(m, compute_uv=False)
    is_product = bool(sv.size < 2 or sv[1] <= tol * sv[0])
    if not is_product:
        return False, None
    return True, (marginalize(f, a), marginalize(f, b))


def dilation_check(rho_poly: PauliPolynomial, s: float = -1.0) -> dict:
    """Purify, lift to the extended manifold, marginalize the ancilla, compare.

    Residual is the largest deviation between evaluated coefficients
    ``c_P lam(s)^w`` of the original state and of the ancilla marginal.
    """
    n = rho_poly.n_qubits
    if n > 3:
        raise DimensionError("dilation check is limited to three system qubits")
    rho = oracle.density_from_poly(rho_poly, check_state=True)
    psi, n_anc = oracle.purify(rho)
    if n + n_anc > oracle.MAX_QUBITS:
        raise DimensionError("purification exceeds the oracle cap")
    pure = state_function(oracle.poly_from_density(oracle.pure_density(psi)).real(), s)
    marg = marginalize(pure, range(n))
    orig = state_function(rho_poly.real(), s)
    a = orig.evaluated_coefficients()
    b = marg.evaluated_coefficients()
    keys = set(a) | set(b)
    resid = max(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)
    return {"residual": float(resid), "n_ancilla": int(n_anc), "s": float(s),
            "lam": float(lam(s))}


def rank_report(f: PhaseSpaceFunction, tol: float = oracle.RANK_TOL) -> dict:
    """Operator rank beside the dimension of ``{A : A rho = A}``."""
    rho = oracle.density_from_poly(f.coeffs)
    return {"rank": oracle.rank_oracle(rho, tol), "star_fixed_point_dim": oracle.star_fixed_point_dim(rho, tol)}


def diagnostic_report(f: PhaseSpaceFunction, cfg: McConfig | None = None) -> dict:
    """Purity, Wehrl estimate, physicality residual and product flags."""
    cfg = cfg or McConfig(n_samples=50_000)
    q = f.with_s(-1.0)
    out = {"n_qubits": f.n_qubits, "purity": purity_phase(f)}
    if f.n_qubits == 1:
        est, err = wehrl_entropy(q, method="quadrature")
        out["wehrl"] = {"estimate": est, "stderr": err, "method": "quadrature"}
    else:
        est, err = wehrl_entropy(q, cfg)
        out["wehrl"] = {"estimate": est, "stderr": err, "method": "mc", "seed": int(cfg.seed),
                        "n_samples": int(cfg.n_samples)}
    if f.n_qubits <= 2:
        out["physicality_residual"] = physicality_residual(f, 3)
    flags = {}
    if f.n_qubits > 1:
        for k in range(1, f.n_qubits // 2 + 1):
            for part in itertools.combinations(range(f.n_qubits), k):
                if 2 * k == f.n_qubits and 0 not in part:
                    continue  # complement already listed
                flags[",".join(str(i + 1) for i in part)] = product_test(f, part)[0]
    out["product"] = flags
    if f.n_qubits <= oracle.MAX_QUBITS:
        out["rank"] = rank_report(f)
    return out
