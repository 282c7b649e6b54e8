"""Real spherical harmonics, quadrature-based transforms, and the heat-kernel flow."""

from __future__ import annotations

import itertools

import numpy as np
from scipy.special import sph_harm_y

from .quadrature import product_rule, sphere_rule

LOG3 = np.log(3.0)


def real_sph_harm(l: int, m: int, theta, phi) -> np.ndarray:
    """Orthonormal real harmonic ``Y_lm`` with ``theta`` the polar angle."""
    if abs(m) > l:
        raise ValueError("|m| must not exceed l")
    if m == 0:
        return np.real(sph_harm_y(l, 0, theta, phi))
    y = sph_harm_y(l, abs(m), theta, phi)
    factor = np.sqrt(2.0) * (-1) ** m
    return factor * (np.real(y) if m > 0 else np.imag(y))


def lm_pairs(lmax: int):
    return [(l, m) for l in range(lmax + 1) for m in range(-l, l + 1)]


def sht(values, theta, phi, weights, lmax: int) -> dict[tuple[int, int], float]:
    """Project samples on one sphere onto real harmonics up to ``lmax``."""
    values = np.asarray(values, dtype=float)
    return {
        (l, m): float(np.sum(weights * values * real_sph_harm(l, m, theta, phi)))
        for l, m in lm_pairs(lmax)
    }


def inverse_sht(coeffs: dict[tuple[int, int], float], theta, phi) -> np.ndarray:
    out = np.zeros(np.shape(theta))
    for (l, m), c in coeffs.items():
        out = out + c * real_sph_harm(l, m, theta, phi)
    return out


def heat_flow_1q(values, s_from: float, s_to: float, n_theta: int = 32, lmax: int = 8):
    """Move samples of a single-sphere function from index ``s_from`` to ``s_to``.

    ``values`` must be given on ``sphere_rule(n_theta, 2*n_theta)``.  Each
    harmonic of degree ``l`` is multiplied by ``exp((s_to - s_from) log3 / 4 * l(l+1))``,
    i.e. the operator ``exp(-(s_to - s_from) log3/4 * Laplacian)``.
    """
    t, p, w = sphere_rule(n_theta, 2 * n_theta)
    coeffs = sht(values, t, p, w, lmax)
    ds = s_to - s_from
    scaled = {(l, m): c * np.exp(ds * LOG3 / 4 * l * (l + 1)) for (l, m), c in coeffs.items()}
    return inverse_sht(scaled, t, p)


def product_harmonic_coefficients(func, n_sites: int, lmax: int, order: int):
    """Coefficients of ``func(thetas, phis)`` on products of real harmonics.

    ``func`` receives arrays of shape ``(M, n_sites)``.  Returns a dict keyed by
    tuples of per-site ``(l, m)`` pairs.
    """
    thetas, phis, w = product_rule(n_sites, order, 2 * order)
    vals = np.asarray(func(thetas, phis), dtype=float)
    pairs = lm_pairs(lmax)
    site_tables = [
        {lm: real_sph_harm(lm[0], lm[1], thetas[:, i], phis[:, i]) for lm in pairs}
        for i in range(n_sites)
    ]
    out = {}
    wv = w * vals
    for combo in itertools.product(pairs, repeat=n_sites):
        basis = np.ones_like(wv)
        for i, lm in enumerate(combo):
            basis = basis * site_tables[i][lm]
        out[combo] = float(np.dot(wv, basis))
    return out
