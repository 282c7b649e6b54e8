"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time from the ``SPINPHASE_BACKEND``
environment variable (``numba`` or ``numpy``).  When unset, numba is used if
it imports cleanly.  Both paths are always importable as ``numba_impl`` and
``numpy_impl`` so tests and benchmarks can compare them directly.

Pauli strings are encoded symplectically as a pair of unsigned 64-bit masks
``(x, z)``; a site carries X if only its x bit is set, Z if only its z bit is
set, and Y if both are set.
"""

from __future__ import annotations

import os
import types

import numpy as np

__all__ = [
    "BACKEND",
    "pair_products",
    "eval_terms",
    "numpy_impl",
    "numba_impl",
]

_MASK55 = np.uint64(0x5555555555555555)
_MASK33 = np.uint64(0x3333333333333333)
_MASK0F = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------


def _phase_exponent_np(ax, az, bx, bz):
    a_x = ax & ~az
    a_y = ax & az
    a_z = ~ax & az
    b_x = bx & ~bz
    b_y = bx & bz
    b_z = ~bx & bz
    plus = (a_x & b_y) | (a_y & b_z) | (a_z & b_x)
    minus = (a_x & b_z) | (a_y & b_x) | (a_z & b_y)
    return (np.bitwise_count(plus).astype(np.int64) - np.bitwise_count(minus)) % 4


def _pair_products_np(ax, az, bx, bz):
    ax = np.asarray(ax, dtype=np.uint64)[:, None]
    az = np.asarray(az, dtype=np.uint64)[:, None]
    bx = np.asarray(bx, dtype=np.uint64)[None, :]
    bz = np.asarray(bz, dtype=np.uint64)[None, :]
    ph = _phase_exponent_np(ax, az, bx, bz)
    return (ax ^ bx).ravel(), (az ^ bz).ravel(), ph.ravel()


def _site_codes(x, z, n_sites):
    # 0=I, 1=X, 2=Y, 3=Z per site; site i sits at bit n_sites-1-i
    shifts = np.arange(n_sites - 1, -1, -1, dtype=np.uint64)
    xb = (np.asarray(x, dtype=np.uint64)[:, None] >> shifts) & np.uint64(1)
    zb = (np.asarray(z, dtype=np.uint64)[:, None] >> shifts) & np.uint64(1)
    xb = xb.astype(np.int64)
    zb = zb.astype(np.int64)
    return np.where(xb == 1, 1 + zb, 3 * zb)


def _eval_terms_np(x, z, weights, nvec, chunk=4096):
    nvec = np.asarray(nvec, dtype=np.float64)
    m, n_sites, _ = nvec.shape
    codes = _site_codes(x, z, n_sites)
    table = np.concatenate([np.ones((m, n_sites, 1)), nvec], axis=2)
    out = np.empty(m)
    weights = np.asarray(weights, dtype=np.float64)
    site_idx = np.arange(n_sites)
    for start in range(0, m, chunk):
        block = table[start:start + chunk]
        prod = np.ones((block.shape[0], codes.shape[0]))
        for i in site_idx:
            prod *= block[:, i, codes[:, i]]
        out[start:start + chunk] = prod @ weights
    return out


numpy_impl = types.SimpleNamespace(
    name="numpy",
    pair_products=_pair_products_np,
    eval_terms=_eval_terms_np,
)


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------


def _build_numba():
    import numba

    @numba.njit(cache=True, inline="always")
    def popcount(v):
        v = v - ((v >> np.uint64(1)) & _MASK55)
        v = (v & _MASK33) + ((v >> np.uint64(2)) & _MASK33)
        v = (v + (v >> np.uint64(4))) & _MASK0F
        return (v * _H01) >> np.uint64(56)

    @numba.njit(cache=True, nogil=True)
    def pair_products(ax, az, bx, bz):
        na = ax.shape[0]
        nb = bx.shape[0]
        cx = np.empty(na * nb, dtype=np.uint64)
        cz = np.empty(na * nb, dtype=np.uint64)
        ph = np.empty(na * nb, dtype=np.int64)
        for i in range(na):
            a1 = ax[i]
            a2 = az[i]
            a_x = a1 & ~a2
            a_y = a1 & a2
            a_z = ~a1 & a2
            for j in range(nb):
                b1 = bx[j]
                b2 = bz[j]
                b_x = b1 & ~b2
                b_y = b1 & b2
                b_z = ~b1 & b2
                plus = (a_x & b_y) | (a_y & b_z) | (a_z & b_x)
                minus = (a_x & b_z) | (a_y & b_x) | (a_z & b_y)
                k = i * nb + j
                cx[k] = a1 ^ b1
                cz[k] = a2 ^ b2
                ph[k] = (np.int64(popcount(plus)) - np.int64(popcount(minus))) % 4
        return cx, cz, ph

    @numba.njit(cache=True, nogil=True)
    def eval_terms(x, z, weights, nvec):
        m = nvec.shape[0]
        n_sites = nvec.shape[1]
        t = x.shape[0]
        out = np.zeros(m)
        one = np.uint64(1)
        for p in range(m):
            acc = 0.0
            for k in range(t):
                val = weights[k]
                xk = x[k]
                zk = z[k]
                for i in range(n_sites):
                    sh = np.uint64(n_sites - 1 - i)
                    xb = (xk >> sh) & one
                    zb = (zk >> sh) & one
                    if xb == one:
                        if zb == one:
                            val *= nvec[p, i, 1]
                        else:
                            val *= nvec[p, i, 0]
                    elif zb == one:
                        val *= nvec[p, i, 2]
                acc += val
            out[p] = acc
        return out

    def _pair(ax, az, bx, bz):
        return pair_products(
            np.ascontiguousarray(ax, dtype=np.uint64),
            np.ascontiguousarray(az, dtype=np.uint64),
            np.ascontiguousarray(bx, dtype=np.uint64),
            np.ascontiguousarray(bz, dtype=np.uint64),
        )

    def _eval(x, z, weights, nvec):
        return eval_terms(
            np.ascontiguousarray(x, dtype=np.uint64),
            np.ascontiguousarray(z, dtype=np.uint64),
            np.ascontiguousarray(weights, dtype=np.float64),
            np.ascontiguousarray(nvec, dtype=np.float64),
        )

    return types.SimpleNamespace(name="numba", pair_products=_pair, eval_terms=_eval)


try:
    numba_impl = _build_numba()
except ImportError:  # pragma: no cover - numba ships with the environment
    numba_impl = None


def _select():
    requested = os.environ.get("SPINPHASE_BACKEND", "").strip().lower()
    if requested == "numpy" or numba_impl is None:
        return numpy_impl
    if requested not in ("", "numba"):
        raise ValueError(f"unknown SPINPHASE_BACKEND {requested!r}")
    return numba_impl


_impl = _select()
BACKEND = _impl.name
pair_products = _impl.pair_products
eval_terms = _impl.eval_terms
