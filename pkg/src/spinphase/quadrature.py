"""Sphere quadrature rules and reproducible uniform sampling on (S^2)^N."""

from __future__ import annotations

import itertools

import numpy as np

from .errors import ValidationError

SAMPLE_CHUNK = 8192


def sphere_rule(n_theta: int = 64, n_phi: int | None = None):
    """Gauss-Legendre in ``cos(theta)`` times the uniform rule in ``phi``.

    Returns flat ``(theta, phi, weight)`` arrays; the weights sum to ``4*pi``.
    Exact for band-limited functions up to degree ``min(2*n_theta-1, n_phi-1)``.
    """
    n_phi = n_theta if n_phi is None else n_phi
    if n_theta < 1 or n_phi < 1:
        raise ValidationError("quadrature orders must be positive")
    u, wu = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(u)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    ww = np.outer(wu, np.full(n_phi, 2 * np.pi / n_phi))
    return tt.ravel(), pp.ravel(), ww.ravel()


def product_rule(n_sites: int, n_theta: int = 8, n_phi: int | None = None):
    """Tensor product of :func:`sphere_rule` over ``n_sites`` spheres.

    Returns ``thetas`` and ``phis`` of shape ``(M, n_sites)`` and weights ``(M,)``.
    """
    t, p, w = sphere_rule(n_theta, n_phi)
    idx = np.array(list(itertools.product(range(t.size), repeat=n_sites)))
    return t[idx], p[idx], np.prod(w[idx], axis=1)


def bloch(thetas, phis) -> np.ndarray:
    """Unit vectors ``n(theta, phi)``, stacked on a trailing axis of size 3."""
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    st = np.sin(thetas)
    return np.stack([st * np.cos(phis), st * np.sin(phis), np.cos(thetas)], axis=-1)


def _chunk_generator(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def uniform_chunk(seed: int, chunk: int, size: int, n_sites: int):
    """Uniform points for one fixed-size chunk of the sample index range.

    Streams are keyed by ``(seed, chunk)`` so any partition of chunks across
    workers reproduces the same samples.
    """
    g = _chunk_generator(seed, chunk)
    u = g.uniform(-1.0, 1.0, size=(size, n_sites))
    phi = g.uniform(0.0, 2 * np.pi, size=(size, n_sites))
    return np.arccos(u), phi


def iter_chunks(n_samples: int, chunk: int = SAMPLE_CHUNK):
    """``(chunk_index, size)`` pairs covering ``range(n_samples)``."""
    k = 0
    for start in range(0, n_samples, chunk):
        yield k, min(chunk, n_samples - start)
        k += 1


def uniform_points(seed: int, n_samples: int, n_sites: int):
    ts, ps = [], []
    for k, size in iter_chunks(n_samples):
        t, p = uniform_chunk(seed, k, size, n_sites)
        ts.append(t)
        ps.append(p)
    return np.concatenate(ts), np.concatenate(ps)
