import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinphase import _kernels
from spinphase.quadrature import bloch

needs_numba = pytest.mark.skipif(_kernels.numba_impl is None, reason="numba not importable")


def _masks(rng, t, n):
    x = rng.integers(0, 2**n, size=t, dtype=np.uint64)
    z = rng.integers(0, 2**n, size=t, dtype=np.uint64)
    return x, z


@needs_numba
@given(st.integers(1, 12), st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_pair_products_agree(n, ta, tb, seed):
    rng = np.random.default_rng(seed)
    ax, az = _masks(rng, ta, n)
    bx, bz = _masks(rng, tb, n)
    a = _kernels.numpy_impl.pair_products(ax, az, bx, bz)
    b = _kernels.numba_impl.pair_products(ax, az, bx, bz)
    for u, v in zip(a, b):
        np.testing.assert_array_equal(np.asarray(u), np.asarray(v))


@needs_numba
@given(st.integers(1, 6), st.integers(1, 30), st.integers(1, 50), st.integers(0, 2**32 - 1))
def test_eval_terms_agree(n, t, m, seed):
    rng = np.random.default_rng(seed)
    x, z = _masks(rng, t, n)
    w = rng.normal(size=t)
    th = np.arccos(rng.uniform(-1, 1, size=(m, n)))
    ph = rng.uniform(0, 2 * np.pi, size=(m, n))
    nvec = bloch(th, ph)
    a = _kernels.numpy_impl.eval_terms(x, z, w, nvec)
    b = _kernels.numba_impl.eval_terms(x, z, w, nvec)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_env_flag_selects_numpy():
    env = dict(os.environ, SPINPHASE_BACKEND="numpy")
    out = subprocess.run([sys.executable, "-c", "import spinphase; print(spinphase.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_env_flag_rejects_unknown():
    env = dict(os.environ, SPINPHASE_BACKEND="fortran")
    out = subprocess.run([sys.executable, "-c", "import spinphase"], env=env, capture_output=True, text=True)
    assert out.returncode != 0 and "SPINPHASE_BACKEND" in out.stderr


def test_results_identical_across_backends():
    code = ("import spinphase as sp;"
            "f=sp.state_library('w');"
            "print(repr(sp.expectation_mc(f, sp.PauliPolynomial.from_labels({'ZZI':1}), sp.McConfig(20000, seed=1))))")
    outs = []
    for backend in ("numpy", "numba"):
        env = dict(os.environ, SPINPHASE_BACKEND=backend)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                                   check=True).stdout)
    a, b = (eval(o.replace("np.float64", "")) for o in outs)
    assert abs(a[0] - b[0]) < 1e-12 and abs(a[1] - b[1]) < 1e-12


@needs_numba
def test_benchmark_quick_run():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    out = subprocess.run([sys.executable, os.path.join(root, "benchmarks", "bench_kernels.py"), "--quick",
                          "--repeat", "1"], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "pair_products" in out.stdout and "eval_terms" in out.stdout
