import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from spinphase.pauli import PauliPolynomial, PauliString

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

LABELS = "IXYZ"


def labels(n):
    return ["".join(t) for t in itertools.product(LABELS, repeat=n)]


@st.composite
def pauli_strings(draw, n):
    return PauliString.from_label("".join(draw(st.lists(st.sampled_from(LABELS), min_size=n, max_size=n))))


@st.composite
def polys(draw, n, max_terms=6, real=False):
    k = draw(st.integers(1, max_terms))
    terms = {}
    num = st.floats(-2, 2, allow_nan=False, allow_infinity=False)
    for _ in range(k):
        p = draw(pauli_strings(n))
        re = draw(num)
        im = 0.0 if real else draw(num)
        terms[p] = terms.get(p, 0j) + complex(re, im)
    return PauliPolynomial(n, terms)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_angles(rng, m, n):
    """Uniform points on (S^2)^n, shape (m, n)."""
    u = rng.uniform(-1, 1, size=(m, n))
    return np.arccos(u), rng.uniform(0, 2 * np.pi, size=(m, n))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
