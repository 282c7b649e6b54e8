"""Exact algebra of N-qubit Pauli strings and sparse polynomials over them."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from . import _kernels
from .errors import DimensionError

PRUNE_TOL = 1e-12

_PHASES = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


class PauliOp(enum.Enum):
    I = "I"
    X = "X"
    Y = "Y"
    Z = "Z"

    @property
    def bits(self) -> tuple[int, int]:
        return _OP_BITS[self]


_OP_BITS = {PauliOp.I: (0, 0), PauliOp.X: (1, 0), PauliOp.Y: (1, 1), PauliOp.Z: (0, 1)}
_BITS_OP = {v: k for k, v in _OP_BITS.items()}


@dataclass(frozen=True)
class PauliString:
    """A length-``n`` Pauli word stored as symplectic bit masks.

    Site ``i`` (0-based, leftmost in the label) occupies bit ``n - 1 - i`` of
    both masks, so the masks double as computational-basis indices.
    """

    n: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise DimensionError("a Pauli string needs at least one site")
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full:
            raise DimensionError("bit masks exceed the string length")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        label = label.strip().upper()
        if not label:
            raise DimensionError("empty Pauli label")
        n = len(label)
        x = z = 0
        for i, ch in enumerate(label):
            try:
                bx, bz = _OP_BITS[PauliOp(ch)]
            except ValueError:
                raise ValueError(f"invalid Pauli character {ch!r} in {label!r}") from None
            x |= bx << (n - 1 - i)
            z |= bz << (n - 1 - i)
        return cls(n, x, z)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0)

    @classmethod
    def single(cls, n: int, site: int, op: str | PauliOp) -> "PauliString":
        """``op`` on 0-based ``site``, identity elsewhere."""
        bx, bz = _OP_BITS[PauliOp(op)]
        sh = n - 1 - site
        return cls(n, bx << sh, bz << sh)

    def op(self, site: int) -> PauliOp:
        sh = self.n - 1 - site
        return _BITS_OP[((self.x >> sh) & 1, (self.z >> sh) & 1)]

    @property
    def ops(self) -> tuple[PauliOp, ...]:
        return tuple(self.op(i) for i in range(self.n))

    @property
    def label(self) -> str:
        return "".join(o.value for o in self.ops)

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if self.op(i) is not PauliOp.I)

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def commutes_with(self, other: "PauliString") -> bool:
        return ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) % 2 == 0

    def restrict(self, sites: Iterable[int]) -> "PauliString":
        sites = list(sites)
        return PauliString.from_label("".join(self.op(i).value for i in sites))

    def __str__(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"PauliString({self.label!r})"


def _phase_exponent(ax: int, az: int, bx: int, bz: int) -> int:
    a_x, a_y, a_z = ax & ~az, ax & az, ~ax & az
    b_x, b_y, b_z = bx & ~bz, bx & bz, ~bx & bz
    plus = (a_x & b_y) | (a_y & b_z) | (a_z & b_x)
    minus = (a_x & b_z) | (a_y & b_x) | (a_z & b_y)
    return (plus.bit_count() - minus.bit_count()) % 4


def mul_strings(a: PauliString, b: PauliString) -> tuple[int, PauliString]:
    """Multiply two Pauli strings.

    Returns ``(k, c)`` with ``a @ b == 1j**k * c`` as operators; the phase is
    kept as an exact element of Z4.
    """
    if a.n != b.n:
        raise DimensionError(f"length mismatch: {a.n} vs {b.n}")
    return _phase_exponent(a.x, a.z, b.x, b.z), PauliString(a.n, a.x ^ b.x, a.z ^ b.z)


class PauliPolynomial(Mapping):
    """Sparse complex combination of Pauli strings, ``sum_P c_P P``.

    Immutable; arithmetic returns new instances with coefficients of modulus
    below ``PRUNE_TOL`` dropped.
    """

    __slots__ = ("_n", "_terms")

    def __init__(self, n_qubits: int, terms: Mapping[PauliString | str, complex] | None = None):
        if n_qubits < 1:
            raise DimensionError("n_qubits must be positive")
        self._n = int(n_qubits)
        store: dict[PauliString, complex] = {}
        for key, val in (terms or {}).items():
            p = PauliString.from_label(key) if isinstance(key, str) else key
            if p.n != self._n:
                raise DimensionError(f"string {p.label} does not have {self._n} sites")
            store[p] = store.get(p, 0j) + complex(val)
        self._terms = {p: c for p, c in store.items() if abs(c) >= PRUNE_TOL}

    # -- construction -----------------------------------------------------
    @classmethod
    def from_labels(cls, terms: Mapping[str, complex]) -> "PauliPolynomial":
        if not terms:
            raise DimensionError("cannot infer n_qubits from an empty mapping")
        n = len(next(iter(terms)))
        return cls(n, terms)

    @classmethod
    def identity(cls, n: int, coeff: complex = 1.0) -> "PauliPolynomial":
        return cls(n, {PauliString.identity(n): coeff})

    @classmethod
    def zero(cls, n: int) -> "PauliPolynomial":
        return cls(n)

    @classmethod
    def _from_arrays(cls, n, x, z, c) -> "PauliPolynomial":
        obj = cls.__new__(cls)
        obj._n = n
        keep = np.abs(c) >= PRUNE_TOL
        obj._terms = {
            PauliString(n, int(xi), int(zi)): complex(ci)
            for xi, zi, ci in zip(x[keep], z[keep], c[keep])
        }
        return obj

    # -- mapping protocol ---------------------------------------------------
    def __getitem__(self, key) -> complex:
        if isinstance(key, str):
            key = PauliString.from_label(key)
        return self._terms[key]

    def get(self, key, default=0j):
        try:
            return self[key]
        except KeyError:
            return default

    def __iter__(self) -> Iterator[PauliString]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def n_qubits(self) -> int:
        return self._n

    @property
    def terms(self) -> dict[PauliString, complex]:
        return dict(self._terms)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symplectic masks and coefficients as parallel numpy arrays."""
        keys = list(self._terms)
        x = np.fromiter((p.x for p in keys), dtype=np.uint64, count=len(keys))
        z = np.fromiter((p.z for p in keys), dtype=np.uint64, count=len(keys))
        c = np.fromiter(self._terms.values(), dtype=np.complex128, count=len(keys))
        return x, z, c

    def is_hermitian(self, tol: float = PRUNE_TOL) -> bool:
        return all(abs(c.imag) < tol for c in self._terms.values())

    def real(self) -> "PauliPolynomial":
        return PauliPolynomial(self._n, {p: c.real for p, c in self._terms.items()})

    def conj(self) -> "PauliPolynomial":
        """Adjoint: Pauli strings are Hermitian, so only coefficients conjugate."""
        return PauliPolynomial(self._n, {p: c.conjugate() for p, c in self._terms.items()})

    def max_weight(self) -> int:
        return max((p.weight for p in self._terms), default=0)

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other: "PauliPolynomial"):
        if not isinstance(other, PauliPolynomial):
            return NotImplemented
        if other._n != self._n:
            raise DimensionError(f"n_qubits mismatch: {self._n} vs {other._n}")

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PauliPolynomial.identity(self._n, other)
        self._check(other)
        out = dict(self._terms)
        for p, c in other._terms.items():
            out[p] = out.get(p, 0j) + c
        return PauliPolynomial(self._n, out)

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return PauliPolynomial(self._n, {p: c * other for p, c in self._terms.items()})
        return poly_product(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def __matmul__(self, other):
        return poly_product(self, other)

    def __truediv__(self, other):
        return self * (1.0 / other)

    def __eq__(self, other):
        if not isinstance(other, PauliPolynomial):
            return NotImplemented
        return self._n == other._n and self._terms == other._terms

    def __hash__(self):
        return hash((self._n, frozenset(self._terms.items())))

    def allclose(self, other: "PauliPolynomial", atol: float = 1e-12) -> bool:
        if other._n != self._n:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.get(k) - other.get(k)) <= atol for k in keys)

    def distance(self, other: "PauliPolynomial") -> float:
        """Max coefficient-wise modulus of the difference."""
        keys = set(self._terms) | set(other._terms)
        return max((abs(self.get(k) - other.get(k)) for k in keys), default=0.0)

    def __repr__(self) -> str:
        body = ", ".join(f"{p.label}: {c:.6g}" for p, c in sorted(self._terms.items(), key=lambda t: t[0].label))
        return f"PauliPolynomial({self._n}, {{{body}}})"

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "n_qubits": self._n,
            "terms": [
                {"string": p.label, "re": float(c.real), "im": float(c.imag)}
                for p, c in sorted(self._terms.items(), key=lambda t: t[0].label)
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: Mapping) -> "PauliPolynomial":
        try:
            n = int(data["n_qubits"])
            terms: dict[PauliString, complex] = {}
            for entry in data["terms"]:
                p = PauliString.from_label(entry["string"])
                terms[p] = terms.get(p, 0j) + complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0)))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed PauliPolynomial object: {exc}") from exc
        return cls(n, terms)

    @classmethod
    def from_json(cls, text: str) -> "PauliPolynomial":
        return cls.from_dict(json.loads(text))


def poly_product(a: PauliPolynomial, b: PauliPolynomial) -> PauliPolynomial:
    """Coefficients of the operator product ``A @ B``."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"n_qubits mismatch: {a.n_qubits} vs {b.n_qubits}")
    n = a.n_qubits
    if not len(a) or not len(b):
        return PauliPolynomial.zero(n)
    ax, az, ac = a.arrays()
    bx, bz, bc = b.arrays()
    cx, cz, ph = _kernels.pair_products(ax, az, bx, bz)
    coeff = np.outer(ac, bc).ravel() * np.asarray(_PHASES)[ph]
    return _accumulate(n, cx, cz, coeff)


def _accumulate(n, cx, cz, coeff) -> PauliPolynomial:
    if 2 * n <= 64:
        key = (cx << np.uint64(n)) | cz
        uniq, inv = np.unique(key, return_inverse=True)
        summed = np.zeros(uniq.shape[0], dtype=np.complex128)
        np.add.at(summed, inv, coeff)
        mask = np.uint64((1 << n) - 1)
        return PauliPolynomial._from_arrays(n, uniq >> np.uint64(n), uniq & mask, summed)
    stacked = np.stack([cx, cz], axis=1)
    uniq, inv = np.unique(stacked, axis=0, return_inverse=True)
    summed = np.zeros(uniq.shape[0], dtype=np.complex128)
    np.add.at(summed, inv.ravel(), coeff)
    return PauliPolynomial._from_arrays(n, uniq[:, 0], uniq[:, 1], summed)


def commutator_poly(a: PauliPolynomial, b: PauliPolynomial) -> PauliPolynomial:
    """Polynomial of ``-i[A, B]``."""
    return (poly_product(a, b) - poly_product(b, a)) * (-1j)


def anticommutator_poly(a: PauliPolynomial, b: PauliPolynomial) -> PauliPolynomial:
    """Polynomial of ``{A, B}``."""
    return poly_product(a, b) + poly_product(b, a)


def embed(poly: PauliPolynomial, n_qubits: int, sites: Iterable[int]) -> PauliPolynomial:
    """Place a ``k``-qubit polynomial onto the given 0-based ``sites`` of ``n_qubits``."""
    sites = list(sites)
    if len(sites) != poly.n_qubits:
        raise DimensionError("number of sites must match the polynomial size")
    out = {}
    for p, c in poly.items():
        label = ["I"] * n_qubits
        for local, site in enumerate(sites):
            label[site] = p.op(local).value
        out[PauliString.from_label("".join(label))] = c
    return PauliPolynomial(n_qubits, out)


def tensor(a: PauliPolynomial, b: PauliPolynomial) -> PauliPolynomial:
    """Kronecker product, ``a`` on the leading sites."""
    out = {}
    for p, cp in a.items():
        for q, cq in b.items():
            out[PauliString.from_label(p.label + q.label)] = cp * cq
    return PauliPolynomial(a.n_qubits + b.n_qubits, out)
