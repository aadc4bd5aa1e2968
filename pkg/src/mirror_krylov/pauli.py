"""Pauli strings and Pauli linear combinations (LCU form of a qubit Hamiltonian).

A string is stored as two bit masks. Bit k of ``x`` (``z``) says whether qubit k
carries an X (Z) factor, and the Hermitian string for (x, z) is

    P(x, z) = prod_k  i^{x_k z_k} X_k^{x_k} Z_k^{z_k}

so (1, 1) on one qubit is Y. Qubit 0 is the least-significant bit of a
statevector index. In text labels the leftmost character is qubit 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_QUBIT_CAP = 14
COEFF_TOL = 1e-12

_LABEL_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LABEL = {v: k for k, v in _LABEL_BITS.items()}
_I_POW = np.array([1, 1j, -1, -1j])


class DimensionCapError(ValueError):
    """Raised when a dense realization would exceed the configured qubit cap."""


def popcount(a):
    return np.bitwise_count(np.asarray(a, dtype=np.uint64)).astype(np.int64)


@dataclass(frozen=True)
class PauliString:
    """i^phase * P(x, z) on ``n_qubits`` qubits."""

    n_qubits: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n_qubits < 0:
            raise ValueError("n_qubits must be nonnegative")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError(f"masks do not fit in {self.n_qubits} qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        x = z = 0
        for k, ch in enumerate(label):
            if ch not in _LABEL_BITS:
                raise ValueError(f"invalid Pauli character {ch!r} in {label!r}")
            bx, bz = _LABEL_BITS[ch]
            x |= bx << k
            z |= bz << k
        return cls(len(label), x, z)

    @property
    def label(self) -> str:
        return "".join(
            _BITS_LABEL[((self.x >> k) & 1, (self.z >> k) & 1)] for k in range(self.n_qubits)
        )

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit counts differ")
        x, z = self.x ^ other.x, self.z ^ other.z
        e = (
            self.phase
            + other.phase
            + (self.x & self.z).bit_count()
            + (other.x & other.z).bit_count()
            + 2 * (self.z & other.x).bit_count()
            - (x & z).bit_count()
        )
        return PauliString(self.n_qubits, x, z, e)

    def to_dense(self) -> np.ndarray:
        d = 1 << self.n_qubits
        rows = np.arange(d)
        cols = rows ^ self.x
        vals = _string_values(self.n_qubits, self.x, self.z, self.phase)
        out = np.zeros((d, d), dtype=complex)
        out[rows, cols] = vals
        return out

    def __str__(self):
        pre = {0: "", 1: "i", 2: "-", 3: "-i"}[self.phase]
        return pre + self.label


def _string_values(n_qubits: int, x: int, z: int, phase: int = 0) -> np.ndarray:
    """Nonzero entries of i^phase P(x,z): row c, column c^x."""
    c = np.arange(1 << n_qubits, dtype=np.uint64)
    sign = 1 - 2 * (popcount((c ^ np.uint64(x)) & np.uint64(z)) & 1)
    return _I_POW[(phase + (x & z).bit_count()) % 4] * sign


def apply_pauli(p: PauliString, v: np.ndarray) -> np.ndarray:
    """Return p @ v using bit masks only. ``v`` may be a vector or (d, k) block."""
    v = np.asarray(v)
    d = 1 << p.n_qubits
    if v.shape[0] != d:
        raise ValueError(f"statevector length {v.shape[0]} does not match 2^{p.n_qubits}")
    c = np.arange(d)
    vals = _string_values(p.n_qubits, p.x, p.z, p.phase)
    src = c ^ p.x
    if v.ndim == 1:
        return vals * v[src]
    return vals[:, None] * v[src]


@dataclass(frozen=True, eq=False)
class PauliLcu:
    """Hermitian operator c0 I + sum_l c_l P_l with real c_l.

    Terms are kept in three parallel arrays (coefficient, x mask, z mask),
    deduplicated and sorted by (x, z) so equal operators compare equal.
    """

    n_qubits: int
    identity: float
    coeffs: np.ndarray = field(repr=False)
    xs: np.ndarray = field(repr=False)
    zs: np.ndarray = field(repr=False)

    @classmethod
    def from_arrays(cls, n_qubits, coeffs, xs, zs, identity=0.0, tol=COEFF_TOL) -> "PauliLcu":
        """Build from possibly repeated (coeff, x, z) triples; complex input must be real."""
        coeffs = np.asarray(coeffs)
        xs = np.asarray(xs, dtype=np.int64)
        zs = np.asarray(zs, dtype=np.int64)
        if n_qubits > 31:
            raise ValueError("at most 31 qubits supported")
        if len(xs) and (xs.max() >> n_qubits or zs.max() >> n_qubits or xs.min() < 0 or zs.min() < 0):
            raise ValueError("mask outside declared qubit range")
        key = (xs << n_qubits) | zs
        uniq, inv = np.unique(key, return_inverse=True)
        summed = np.bincount(inv, weights=coeffs.real.astype(float), minlength=len(uniq))
        if np.iscomplexobj(coeffs):
            imag = np.bincount(inv, weights=coeffs.imag, minlength=len(uniq))
            scale = max(1.0, float(np.abs(summed).max(initial=0.0)))
            if np.abs(imag).max(initial=0.0) > 1e-9 * scale:
                raise ValueError("LCU coefficients must be real (Hermitian operator)")
        ux = uniq >> n_qubits
        uz = uniq & ((1 << n_qubits) - 1)
        ident = float(identity)
        is_id = (ux == 0) & (uz == 0)
        ident += float(summed[is_id].sum())
        keep = ~is_id & (np.abs(summed) > tol)
        return cls(int(n_qubits), ident, summed[keep], ux[keep], uz[keep])

    @classmethod
    def from_terms(
        cls, n_qubits: int, terms: Iterable[tuple[float, PauliString | str]], identity: float = 0.0
    ) -> "PauliLcu":
        cs, xs, zs = [], [], []
        for c, p in terms:
            if isinstance(p, str):
                p = PauliString.from_label(p)
            if p.n_qubits != n_qubits:
                raise ValueError(f"string {p} has {p.n_qubits} qubits, expected {n_qubits}")
            cs.append(complex(c) * _I_POW[p.phase])
            xs.append(p.x)
            zs.append(p.z)
        return cls.from_arrays(n_qubits, np.array(cs, dtype=complex), xs, zs, identity)

    @property
    def n_terms(self) -> int:
        return len(self.coeffs)

    @property
    def terms(self) -> list[tuple[float, PauliString]]:
        return [
            (float(c), PauliString(self.n_qubits, int(x), int(z)))
            for c, x, z in zip(self.coeffs, self.xs, self.zs)
        ]

    def __iter__(self) -> Iterator[tuple[float, PauliString]]:
        return iter(self.terms)

    def one_norm(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def shifted(self, delta: float) -> "PauliLcu":
        """Same operator with ``delta`` added to the identity coefficient."""
        return PauliLcu(self.n_qubits, self.identity + float(delta), self.coeffs, self.xs, self.zs)

    def scaled(self, s: float) -> "PauliLcu":
        return PauliLcu(self.n_qubits, self.identity * s, self.coeffs * s, self.xs, self.zs)

    def __add__(self, other: "PauliLcu") -> "PauliLcu":
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit counts differ")
        return PauliLcu.from_arrays(
            self.n_qubits,
            np.concatenate([self.coeffs, other.coeffs]),
            np.concatenate([self.xs, other.xs]),
            np.concatenate([self.zs, other.zs]),
            self.identity + other.identity,
        )

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        out = self.identity * v
        for c, x, z in zip(self.coeffs, self.xs, self.zs):
            out = out + c * apply_pauli(PauliString(self.n_qubits, int(x), int(z)), v)
        return out

    def to_dense(self, basis: Sequence[int] | None = None, qubit_cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
        """Dense matrix, optionally restricted to a set of computational basis states.

        Matrix elements leaving ``basis`` are dropped, so the restriction is exact
        only when the operator is block diagonal with respect to it (e.g. a
        particle-number sector of a number-conserving Hamiltonian).
        """
        nq = self.n_qubits
        d = 1 << nq
        if basis is None:
            if nq > qubit_cap:
                raise DimensionCapError(f"{nq} qubits exceeds dense cap {qubit_cap}")
            rows = np.arange(d, dtype=np.int64)
        else:
            rows = np.asarray(basis, dtype=np.int64)
        m = len(rows)
        pos = np.full(d, -1, dtype=np.int64)
        pos[rows] = np.arange(m)
        out = np.zeros((m, m), dtype=complex)
        out[np.arange(m), np.arange(m)] += self.identity
        ur = rows.astype(np.uint64)
        for c, x, z in zip(self.coeffs, self.xs, self.zs):
            cols = rows ^ x
            sign = 1 - 2 * (popcount((ur ^ np.uint64(x)) & np.uint64(z)) & 1)
            vals = c * _I_POW[(int(x) & int(z)).bit_count() % 4] * sign
            j = pos[cols]
            ok = j >= 0
            np.add.at(out, (np.nonzero(ok)[0], j[ok]), vals[ok])
        return out

    # serialization -----------------------------------------------------
    def to_json_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "identity": self.identity,
            "terms": [{"coeff": c, "pauli": p.label} for c, p in self.terms],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1)

    @classmethod
    def from_json_dict(cls, data: dict) -> "PauliLcu":
        try:
            nq = int(data["n_qubits"])
            ident = float(data.get("identity", 0.0))
            raw = data["terms"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed Pauli JSON: {exc}") from exc
        terms = []
        for k, t in enumerate(raw):
            label = t["pauli"]
            if len(label) != nq:
                raise ValueError(f"term {k}: label {label!r} has length {len(label)}, expected {nq}")
            terms.append((float(t["coeff"]), PauliString.from_label(label)))
        return cls.from_terms(nq, terms, ident)

    @classmethod
    def loads(cls, text: str) -> "PauliLcu":
        return cls.from_json_dict(json.loads(text))


def one_norm(h: PauliLcu) -> float:
    return h.one_norm()


def to_dense(h: PauliLcu, qubit_cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    return h.to_dense(qubit_cap=qubit_cap)


# vectorized products of ladder operators, used by the Jordan-Wigner map ----

def ladder_components(modes: np.ndarray, dagger: bool):
    """Two-term Pauli expansion of a_j (or a_j^dagger) for an array of modes j.

    a_j = Z_{<j} (X_j + i Y_j) / 2. Returns a list of (coeff, x, z) with arrays.
    """
    modes = np.asarray(modes, dtype=np.int64)
    bit = np.left_shift(1, modes)
    below = bit - 1
    s = -1j if dagger else 1j
    return [(0.5 + 0j, bit, below), (0.5 * s, bit, below | bit)]


def multiply_arrays(c1, x1, z1, c2, x2, z2):
    """Elementwise product of Pauli terms (coefficients relative to P(x,z))."""
    x = x1 ^ x2
    z = z1 ^ z2
    e = popcount(x1 & z1) + popcount(x2 & z2) + 2 * popcount(z1 & x2) - popcount(x & z)
    return c1 * c2 * _I_POW[e % 4], x, z


def ladder_product(coeffs: np.ndarray, ops: Sequence[tuple[np.ndarray, bool]]):
    """Expand sum_k coeffs[k] * prod_m op_m(k) into raw (c, x, z) arrays.

    ``ops`` lists (mode array, dagger flag) for each factor from left to right;
    all mode arrays share the length of ``coeffs``.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    parts = [(coeffs, np.zeros(len(coeffs), np.int64), np.zeros(len(coeffs), np.int64))]
    for modes, dag in ops:
        comps = ladder_components(modes, dag)
        parts = [
            multiply_arrays(c, x, z, np.full(len(coeffs), cc), xx, zz)
            for (c, x, z) in parts
            for (cc, xx, zz) in comps
        ]
    c = np.concatenate([p[0] for p in parts])
    x = np.concatenate([p[1] for p in parts])
    z = np.concatenate([p[2] for p in parts])
    return c, x, z
