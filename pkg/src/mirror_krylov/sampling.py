"""Hadamard-test shot noise and variance-optimal shot allocation.

A Hadamard test on <psi|U|psi> returns +1 with probability (1 + x)/2, where x is
the real (or imaginary) part being measured; m repetitions give the estimate
2k/m - 1 with k ~ Binomial(m, (1 + x)/2) and variance (1 - x^2)/m.
"""
from __future__ import annotations

import json
import math
import warnings
import zlib
from dataclasses import asdict, dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .finitediff import FdScheme

X_TOL = 1e-9


class ZeroShotWarning(RuntimeWarning):
    """An element that is not known exactly received no shots; its estimate is 0."""


def element_rng(seed: int, trial: int, key: str) -> np.random.Generator:
    """Counter-based stream for one measured element, independent of scheduling."""
    tag = zlib.crc32(key.encode())
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial), tag))
    return np.random.Generator(np.random.Philox(ss))


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + X_TOL):
        raise ValueError(f"expectation value outside [-1, 1] (max |x| = {np.abs(x).max():.3g})")
    return np.clip(x, -1.0, 1.0)


def sample_parts(x, m, rng: np.random.Generator, exact=None) -> tuple[np.ndarray, int]:
    """Vectorized Hadamard estimates for arrays of expectations and shot counts.

    Returns (estimates, number of zero-shot elements that were not known exactly).
    """
    x = _check_x(x)
    m = np.asarray(m, dtype=np.int64)
    x, m = np.broadcast_arrays(x, m)
    exact = np.zeros(x.shape, bool) if exact is None else np.broadcast_to(np.asarray(exact, bool), x.shape)
    k = rng.binomial(m, (1.0 + x) / 2.0)
    est = np.where(m > 0, 2.0 * k / np.maximum(m, 1) - 1.0, 0.0)
    est = np.where(exact & (m == 0), x, est)
    n_zero = int(np.count_nonzero((m == 0) & ~exact))
    return est, n_zero


def hadamard_sample(x: float, m: int, rng: np.random.Generator, known_exact: bool = False) -> float:
    if m < 0:
        raise ValueError("shot count must be nonnegative")
    est, n_zero = sample_parts(x, m, rng, known_exact)
    if n_zero:
        warnings.warn("zero shots on an element that is not known exactly; returning 0", ZeroShotWarning, stacklevel=2)
    return float(est)


def largest_remainder(weights: Sequence[float], total: int) -> np.ndarray:
    """Integer apportionment of ``total`` proportional to ``weights`` (ties by index)."""
    w = np.asarray(weights, dtype=float)
    if total < 0:
        raise ValueError("total must be nonnegative")
    if len(w) == 0:
        if total:
            raise ValueError("cannot apportion shots over zero entries")
        return np.zeros(0, np.int64)
    s = w.sum()
    if s <= 0:
        raise ValueError("weights must have positive sum")
    quota = w / s * total
    base = np.floor(quota).astype(np.int64)
    left = int(total - base.sum())
    if left:
        order = np.argsort(-(quota - base), kind="stable")
        base[order[:left]] += 1
    return base


@dataclass(frozen=True)
class ShotEntry:
    key: tuple
    real: int
    imag: int
    exact: bool = False

    @property
    def total(self) -> int:
        return self.real + self.imag


@dataclass(frozen=True)
class ShotPlan:
    total: int
    entries: tuple[ShotEntry, ...]
    kind: str  # kqd-overlap | kqd-lcu | msd-fd

    def __post_init__(self):
        if sum(e.total for e in self.entries) != self.total:
            raise ValueError("shot plan entries do not sum to the declared total")

    def lookup(self) -> dict:
        return {e.key: e for e in self.entries}

    def per_k(self, n: int) -> np.ndarray:
        out = np.zeros(n, np.int64)
        for e in self.entries:
            out[e.key[1]] += e.total
        return out

    def to_json_dict(self) -> dict:
        return {
            "total": self.total,
            "kind": self.kind,
            "entries": [
                {"key": list(e.key), "real": e.real, "imag": e.imag, "exact": e.exact} for e in self.entries
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict())


def _split(m: int, all_real: bool) -> tuple[int, int]:
    if all_real:
        return m, 0
    return m - m // 2, m // 2


def krylov_row_shots(n: int, M: int, target: str) -> np.ndarray:
    """Shot count m_k per Krylov row element k = 0..n-1."""
    if n < 2:
        raise ValueError("shot allocation needs n >= 2")
    if M < 0:
        raise ValueError("M must be nonnegative")
    if target == "overlap":
        w = np.r_[0.0, np.ones(n - 1)]
    elif target == "hamiltonian":
        w = np.r_[1.0, np.full(n - 1, math.sqrt(2.0))]
    else:
        raise ValueError(f"unknown target {target!r}")
    return largest_remainder(w, M)


def kqd_shot_allocation(n: int, M: int, target: str = "hamiltonian") -> ShotPlan:
    """Row-level plan: k > 0 split evenly real/imag, k = 0 all real (S_00 exact)."""
    mk = krylov_row_shots(n, M, target)
    name = "S" if target == "overlap" else "H"
    entries = []
    for k, m in enumerate(mk):
        r, i = _split(int(m), k == 0)
        entries.append(ShotEntry((name, k), r, i, exact=(target == "overlap" and k == 0)))
    return ShotPlan(int(M), tuple(entries), "kqd-overlap" if target == "overlap" else "kqd-lcu")


def lcu_component_allocation(coeffs, m_k: int) -> np.ndarray:
    c = np.abs(np.asarray(coeffs, dtype=float))
    if c.sum() <= 0:
        raise ValueError("all LCU coefficients are zero")
    return largest_remainder(c, m_k)


def msd_component_allocation(scheme: FdScheme, m_k: int, k: int) -> np.ndarray:
    """Shots per j = -J..J for row element k; j = 0 is left to the overlap plan."""
    if scheme.q != 1:
        raise ValueError("component allocation is defined for first-derivative schemes")
    a = np.abs(scheme.coeffs)
    if k == 0:
        a = np.where(scheme.offsets > 0, a, 0.0)
    return largest_remainder(a, m_k)


def kqd_lcu_plan(n: int, M: int, coeffs) -> ShotPlan:
    """Per-(k, l) plan for the LCU-measured Hamiltonian matrix."""
    mk = krylov_row_shots(n, M, "hamiltonian")
    entries = []
    for k in range(n):
        ml = lcu_component_allocation(coeffs, int(mk[k])) if mk[k] else np.zeros(len(coeffs), np.int64)
        for l, m in enumerate(ml):
            r, i = _split(int(m), k == 0)
            entries.append(ShotEntry(("H", k, l), r, i))
    return ShotPlan(int(M), tuple(entries), "kqd-lcu")


def overlap_plan(n: int, M: int) -> ShotPlan:
    mk = krylov_row_shots(n, M, "overlap")
    entries = [ShotEntry(("S", 0), 0, 0, exact=True)]
    for k in range(1, n):
        r, i = _split(int(mk[k]), False)
        entries.append(ShotEntry(("S", k), r, i))
    return ShotPlan(int(M), tuple(entries), "kqd-overlap")


def msd_plan(n: int, M: int, scheme: FdScheme) -> ShotPlan:
    """Per-(k, j) plan for the shifted propagators, j != 0.

    Both real and imaginary parts are measured for every element (the real
    parts of diagonal elements only feed even-order moments).
    """
    mk = krylov_row_shots(n, M, "hamiltonian")
    entries = []
    for k in range(n):
        mj = msd_component_allocation(scheme, int(mk[k]), k)
        for j, m in zip(scheme.offsets, mj):
            if j == 0 or (k == 0 and j < 0):
                continue
            r, i = _split(int(m), False)
            entries.append(ShotEntry(("U", k, int(j)), r, i))
    return ShotPlan(int(M), tuple(entries), "msd-fd")


def predicted_kqd_variance(k: int, lam: float, m_k: int, d: int) -> float:
    """Haar-averaged variance of a sampled Hamiltonian element (approximate)."""
    if m_k == 0:
        return math.inf
    return (2 - (k == 0)) * lam**2 * (2 - 1 / d) / m_k
