"""Central finite-difference weights for the q-th derivative on nodes -J..J.

Weights are the q-th derivatives at zero of the Lagrange basis polynomials
on the integer nodes, computed with exact rationals and cached.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

J_MAX = 16


@dataclass(frozen=True, eq=False)
class FdScheme:
    J: int
    q: int
    exact: tuple[Fraction, ...] = field(repr=False)  # a_j for j = -J..J

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.J, self.J + 1)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([float(a) for a in self.exact])

    @property
    def s(self) -> int:
        """Highest monomial degree reproduced exactly by the scheme."""
        return self.q - 1 + 2 * (self.J + 1 - (self.q + 1) // 2)

    def a(self, j: int) -> float:
        return float(self.exact[j + self.J])

    @property
    def l1(self) -> float:
        return float(sum(abs(a) for a in self.exact))

    def remainder_sum(self, power: int | None = None) -> float:
        """sum_j |a_j j^p| with p = s + 1 by default."""
        p = self.s + 1 if power is None else power
        return float(sum(abs(a) * abs(j) ** p for a, j in zip(self.exact, range(-self.J, self.J + 1))))

    def apply(self, f, h: float) -> float:
        """Approximate f^{(q)}(0) from samples f(j h)."""
        return sum(a * f(j * h) for a, j in zip(self.coeffs, self.offsets)) / h**self.q


@lru_cache(maxsize=None)
def _node_polynomial(J: int) -> tuple[int, ...]:
    """Integer coefficients (highest degree first) of prod_{r=-J..J} (t - r)."""
    poly = [1]
    for r in range(-J, J + 1):
        poly = [c - r * prev for c, prev in zip(poly + [0], [0] + poly)]
    return tuple(poly)


@lru_cache(maxsize=None)
def _exact_weights(J: int, q: int) -> tuple[Fraction, ...]:
    # L_j(t) = W(t) / ((t - j) W'(j)); divide W by (t - j) synthetically.
    w = _node_polynomial(J)
    deg = len(w) - 1
    qfact = math.factorial(q)
    weights = []
    for j in range(-J, J + 1):
        quot = [w[0]]
        for c in w[1:deg]:
            quot.append(c + j * quot[-1])
        denom = math.prod(j - r for r in range(-J, J + 1) if r != j)
        coeff_tq = quot[len(quot) - 1 - q]  # quot is highest degree first
        weights.append(Fraction(qfact * coeff_tq, denom))
    return tuple(weights)


def fd_coefficients(J: int, q: int = 1) -> FdScheme:
    if not (1 <= J <= J_MAX):
        raise ValueError(f"J must lie in 1..{J_MAX}, got {J}")
    if not (1 <= q <= 2 * J):
        raise ValueError(f"derivative order q must lie in 1..{2 * J}, got {q}")
    return FdScheme(J, q, _exact_weights(J, q))


def first_derivative_closed_form(J: int) -> tuple[Fraction, ...]:
    """a_j = (-1)^{j-1}/j * (J!)^2 / ((J-|j|)! (J+|j|)!), a_0 = 0."""
    out = []
    fJ = math.factorial(J)
    for j in range(-J, J + 1):
        if j == 0:
            out.append(Fraction(0))
            continue
        sign = 1 if (abs(j) - 1) % 2 == 0 else -1
        if j < 0:
            sign = -sign
        out.append(Fraction(sign * fJ * fJ, abs(j) * math.factorial(J - abs(j)) * math.factorial(J + abs(j))))
    return tuple(out)


def bound_constants(n: int, J: int) -> tuple[float, float]:
    """(alpha_{n,J}, beta_{n,J}) entering the optimal time shift."""
    if n < 1 or J < 1:
        raise ValueError("n and J must be positive")
    sch = fd_coefficients(J, 1)
    alpha = 2 * n * math.sqrt(2 * math.log(2 * n)) * sch.l1
    beta = n / math.factorial(2 * J + 1) * sch.remainder_sum(2 * J + 1)
    return alpha, beta


def fd_error_bound(J: int, q: int, dt: float, h_norm: float) -> float:
    """Per-element Taylor-remainder bound on the q-th derivative estimate."""
    sch = fd_coefficients(J, q)
    s = sch.s
    if dt == 0 or h_norm == 0:
        return 0.0
    return sch.remainder_sum() * h_norm ** (s + 1) / math.factorial(s + 1) * dt ** (s - q + 1)
