"""Hamiltonian power matrices, moments and moment-based Lanczos mitigation.

The Lanczos tridiagonal is built from Hankel determinants of the moments,
L_j = det[mu_{a+b}]_{a,b=0..j}, and M_j, the same matrix with its last column
replaced by mu_{a+j+1}. Determinants are evaluated with mpmath on moments
rescaled by a norm estimate so that the Hankel entries are of order one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .finitediff import fd_coefficients
from .krylov import fd_row, toeplitz_hermitian

ENERGY_TOL = 1e-10
DEGENERATE_TOL = 1e-12
MP_DPS = 50


def power_matrices(u_rows: np.ndarray, J: int, dt: float, q_max: int | None = None) -> dict[int, np.ndarray]:
    """M^(q) for q = 1..q_max (default 2J) from the propagator first rows."""
    q_max = 2 * J if q_max is None else q_max
    if q_max > 2 * J:
        raise ValueError(f"q = {q_max} exceeds 2J = {2 * J}")
    return {q: toeplitz_hermitian(fd_row(u_rows, J, q, dt)) for q in range(1, q_max + 1)}


def moment_perturbation_bound(n: int, J: int, q: int, dt: float, h_norm: float, M: float) -> float:
    """Sampling plus finite-difference bound on the q-th power-matrix perturbation."""
    a1 = fd_coefficients(J, 1)
    aq = fd_coefficients(J, q)
    v = aq.a(0) ** 2 + 2 * a1.l1 * sum(aq.a(j) ** 2 / abs(a1.a(j)) for j in range(1, J + 1))
    sampling = 2 * n * math.sqrt(2 * v * math.log(2 * n)) / (dt**q * math.sqrt(M)) if M > 0 else math.inf
    s = aq.s
    fd = n * aq.remainder_sum() * h_norm ** (s + 1) / math.factorial(s + 1) * dt ** (s - q + 1)
    return sampling + fd


@dataclass(frozen=True, eq=False)
class MomentSet:
    mu: np.ndarray  # mu_0..mu_2J, mu_0 = 1
    v0: np.ndarray | None = field(default=None, repr=False)
    bounds: np.ndarray | None = field(default=None, repr=False)

    @property
    def order(self) -> int:
        return len(self.mu) - 1

    @property
    def variance(self) -> float:
        return float(self.mu[2] - self.mu[1] ** 2)


def moments_from(power: dict[int, np.ndarray], v0: np.ndarray, S: np.ndarray | None = None) -> MomentSet:
    """Rayleigh quotients v0^dagger M^(q) v0 / v0^dagger S v0.

    The Krylov basis is not orthonormal, so the norm of the state is taken
    with the overlap matrix; with S = None the plain v0^dagger v0 is used,
    which is only correct for an orthonormal basis.
    """
    v0 = np.asarray(v0, dtype=complex)
    nrm = float(np.vdot(v0, v0).real) if S is None else float(np.vdot(v0, S @ v0).real)
    if not np.any(v0):
        raise ValueError("moment vector is zero")
    if nrm <= 0:
        raise ValueError("moment vector has nonpositive norm")
    q_max = max(power)
    mu = np.ones(q_max + 1)
    for q in range(1, q_max + 1):
        mu[q] = float(np.vdot(v0, power[q] @ v0).real) / nrm
    return MomentSet(mu, v0)


@dataclass
class LanczosState:
    alpha: list[float] = field(default_factory=list)
    beta_sq: list[float] = field(default_factory=list)
    L: list[float] = field(default_factory=list)  # L_0..L_j
    Mdet: list[float] = field(default_factory=list)  # M_0..M_j
    lowest: list[float] = field(default_factory=list)  # accepted steps
    trace: list[dict] = field(default_factory=list)  # every step, accepted or not
    reason: str = ""

    @property
    def energy(self) -> float:
        return self.lowest[-1]

    @property
    def steps(self) -> int:
        return len(self.lowest)

    def tridiagonal(self) -> np.ndarray:
        j = len(self.alpha)
        T = np.diag(np.array(self.alpha, dtype=float))
        b = np.sqrt(np.array(self.beta_sq[: j - 1], dtype=float))
        T[np.arange(j - 1), np.arange(1, j)] = b
        T[np.arange(1, j), np.arange(j - 1)] = b
        return T


def hankel_determinants(mu, j_max: int, precision: str = "extended", scale: float = 1.0):
    """(L_0..L_{j_max}, M_0..M_{j_max}) of moments rescaled by ``scale``.

    Needs mu_0..mu_{2 j_max + 1}; missing M_j entries are returned as NaN.
    """
    mu = list(mu)
    L, Mv = [], []
    if precision == "extended":
        with mpmath.workdps(MP_DPS):
            m = [mpmath.mpf(float(x)) / mpmath.mpf(scale) ** q for q, x in enumerate(mu)]
            for j in range(j_max + 1):
                A = mpmath.matrix(j + 1, j + 1)
                for a in range(j + 1):
                    for b in range(j + 1):
                        A[a, b] = m[a + b]
                L.append(mpmath.det(A))
                if 2 * j + 1 < len(m):
                    for a in range(j + 1):
                        A[a, j] = m[a + j + 1]
                    Mv.append(mpmath.det(A))
                else:
                    Mv.append(mpmath.mpf("nan"))
            return [float(x) for x in L], [float(x) for x in Mv], [x for x in L], [x for x in Mv]
    m = np.array(mu, dtype=float) / scale ** np.arange(len(mu))
    for j in range(j_max + 1):
        A = np.array([[m[a + b] for b in range(j + 1)] for a in range(j + 1)])
        L.append(float(np.linalg.det(A)))
        if 2 * j + 1 < len(m):
            A[:, j] = m[np.arange(j + 1) + j + 1]
            Mv.append(float(np.linalg.det(A)))
        else:
            Mv.append(math.nan)
    return L, Mv, L, Mv


def lanczos_mitigate(
    moments: MomentSet | np.ndarray,
    J: int | None = None,
    scale: float | None = None,
    precision: str = "extended",
    energy_tol: float = ENERGY_TOL,
    degenerate_tol: float = DEGENERATE_TOL,
    spectral_bound: float | None = None,
) -> LanczosState:
    """Moment-based Lanczos iteration with early termination.

    Stops when beta_j^2 < 0, when the lowest eigenvalue of T_j rises by more
    than ``energy_tol``, when the rescaled beta_j^2 vanishes to within
    ``degenerate_tol`` (the moments are reproduced by a j-point spectrum, so
    L_j = 0), or at j = J. With ``spectral_bound`` = b, a step is also rejected
    when |alpha_j| > b or the new lowest eigenvalue falls below -b: Jacobi
    entries of a state supported on [-b, b] cannot leave that interval.
    """
    mu = np.asarray(moments.mu if isinstance(moments, MomentSet) else moments, dtype=float)
    order = len(mu) - 1
    if order < 2:
        raise ValueError("need moments up to order 2J with J >= 1")
    J = order // 2 if J is None else J
    if scale is None:
        scale = max(abs(mu[q]) ** (1.0 / q) for q in range(1, order + 1))
        scale = scale if scale > 0 else 1.0
    L, Mv, L_raw, M_raw = hankel_determinants(mu, J, precision, scale)
    st = LanczosState(L=L, Mdet=Mv)

    def ratio(mvec, lvec, j):  # M_j / L_j with M_{-1} = 0, L_{-1} = 1
        if j < 0:
            return 0.0
        return float(mvec[j] / lvec[j])

    def lv(j):
        return 1.0 if j < 0 else L_raw[j]

    for j in range(1, J + 1):
        if float(lv(j - 1)) == 0.0:
            st.reason = "degenerate"
            break
        a_hat = ratio(M_raw, L_raw, j - 1) - ratio(M_raw, L_raw, j - 2)
        alphas = st.alpha + [a_hat * scale]
        T = np.diag(alphas)
        b = np.sqrt(np.array(st.beta_sq, dtype=float))
        T[np.arange(j - 1), np.arange(1, j)] = b
        T[np.arange(1, j), np.arange(j - 1)] = b
        e = float(np.linalg.eigvalsh(T)[0])
        st.trace.append({"j": j, "alpha": alphas[-1], "lowest": e})
        if spectral_bound is not None and st.lowest and (abs(alphas[-1]) > spectral_bound or e < -spectral_bound):
            st.reason = "out-of-range"
            break
        if st.lowest and e > st.lowest[-1] + energy_tol:
            st.reason = "energy-increase"
            break
        st.alpha.append(alphas[-1])
        st.lowest.append(e)
        if j == J:
            st.reason = "max-order"
            break
        b2_hat = float(L_raw[j] * lv(j - 2) / L_raw[j - 1] ** 2)
        st.trace[-1]["beta_sq"] = b2_hat * scale**2
        if abs(b2_hat) <= degenerate_tol:
            st.reason = "degenerate"
            break
        if b2_hat < 0:
            st.reason = "beta-negative"
            break
        if spectral_bound is not None and b2_hat * scale**2 > spectral_bound**2:
            st.reason = "out-of-range"
            break
        st.beta_sq.append(b2_hat * scale**2)
    if not st.reason:
        st.reason = "max-order"
    return st
