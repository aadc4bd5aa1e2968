"""Krylov matrices from exact or sampled Hadamard-test data, and the thresholded GEVP.

Every matrix is Toeplitz-Hermitian and stored through its first row
r[k] = A[0, k]; the full matrix is A[k', k] = r[k - k'] for k >= k' and the
complex conjugate of r[k' - k] otherwise.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .finitediff import fd_coefficients
from .pauli import PauliLcu, apply_pauli, PauliString
from .sampling import ShotPlan, element_rng, sample_parts
from .spectral import NumericalError, SpectralOracle


class EmptySubspaceError(NumericalError):
    """All overlap eigenvalues fall below the threshold."""


@dataclass(frozen=True, eq=False)
class KrylovConfig:
    n: int
    tau: float
    phi0: np.ndarray = field(repr=False)
    J: int = 1
    dt: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("Krylov order n must be >= 1")
        if self.tau <= 0:
            raise ValueError("timestep tau must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("time shift dt must be positive")
        if abs(np.linalg.norm(self.phi0) - 1) > 1e-10:
            raise ValueError("reference state must be normalized")


def toeplitz_hermitian(row: np.ndarray) -> np.ndarray:
    row = np.asarray(row, dtype=complex)
    n = len(row)
    k = np.arange(n)
    diff = k[None, :] - k[:, None]
    out = np.where(diff >= 0, row[np.abs(diff)], np.conj(row[np.abs(diff)]))
    out[k, k] = row[0].real
    return out


def propagator_matrix(u_rows: np.ndarray, j: int, J: int) -> np.ndarray:
    """Full U^(j) from first rows of the family j = -J..J (Toeplitz plus reflection)."""
    n = u_rows.shape[1]
    k = np.arange(n)
    diff = k[None, :] - k[:, None]
    upper = u_rows[j + J][np.abs(diff)]
    lower = np.conj(u_rows[-j + J][np.abs(diff)])
    return np.where(diff >= 0, upper, lower)


@dataclass(frozen=True, eq=False)
class ExactMatrices:
    S: np.ndarray
    H: np.ndarray
    u_rows: np.ndarray | None  # (2J+1, n), row index j + J
    M: dict = field(default_factory=dict)  # q -> full matrix


def _weights(oracle: SpectralOracle, phi0: np.ndarray):
    c = oracle.amplitudes(phi0)
    return np.abs(c) ** 2, oracle.eigenvalues


def exact_rows(oracle: SpectralOracle, cfg: KrylovConfig, power: int = 0, shift_time: float = 0.0) -> np.ndarray:
    """First row <phi0| H^power exp(-iH(k tau + shift_time)) |phi0>, k = 0..n-1."""
    w, e = _weights(oracle, cfg.phi0)
    t = np.arange(cfg.n) * cfg.tau + shift_time
    return (w * e**power) @ np.exp(-1j * np.outer(e, t))


def exact_matrices(oracle: SpectralOracle, cfg: KrylovConfig, q_max: int = 0) -> ExactMatrices:
    S = toeplitz_hermitian(exact_rows(oracle, cfg))
    S[0, 0] = 1.0
    H = toeplitz_hermitian(exact_rows(oracle, cfg, power=1))
    u = None
    if cfg.dt is not None:
        u = np.array([exact_rows(oracle, cfg, 0, j * cfg.dt) for j in range(-cfg.J, cfg.J + 1)])
    M = {q: toeplitz_hermitian(exact_rows(oracle, cfg, power=q)) for q in range(1, q_max + 1)}
    return ExactMatrices(S, H, u, M)


@dataclass(frozen=True, eq=False)
class KrylovEstimate:
    S: np.ndarray
    H: np.ndarray
    u_rows: np.ndarray | None = None
    offset: float = 0.0  # constant added to eigenvalues (identity coefficient in KQD)
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.S.shape[0]

    def to_json_dict(self) -> dict:
        def enc(a):
            return None if a is None else [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(a)]

        meta = {k: v for k, v in self.meta.items() if isinstance(v, (int, float, str, bool, list, dict))}
        return {"S": enc(self.S), "H": enc(self.H), "u_rows": enc(self.u_rows), "offset": self.offset, "meta": meta}

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d: dict) -> "KrylovEstimate":
        def dec(a):
            return None if a is None else np.array([[complex(re, im) for re, im in row] for row in a])

        return cls(dec(d["S"]), dec(d["H"]), dec(d["u_rows"]), float(d["offset"]), dict(d.get("meta", {})))


def _sample_vector(x: np.ndarray, shots_re, shots_im, seed, trial, key, exact_mode):
    """Sample real and imaginary parts of a vector of Hadamard expectations."""
    if exact_mode:
        return x.astype(complex), 0
    re, z1 = sample_parts(x.real, shots_re, element_rng(seed, trial, key + "/re"))
    im, z2 = sample_parts(x.imag, shots_im, element_rng(seed, trial, key + "/im"))
    return re + 1j * im, z1 + z2


def _full_embed(oracle: SpectralOracle, v: np.ndarray, n_qubits: int) -> np.ndarray:
    if oracle.basis is None:
        return v
    out = np.zeros(1 << n_qubits, dtype=complex)
    out[oracle.basis] = v
    return out


def _sample_overlap_row(s_exact, plan_S, seed, trial, exact_mode, tag):
    n = len(s_exact)
    row = np.empty(n, dtype=complex)
    row[0] = 1.0
    zero = 0
    look = plan_S.lookup() if plan_S is not None else {}
    for k in range(1, n):
        e = look.get(("S", k))
        mr, mi = (e.real, e.imag) if e else (0, 0)
        val, z = _sample_vector(np.array([s_exact[k]]), mr, mi, seed, trial, f"{tag}/S/k={k}", exact_mode)
        row[k] = val[0]
        zero += z
    return row, zero


def assemble_kqd(
    oracle: SpectralOracle,
    h: PauliLcu,
    cfg: KrylovConfig,
    plan_H: ShotPlan | None,
    plan_S: ShotPlan | None,
    seed: int = 0,
    trial: int = 0,
    exact_mode: bool = False,
) -> KrylovEstimate:
    """KQD matrices: each Pauli term of each row element measured by a Hadamard test.

    ``oracle`` and ``h`` must describe the same operator. The identity term is
    not sampled; it is returned as ``offset`` and added to the eigenvalues.
    """
    if not exact_mode:
        if plan_H is None or plan_H.kind != "kqd-lcu" or plan_S is None or plan_S.kind != "kqd-overlap":
            raise ValueError("KQD assembly needs a kqd-lcu plan and a kqd-overlap plan")
    n = cfg.n
    nq = h.n_qubits
    L = h.n_terms
    # <phi0| P_l = (P_l phi0)^dagger; restrict P_l phi0 to the oracle block
    phi_full = _full_embed(oracle, cfg.phi0, nq)
    B = np.empty((L, oracle.dimension), dtype=complex)
    for l, (x, z) in enumerate(zip(h.xs, h.zs)):
        pv = apply_pauli(PauliString(nq, int(x), int(z)), phi_full)
        B[l] = pv if oracle.basis is None else pv[oracle.basis]
    look = plan_H.lookup() if plan_H is not None else {}
    row = np.zeros(n, dtype=complex)
    zero = 0
    for k in range(n):
        psi = oracle.propagate(k * cfg.tau, cfg.phi0)
        x = B.conj() @ psi
        if k == 0:
            x = x.real.astype(complex)
        mr = np.array([look[("H", k, l)].real if ("H", k, l) in look else 0 for l in range(L)], dtype=np.int64)
        mi = np.array([look[("H", k, l)].imag if ("H", k, l) in look else 0 for l in range(L)], dtype=np.int64)
        xt, z = _sample_vector(x, mr, mi, seed, trial, f"kqd/H/k={k}", exact_mode)
        zero += z
        row[k] = h.coeffs @ xt
    s_exact = exact_rows(oracle, cfg)
    s_row, z = _sample_overlap_row(s_exact, plan_S, seed, trial, exact_mode, "kqd")
    zero += z
    return KrylovEstimate(
        toeplitz_hermitian(s_row),
        toeplitz_hermitian(row),
        None,
        offset=h.identity,
        meta={"method": "kqd", "zero_shot_elements": zero},
    )


def sample_propagator_rows(
    oracle: SpectralOracle,
    cfg: KrylovConfig,
    plan_U: ShotPlan | None,
    plan_S: ShotPlan | None,
    seed: int = 0,
    trial: int = 0,
    exact_mode: bool = False,
) -> tuple[np.ndarray, int]:
    """Sampled first rows of U^(j), j = -J..J, with Hermitian reflection on k = 0."""
    J, n = cfg.J, cfg.n
    if cfg.dt is None:
        raise ValueError("MSD assembly needs a time shift dt")
    exact_u = np.array([exact_rows(oracle, cfg, 0, j * cfg.dt) for j in range(-J, J + 1)])
    u = np.empty_like(exact_u)
    look = plan_U.lookup() if plan_U is not None else {}
    zero = 0
    js = np.arange(-J, J + 1)
    for k in range(n):
        meas = (js > 0) if k == 0 else (js != 0)
        sel = js[meas]
        mr = np.array([look[("U", k, int(j))].real if ("U", k, int(j)) in look else 0 for j in sel], np.int64)
        mi = np.array([look[("U", k, int(j))].imag if ("U", k, int(j)) in look else 0 for j in sel], np.int64)
        vals, z = _sample_vector(exact_u[meas, k], mr, mi, seed, trial, f"msd/U/k={k}", exact_mode)
        zero += z
        u[meas, k] = vals
    u[J, 0] = 1.0
    u[:J, 0] = np.conj(u[J + 1 :, 0][::-1])
    s_row, z = _sample_overlap_row(exact_u[J], plan_S, seed, trial, exact_mode, "msd")
    zero += z
    u[J, 1:] = s_row[1:]
    return u, zero


def fd_row(u_rows: np.ndarray, J: int, q: int, dt: float) -> np.ndarray:
    """First row of the q-th power matrix, (i^q / dt^q) sum_j a_j^(J;q) U^(j)_0k."""
    a = fd_coefficients(J, q).coeffs
    row = (1j**q / dt**q) * (a @ u_rows)
    row[0] = row[0].real
    return row


def assemble_msd(
    oracle: SpectralOracle,
    cfg: KrylovConfig,
    plan_U: ShotPlan | None,
    plan_S: ShotPlan | None,
    seed: int = 0,
    trial: int = 0,
    exact_mode: bool = False,
) -> KrylovEstimate:
    """MSD matrices: H from the central difference of shifted propagators."""
    if not exact_mode:
        if plan_U is None or plan_U.kind != "msd-fd":
            raise ValueError("MSD assembly needs an msd-fd plan")
        if cfg.n > 1 and (plan_S is None or plan_S.kind != "kqd-overlap"):
            raise ValueError("MSD assembly needs an overlap plan for S")
    u, zero = sample_propagator_rows(oracle, cfg, plan_U, plan_S, seed, trial, exact_mode)
    H = toeplitz_hermitian(fd_row(u, cfg.J, 1, cfg.dt))
    S = toeplitz_hermitian(u[cfg.J])
    return KrylovEstimate(S, H, u, 0.0, {"method": "msd", "zero_shot_elements": zero, "dt": cfg.dt, "J": cfg.J})


@dataclass(frozen=True, eq=False)
class GevpResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns in the n-dimensional Krylov basis
    n_eps: int
    kept_basis: np.ndarray  # retained S eigenvectors (n x n_eps)


def solve_gevp(H: np.ndarray, S: np.ndarray, eps: float) -> GevpResult:
    """Thresholded GEVP: drop S-eigenvectors with eigenvalue <= eps, whiten, diagonalize."""
    H = np.asarray(H, dtype=complex)
    S = np.asarray(S, dtype=complex)
    if eps < 0:
        raise ValueError("threshold must be nonnegative")
    s, W = np.linalg.eigh((S + S.conj().T) / 2)
    keep = s > eps
    if not keep.any():
        raise EmptySubspaceError(f"no overlap eigenvalue exceeds threshold {eps:.3g}")
    Wk = W[:, keep]
    X = Wk / np.sqrt(s[keep])
    A = X.conj().T @ H @ X
    e, y = np.linalg.eigh((A + A.conj().T) / 2)
    return GevpResult(e, X @ y, int(keep.sum()), Wk)


def optimal_threshold(delta_s: float, delta_h: float, h_norm: float) -> float:
    if h_norm <= 0:
        raise ValueError("Hamiltonian norm must be positive")
    return max(float(delta_s), float(delta_h) / float(h_norm))
