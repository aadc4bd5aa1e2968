"""Exact spectral machinery: eigendecomposition, propagation and symmetry sectors.

Units are hbar = 1, energies in Hartree and times in 1/Hartree.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .pauli import PauliLcu

DEFAULT_DIM_CAP = 1 << 14
LABEL_TOL = 1e-6
HERMITIAN_TOL = 1e-10


class NumericalError(RuntimeError):
    """Raised when a numerical invariant fails (e.g. non-integer sector label)."""


@dataclass(frozen=True, eq=False)
class SpectralOracle:
    """Eigendecomposition H = V diag(E) V^dagger, possibly of a basis-restricted block.

    ``basis`` holds the computational basis indices spanning the block (None for
    the full 2^n space); statevectors passed to methods live in block coordinates.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    n_e: np.ndarray | None = field(default=None, repr=False)
    s2: np.ndarray | None = field(default=None, repr=False)
    basis: np.ndarray | None = field(default=None, repr=False)
    offset: float = 0.0  # constant already subtracted from the eigenvalues

    @property
    def dimension(self) -> int:
        return len(self.eigenvalues)

    def _check(self, v):
        if v.shape[0] != self.dimension:
            raise ValueError(f"vector length {v.shape[0]} does not match oracle dimension {self.dimension}")

    def propagate(self, t: float, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        self._check(v)
        V = self.eigenvectors
        return V @ (np.exp(-1j * self.eigenvalues * t) * (V.conj().T @ v))

    def amplitudes(self, v: np.ndarray) -> np.ndarray:
        """Coordinates of v in the eigenbasis."""
        v = np.asarray(v, dtype=complex)
        self._check(v)
        return self.eigenvectors.conj().T @ v

    def local_index(self, full_index: int) -> int:
        """Position of a computational basis state inside the block."""
        if self.basis is None:
            return int(full_index)
        hit = np.nonzero(self.basis == full_index)[0]
        if not len(hit):
            raise ValueError(f"basis state {full_index} lies outside the oracle block")
        return int(hit[0])

    def basis_state(self, full_index: int) -> np.ndarray:
        v = np.zeros(self.dimension, dtype=complex)
        v[self.local_index(full_index)] = 1.0
        return v

    def shifted(self, delta: float) -> "SpectralOracle":
        """Oracle for H - delta."""
        return SpectralOracle(
            self.eigenvalues - delta, self.eigenvectors, self.n_e, self.s2, self.basis, self.offset + delta
        )

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def _clusters(e: np.ndarray, tol: float):
    start = 0
    for k in range(1, len(e) + 1):
        if k == len(e) or e[k] - e[k - 1] > tol:
            yield start, k
            start = k


def _resolve(V: np.ndarray, op: np.ndarray, tol: float):
    """Rotate degenerate columns of V to diagonalize op; returns (V', labels)."""
    a = V.conj().T @ op @ V
    w, u = np.linalg.eigh((a + a.conj().T) / 2)
    return V @ u, w


def decompose(
    h: np.ndarray,
    number_op: np.ndarray | None = None,
    spin_op: np.ndarray | None = None,
    basis: np.ndarray | None = None,
    dim_cap: int = DEFAULT_DIM_CAP,
) -> SpectralOracle:
    """Diagonalize a dense Hermitian matrix and optionally label (N, S^2) per eigenvector."""
    h = np.asarray(h)
    d = h.shape[0]
    if h.shape != (d, d):
        raise ValueError("matrix must be square")
    if d > dim_cap:
        raise ValueError(f"dimension {d} exceeds cap {dim_cap}")
    scale = max(1.0, float(np.abs(h).max(initial=0.0)))
    if np.abs(h - h.conj().T).max(initial=0.0) > HERMITIAN_TOL * scale:
        raise ValueError("matrix is not Hermitian")
    e, V = scipy.linalg.eigh(h)
    n_lab = s_lab = None
    if number_op is not None:
        spread = max(1.0, float(e[-1] - e[0]))
        V = V.astype(complex)
        n_lab = np.zeros(d)
        s_lab = np.zeros(d) if spin_op is not None else None
        for a, b in _clusters(e, 1e-8 * spread):
            Vc, nl = _resolve(V[:, a:b], number_op, LABEL_TOL)
            V[:, a:b] = Vc
            n_lab[a:b] = nl
            if spin_op is not None:
                # within each N-subcluster diagonalize S^2
                order = np.round(nl).astype(int)
                for val in np.unique(order):
                    cols = np.arange(a, b)[order == val]
                    Vs, sl = _resolve(V[:, cols], spin_op, LABEL_TOL)
                    V[:, cols] = Vs
                    s_lab[cols] = sl
        if np.abs(n_lab - np.round(n_lab)).max(initial=0.0) > LABEL_TOL:
            raise NumericalError("electron-number labels are not integers; sector mixing")
        n_lab = np.round(n_lab).astype(int)
    b = None if basis is None else np.asarray(basis, dtype=np.int64)
    return SpectralOracle(e, V, n_lab, s_lab, b)


def oracle_from_lcu(
    h: PauliLcu,
    n_orb: int | None = None,
    basis: np.ndarray | None = None,
    dim_cap: int = DEFAULT_DIM_CAP,
) -> SpectralOracle:
    """Decompose a qubit Hamiltonian; label sectors when ``n_orb`` is given."""
    from .chem import symmetry_operators

    if basis is None and (1 << h.n_qubits) > dim_cap:
        raise ValueError(f"2^{h.n_qubits} exceeds dimension cap {dim_cap}; pass a sector basis")
    H = h.to_dense(basis=basis, qubit_cap=64)
    N = S2 = None
    if n_orb is not None:
        n_op, s_op = symmetry_operators(n_orb)
        N = n_op.to_dense(basis=basis, qubit_cap=64)
        S2 = s_op.to_dense(basis=basis, qubit_cap=64)
    return decompose(H, N, S2, basis=basis, dim_cap=dim_cap)


def propagate(o: SpectralOracle, t: float, v: np.ndarray) -> np.ndarray:
    return o.propagate(t, v)


@dataclass(frozen=True)
class SectorSpectrum:
    n_e: int | None
    S: float | None
    e_min: float
    e_max: float
    count: int

    @property
    def spectral_range(self) -> float:
        return self.e_max - self.e_min

    @property
    def center(self) -> float:
        return 0.5 * (self.e_min + self.e_max)

    @property
    def restricted_norm(self) -> float:
        """Spectral norm inside the sector after centering the spectrum."""
        return 0.5 * self.spectral_range


def sector_mask(o: SpectralOracle, n_e: int | None, S: float | None) -> np.ndarray:
    mask = np.ones(o.dimension, dtype=bool)
    if n_e is not None:
        if o.n_e is None:
            raise ValueError("oracle carries no electron-number labels")
        mask &= o.n_e == n_e
    if S is not None:
        if o.s2 is None:
            raise ValueError("oracle carries no spin labels")
        mask &= np.abs(o.s2 - S * (S + 1)) < LABEL_TOL
    return mask


def sector_spectrum(o: SpectralOracle, n_e: int | None = None, S: float | None = None) -> SectorSpectrum:
    mask = sector_mask(o, n_e, S)
    if not mask.any():
        raise ValueError(f"sector (N_e={n_e}, S={S}) is empty")
    e = o.eigenvalues[mask] + o.offset
    return SectorSpectrum(n_e, S, float(e.min()), float(e.max()), int(mask.sum()))


@dataclass(frozen=True, eq=False)
class ShiftedHamiltonian:
    hamiltonian: object
    shift: float  # subtracted from H; add back to report energies

    def unshift(self, energy):
        return energy + self.shift


def energy_shift(h, e_min: float, e_max: float) -> ShiftedHamiltonian:
    """Center [e_min, e_max] on zero: H -> H - (e_min + e_max)/2."""
    if e_min > e_max:
        raise ValueError("e_min must not exceed e_max")
    c = 0.5 * (e_min + e_max)
    if isinstance(h, PauliLcu):
        return ShiftedHamiltonian(h.shifted(-c), c)
    if isinstance(h, SpectralOracle):
        return ShiftedHamiltonian(h.shifted(c), c)
    h = np.asarray(h)
    return ShiftedHamiltonian(h - c * np.eye(h.shape[0]), c)


def shift_error(hf_min: float, hf_max: float, exact_min: float, exact_max: float) -> float:
    """Relative error of the shift estimated from approximate spectral bounds."""
    den = abs(hf_min + hf_max)
    if den == 0:
        raise ZeroDivisionError("approximate spectral bounds sum to zero")
    return abs((hf_min + hf_max) - (exact_min + exact_max)) / den
