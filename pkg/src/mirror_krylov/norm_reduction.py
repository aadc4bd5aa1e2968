"""Pauli 1-norm reduction by orbital rotation and BLISS, plus HF-level spectral range.

All costs are the integral form of the Jordan-Wigner 1-norm,

    lambda = sum |A_pq| + 1/2 sum_{p>r, s>q} |g_pqrs - g_psrq| + 1/4 sum |g_pqrs|,

with A_pq = h_pq + sum_r g_pqrr - 1/2 sum_r g_prrq. Gradients are taken with
respect to h and g by an adjoint pass and then pulled back to the parameters.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

from .chem import ElectronIntegrals, exchange_difference, integral_one_norm, one_body_norm_argument


def _abs(x, eps: float):
    if eps > 0:
        r = np.sqrt(x * x + eps * eps)
        return r, x / r
    return np.abs(x), np.sign(x)


def _mask(n: int) -> np.ndarray:
    i = np.arange(n)
    return (i[:, None, None, None] > i[None, None, :, None]) & (i[None, None, None, :] > i[None, :, None, None])


def one_norm_and_adjoint(h1: np.ndarray, g2: np.ndarray, smoothing: float = 0.0):
    """(lambda, d lambda / d h, d lambda / d g) with the subgradient sign(0) = 0."""
    n = h1.shape[0]
    A = one_body_norm_argument(h1, g2)
    B = exchange_difference(g2)
    aA, sA = _abs(A, smoothing)
    aB, sB = _abs(B, smoothing)
    aC, sC = _abs(g2, smoothing)
    m = _mask(n)
    cost = aA.sum() + 0.5 * aB[m].sum() + 0.25 * aC.sum()
    I = np.eye(n)
    Gh = sA
    Gg = np.einsum("pq,rs->pqrs", sA, I) - 0.5 * np.einsum("ps,qr->pqrs", sA, I)
    W = 0.5 * sB * m
    Gg = Gg + W - W.transpose(0, 3, 2, 1) + 0.25 * sC
    return float(cost), Gh, Gg


# --- orbital rotation ------------------------------------------------------

def antisymmetric(params: np.ndarray, n: int) -> np.ndarray:
    K = np.zeros((n, n))
    K[np.triu_indices(n, 1)] = params
    return K - K.T


def expm_antisymmetric(K: np.ndarray) -> np.ndarray:
    """exp(-K) through the eigendecomposition of the Hermitian matrix iK."""
    w, V = np.linalg.eigh(1j * K)
    return ((V * np.exp(1j * w)) @ V.conj().T).real


@dataclass(frozen=True, eq=False)
class OrbitalRotation:
    K: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1] or not np.array_equal(K, -K.T):
            raise ValueError("K must be a real antisymmetric square matrix")

    @classmethod
    def from_params(cls, params, n: int) -> "OrbitalRotation":
        return cls(antisymmetric(np.asarray(params, float), n))

    @classmethod
    def from_unitary(cls, U: np.ndarray) -> "OrbitalRotation":
        if np.linalg.det(U) < 0:
            raise ValueError("orbital rotation must lie in SO(n)")
        L = scipy.linalg.logm(U)
        K = -np.real(L)
        return cls(0.5 * (K - K.T))

    @property
    def params(self) -> np.ndarray:
        return self.K[np.triu_indices(self.K.shape[0], 1)]

    @property
    def U(self) -> np.ndarray:
        return expm_antisymmetric(self.K)


def transform_integrals(ints: ElectronIntegrals, U: np.ndarray) -> ElectronIntegrals:
    h = U.T @ ints.h1 @ U
    g = np.einsum("ip,jq,ijkl,kr,ls->pqrs", U, U, ints.g2, U, U, optimize=True)
    return ints.replace(h1=h, g2=g)


def rotate_integrals(ints: ElectronIntegrals, K) -> ElectronIntegrals:
    """h -> U^T h U and the four-index congruence for g, with U = exp(-K)."""
    rot = K if isinstance(K, OrbitalRotation) else OrbitalRotation(np.asarray(K, float))
    return transform_integrals(ints, rot.U)


def rotation_gradient(h1: np.ndarray, g2: np.ndarray, Gh: np.ndarray, Gg: np.ndarray) -> np.ndarray:
    """Antisymmetric gradient of the cost for U = exp(-kappa) applied at kappa = 0."""
    G = Gh @ h1.T - h1.T @ Gh
    G = G + np.einsum("pqrs,iqrs->pi", Gg, g2) + np.einsum("pqrs,pirs->qi", Gg, g2)
    G = G + np.einsum("pqrs,pqis->ri", Gg, g2) + np.einsum("pqrs,pqri->si", Gg, g2)
    return G - G.T


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 8
    max_iter: int = 400
    step: float = 0.05
    tol: float = 1e-10
    init_scale: float = 0.5
    smoothing: float = 0.0
    polish: bool = True
    seed: int = 0
    jobs: int = 1


@dataclass
class ReductionResult:
    before: float
    after: float
    trace: list[float] = field(default_factory=list)  # best cost after each restart


def _descend(cost_grad, x0, cfg: OptimizerConfig, retract=None):
    """Subgradient descent with an adaptive step; returns the best point seen."""
    x = x0
    f, g = cost_grad(x)
    best = (f, x)
    step = cfg.step
    for _ in range(cfg.max_iter):
        gn = np.linalg.norm(g)
        if gn == 0 or step < cfg.tol:
            break
        d = -step * g / gn
        y = retract(x, d) if retract else x + d
        fy, gy = cost_grad(y)
        if fy < f:
            x, f, g = y, fy, gy
            step *= 1.2
            if f < best[0]:
                best = (f, x)
        else:
            step *= 0.5
    return best


def _orbital_restart(args):
    ints, U0, cfg = args
    n = ints.n_orb

    def cost_grad(U):
        r = transform_integrals(ints, U)
        c, Gh, Gg = one_norm_and_adjoint(r.h1, r.g2, cfg.smoothing)
        return c, rotation_gradient(r.h1, r.g2, Gh, Gg)

    def retract(U, d):
        return U @ expm_antisymmetric(d)

    f, U = _descend(cost_grad, U0, cfg, retract)
    if cfg.polish and n > 1:
        def fun(p):
            return integral_one_norm(transform_integrals(ints, U @ expm_antisymmetric(antisymmetric(p, n))))
        res = minimize(fun, np.zeros(n * (n - 1) // 2), method="Nelder-Mead",
                       options=dict(maxiter=4000, xatol=1e-9, fatol=1e-12))
        if res.fun < f:
            f, U = float(res.fun), U @ expm_antisymmetric(antisymmetric(res.x, n))
    return f, U


def _map(fn, jobs, items):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(a) for a in items]


def minimize_one_norm_orbital(ints: ElectronIntegrals, cfg: OptimizerConfig = OptimizerConfig()):
    """Multi-restart orbital-rotation descent. Returns (OrbitalRotation, rotated ints, result)."""
    n = ints.n_orb
    lam0 = integral_one_norm(ints)
    if n < 2:
        return OrbitalRotation(np.zeros((n, n))), ints, ReductionResult(lam0, lam0, [lam0])
    rng = np.random.default_rng(cfg.seed)
    starts = [np.eye(n)]
    for _ in range(cfg.restarts - 1):
        starts.append(expm_antisymmetric(antisymmetric(rng.normal(scale=cfg.init_scale, size=n * (n - 1) // 2), n)))
    out = _map(_orbital_restart, cfg.jobs, [(ints, U, cfg) for U in starts])
    trace, best = [], (lam0, np.eye(n))
    for f, U in out:
        if f < best[0]:
            best = (f, U)
        trace.append(best[0])
    f, U = best
    if np.linalg.det(U) < 0:  # pragma: no cover - rotations compose inside SO(n)
        U = U.copy()
        U[:, 0] *= -1
    rot = OrbitalRotation.from_unitary(U) if f < lam0 else OrbitalRotation(np.zeros((n, n)))
    new = rotate_integrals(ints, rot) if f < lam0 else ints
    return rot, new, ReductionResult(lam0, integral_one_norm(new), trace)


# --- BLISS -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BlissParams:
    mu1: float
    mu2: float
    xi: np.ndarray
    n_e: int

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if not np.array_equal(xi, xi.T):
            raise ValueError("xi must be symmetric")

    @classmethod
    def zeros(cls, n_orb: int, n_e: int) -> "BlissParams":
        return cls(0.0, 0.0, np.zeros((n_orb, n_orb)), n_e)

    @classmethod
    def from_vector(cls, x, n_orb: int, n_e: int) -> "BlissParams":
        x = np.asarray(x, dtype=float)
        xi = np.zeros((n_orb, n_orb))
        xi[np.triu_indices(n_orb)] = x[2:]
        xi = xi + xi.T - np.diag(np.diag(xi))
        return cls(float(x[0]), float(x[1]), xi, n_e)

    def vector(self) -> np.ndarray:
        return np.r_[self.mu1, self.mu2, self.xi[np.triu_indices(self.xi.shape[0])]]


def bliss_shift(ints: ElectronIntegrals, params: BlissParams) -> tuple[ElectronIntegrals, float]:
    """Integrals of H - T with T vanishing on the N_e sector; returns (ints, constant).

    The constant mu1 N_e + mu2 N_e^2 is already folded into the core energy of
    the returned integrals and is reported separately for bookkeeping.
    """
    n = ints.n_orb
    I = np.eye(n)
    ne = params.n_e
    xi = params.xi
    h = ints.h1 - (params.mu1 + params.mu2) * I + (ne - 1) * xi
    g = ints.g2 - 2 * params.mu2 * np.einsum("pq,rs->pqrs", I, I) - (
        np.einsum("pq,rs->pqrs", xi, I) + np.einsum("pq,rs->pqrs", I, xi)
    )
    const = params.mu1 * ne + params.mu2 * ne**2
    return ints.replace(h1=h, g2=g, core_energy=ints.core_energy + const), const


def _bliss_pullback(Gh: np.ndarray, Gg: np.ndarray, n_e: int):
    d_mu1 = -np.trace(Gh)
    d_mu2 = -np.trace(Gh) - 2 * np.einsum("pprr->", Gg)
    # xi enters h with (N_e - 1) and g as -(xi_pq d_rs + d_pq xi_rs)
    Gx = (n_e - 1) * Gh - np.einsum("pqrr->pq", Gg) - np.einsum("rrpq->pq", Gg)
    Gsym = Gx + Gx.T - np.diag(np.diag(Gx))
    return float(d_mu1), float(d_mu2), Gsym


def bliss_cost_and_gradient(ints: ElectronIntegrals, params: BlissParams, smoothing: float = 0.0):
    """(lambda, d/d mu1, d/d mu2, d/d xi) with d/d xi symmetric (entry pq is the p<=q parameter)."""
    shifted, _ = bliss_shift(ints, params)
    c, Gh, Gg = one_norm_and_adjoint(shifted.h1, shifted.g2, smoothing)
    return (c, *_bliss_pullback(Gh, Gg, params.n_e))


def _bliss_restart(args):
    ints, n_e, x0, cfg = args
    n = ints.n_orb

    def cost_grad(x):
        c, d1, d2, gx = bliss_cost_and_gradient(ints, BlissParams.from_vector(x, n, n_e), cfg.smoothing)
        return c, np.r_[d1, d2, gx[np.triu_indices(n)]]

    f, x = _descend(cost_grad, x0, cfg)
    if cfg.polish:
        fun = lambda y: cost_grad(y)[0]  # noqa: E731
        for _ in range(2):
            res = minimize(fun, x, method="Nelder-Mead",
                           options=dict(maxiter=20000, xatol=1e-10, fatol=1e-13, adaptive=True))
            if res.fun < f:
                f, x = float(res.fun), res.x
    return f, x


def minimize_bliss(ints: ElectronIntegrals, n_e: int | None = None, cfg: OptimizerConfig = OptimizerConfig()):
    """Multi-restart BLISS optimization. Returns (params, shifted ints, result)."""
    n = ints.n_orb
    n_e = ints.n_electrons if n_e is None else n_e
    lam0 = integral_one_norm(ints)
    size = 2 + n * (n + 1) // 2
    zero = BlissParams.zeros(n, n_e)
    if cfg.max_iter == 0 and not cfg.polish:
        return zero, ints, ReductionResult(lam0, lam0, [lam0])
    rng = np.random.default_rng(cfg.seed)
    starts = [np.zeros(size)] + [rng.normal(scale=cfg.init_scale, size=size) for _ in range(cfg.restarts - 1)]
    out = _map(_bliss_restart, cfg.jobs, [(ints, n_e, x, cfg) for x in starts])
    trace, best = [], (lam0, np.zeros(size))
    for f, x in out:
        if f < best[0]:
            best = (f, x)
        trace.append(best[0])
    params = BlissParams.from_vector(best[1], n, n_e) if best[0] < lam0 else zero
    new, _ = bliss_shift(ints, params)
    return params, new, ReductionResult(lam0, integral_one_norm(new), trace)


# --- Hartree-Fock spectral range ----------------------------------------------

def hf_energy(ints: ElectronIntegrals, n_alpha: int | None = None, n_beta: int | None = None) -> float:
    """Single-determinant energy with the lowest n_alpha / n_beta orbitals occupied."""
    na = ints.n_alpha if n_alpha is None else n_alpha
    nb = ints.n_beta if n_beta is None else n_beta
    h, g = ints.h1, ints.g2
    Jm = np.einsum("ppqq->pq", g)
    Km = np.einsum("pqqp->pq", g)
    a, b = np.arange(na), np.arange(nb)
    e = h[a, a].sum() + h[b, b].sum()
    e += 0.5 * (Jm[np.ix_(a, a)] - Km[np.ix_(a, a)]).sum()
    e += 0.5 * (Jm[np.ix_(b, b)] - Km[np.ix_(b, b)]).sum()
    e += Jm[np.ix_(a, b)].sum()
    return float(e + ints.core_energy)


def hf_spectral_range(ints: ElectronIntegrals, n_alpha: int | None = None, n_beta: int | None = None,
                      cfg: OptimizerConfig = OptimizerConfig()) -> tuple[float, float, float]:
    """(E_min, E_max, E_max - E_min) of the HF energy over orbital rotations."""
    na = ints.n_alpha if n_alpha is None else n_alpha
    nb = ints.n_beta if n_beta is None else n_beta
    n = ints.n_orb
    if na > n or nb > n:
        raise ValueError("electron counts exceed the number of orbitals")
    npar = n * (n - 1) // 2
    if npar == 0:
        e = hf_energy(ints, na, nb)
        return e, e, 0.0
    rng = np.random.default_rng(cfg.seed)
    starts = [np.zeros(npar)] + [rng.normal(scale=math.pi / 2, size=npar) for _ in range(cfg.restarts - 1)]

    def energy(p):
        return hf_energy(rotate_integrals(ints, antisymmetric(p, n)), na, nb)

    lo = min(minimize(energy, x0, method="BFGS").fun for x0 in starts)
    hi = -min(minimize(lambda p: -energy(p), x0, method="BFGS").fun for x0 in starts)
    return float(lo), float(hi), float(hi - lo)
