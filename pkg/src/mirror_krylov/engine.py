"""KQD and MSD pipelines, optimal time shift, perturbation bounds and cost model."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.stats import gaussian_kde

from .chem import ElectronIntegrals, hartree_fock_index, jordan_wigner, load_fixture, sector_basis
from .finitediff import bound_constants, fd_coefficients
from .krylov import (
    KrylovConfig,
    assemble_kqd,
    assemble_msd,
    exact_matrices,
    optimal_threshold,
    solve_gevp,
)
from .moments import MomentSet, lanczos_mitigate, moment_perturbation_bound, moments_from, power_matrices
from .pauli import PauliLcu
from .sampling import kqd_lcu_plan, krylov_row_shots, msd_plan, overlap_plan
from .spectral import SectorSpectrum, SpectralOracle, oracle_from_lcu, sector_spectrum

EXACT_MODE_THRESHOLD = 1e-12
# exact mode still differentiates numerically; picking dt as if M = 1/eps_mach^2
# balances the finite-difference error against floating-point cancellation
EXACT_MODE_SHOTS = 1.0 / np.finfo(float).eps ** 2


# --- theory -----------------------------------------------------------------

def _log2n(n: int) -> float:
    return math.log(2 * n)


def optimal_delta_t(n: int, J: int, h_norm: float, M: float) -> float:
    if min(n, J, h_norm, M) <= 0:
        raise ValueError("optimal_delta_t needs positive arguments")
    alpha, beta = bound_constants(n, J)
    return (alpha / (2 * J * beta * h_norm ** (2 * J + 1) * math.sqrt(M))) ** (1.0 / (2 * J + 1))


def msd_sampling_bound(n: int, J: int, dt: float, M: float) -> float:
    """Sampling part of the MSD Hamiltonian perturbation."""
    if M <= 0:
        return math.inf
    l1 = fd_coefficients(J, 1).l1
    return 2 * n * l1 * math.sqrt(2 * _log2n(n)) / (dt * math.sqrt(M))


def msd_fd_bound(n: int, J: int, dt: float, h_norm: float) -> float:
    """Finite-difference part of the MSD Hamiltonian perturbation."""
    sch = fd_coefficients(J, 1)
    return n * sch.remainder_sum(2 * J + 1) * h_norm ** (2 * J + 1) / math.factorial(2 * J + 1) * dt ** (2 * J)


def msd_combined_bound(n: int, J: int, dt: float, h_norm: float, M: float) -> float:
    return msd_sampling_bound(n, J, dt, M) + msd_fd_bound(n, J, dt, h_norm)


def kqd_overlap_bound(n: int, M: float) -> float:
    return 2 * n * math.sqrt(2 * _log2n(n)) / math.sqrt(M) if M > 0 else math.inf


def kqd_hamiltonian_bound(n: int, lam: float, M: float) -> float:
    return lam * kqd_overlap_bound(n, M)


def msd_sampling_cost(n: int, J: int, h_norm: float, eta: float) -> float:
    if eta <= 0:
        raise ValueError("target accuracy must be positive")
    alpha, beta = bound_constants(n, J)
    p = 2 + 1 / J
    return (2 * J + 1) ** p * alpha**2 * beta ** (1 / J) * h_norm**p / ((2 * J) ** 2 * eta**p)


def kqd_sampling_cost(n: int, lam: float, eta: float) -> float:
    """8 n^2 log(2n) lambda^2 / eta^2 (log argument 2n, as in the KQD bound)."""
    if min(n, lam, eta) <= 0:
        raise ValueError("kqd_sampling_cost needs positive arguments")
    return 8 * n**2 * _log2n(n) * lam**2 / eta**2


def sampling_lower_bound(n: int, spectral_range: float, eta: float) -> float:
    if min(n, spectral_range, eta) <= 0:
        raise ValueError("sampling_lower_bound needs positive arguments")
    return 2 * n**2 * _log2n(n) * spectral_range**2 / eta**2


@dataclass(frozen=True)
class EvolutionTimes:
    t_max: float
    t_total: float  # exact sum over the integer shot plan
    t_total_bound: float  # closed form (KQD) or upper bound (MSD)


def evolution_times(n: int, tau: float, J: int, dt: float, M: int, method: str) -> EvolutionTimes:
    """Maximum and total Hadamard-test evolution time for the Hamiltonian matrix."""
    M = int(round(M))
    if method == "kqd":
        t_max = (n - 1) * tau
        total = 0.0
        bound = n * (n - 1) / (2 * (n - 1) + math.sqrt(2)) * M * tau
        if M > 0 and n > 1:
            mk = krylov_row_shots(n, M, "hamiltonian")
            total = float(sum(m * k * tau for k, m in enumerate(mk)))
        return EvolutionTimes(t_max, total, bound)
    if method == "msd":
        sch = fd_coefficients(J, 1)
        t_max = (n - 1) * tau + J * dt
        total = 0.0
        if M > 0 and n > 1:
            for e in msd_plan(n, M, sch).entries:
                _, k, j = e.key
                total += e.total * abs(k * tau + j * dt)
        bound = n * (n - 1) * M * tau / (math.sqrt(2) * (n - 1) + 1) + 2 * J * M * dt / sch.l1
        return EvolutionTimes(t_max, total, bound)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class BoundReport:
    n: int
    J: int
    M: float
    lam: float
    spectral_range: float
    h_norm: float
    tau: float
    dt: float
    eta: float
    kqd_delta_s: float
    kqd_delta_h: float
    msd_sampling: float
    msd_fd: float
    msd_combined: float
    M_kqd: float
    M_msd: float
    M_lowest: float
    t_max_kqd: float
    t_max_msd: float
    t_total_kqd: float
    t_total_msd: float
    t_total_kqd_bound: float
    t_total_msd_bound: float

    @property
    def R_M(self) -> float:
        return self.M_msd / self.M_kqd

    @property
    def R_T_max(self) -> float:
        return self.t_max_msd / self.t_max_kqd

    @property
    def R_T_total(self) -> float:
        return self.t_total_msd / self.t_total_kqd if self.t_total_kqd else math.nan

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d.update(R_M=self.R_M, R_T_max=self.R_T_max, R_T_total=self.R_T_total)
        return d


def bound_report(
    n: int, J: int, lam: float, spectral_range: float, M: float | None = None, eta: float = 0.0016,
    dt: float | None = None,
) -> BoundReport:
    """Evaluate every bound at shot budget M.

    When M is None the MSD budget predicted for accuracy ``eta`` is used. The
    time ratios compare MSD at its own predicted budget with KQD at its own.
    """
    h_norm = spectral_range / 2
    tau = math.pi / spectral_range
    M_msd = msd_sampling_cost(n, J, h_norm, eta)
    M_kqd = kqd_sampling_cost(n, lam, eta)
    M_use = M_msd if M is None else M
    dt_use = optimal_delta_t(n, J, h_norm, M_use) if dt is None else dt
    dt_cost = optimal_delta_t(n, J, h_norm, M_msd)
    tk = evolution_times(n, tau, J, dt_cost, M_kqd, "kqd")
    tm = evolution_times(n, tau, J, dt_cost, M_msd, "msd")
    return BoundReport(
        n=n, J=J, M=float(M_use), lam=lam, spectral_range=spectral_range, h_norm=h_norm, tau=tau, dt=dt_use,
        eta=eta,
        kqd_delta_s=kqd_overlap_bound(n, M_use),
        kqd_delta_h=kqd_hamiltonian_bound(n, lam, M_use),
        msd_sampling=msd_sampling_bound(n, J, dt_use, M_use),
        msd_fd=msd_fd_bound(n, J, dt_use, h_norm),
        msd_combined=msd_combined_bound(n, J, dt_use, h_norm, M_use),
        M_kqd=M_kqd, M_msd=M_msd, M_lowest=sampling_lower_bound(n, spectral_range, eta),
        t_max_kqd=tk.t_max, t_max_msd=tm.t_max,
        t_total_kqd=tk.t_total, t_total_msd=tm.t_total,
        t_total_kqd_bound=tk.t_total_bound, t_total_msd_bound=tm.t_total_bound,
    )


# --- problem setup ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Problem:
    """A Hamiltonian with its exact oracle, reference state and target sector."""

    name: str
    hamiltonian: PauliLcu
    oracle: SpectralOracle
    phi0: np.ndarray = field(repr=False)
    sector: SectorSpectrum
    range_estimate: tuple[float, float] | None = None  # (e_min, e_max) used for the shift

    @property
    def e_exact(self) -> float:
        return self.sector.e_min

    @property
    def shift_bounds(self) -> tuple[float, float]:
        return self.range_estimate or (self.sector.e_min, self.sector.e_max)

    @classmethod
    def from_integrals(cls, ints: ElectronIntegrals, name: str = "custom", S: float = 0.0,
                       full_space_qubits: int = 8) -> "Problem":
        h = jordan_wigner(ints)
        basis = None
        if h.n_qubits > full_space_qubits:
            basis = sector_basis(ints.n_orb, n_e=ints.n_electrons)
        oracle = oracle_from_lcu(h, ints.n_orb, basis=basis)
        sec = sector_spectrum(oracle, ints.n_electrons, S)
        phi0 = oracle.basis_state(hartree_fock_index(ints.n_orb, ints.n_alpha, ints.n_beta))
        return cls(name, h, oracle, phi0, sec)

    @classmethod
    def from_fixture(cls, name: str, **kw) -> "Problem":
        ints, _ = load_fixture(name)
        return cls.from_integrals(ints, name=name, **kw)

    @classmethod
    def from_pauli(cls, h: PauliLcu, name: str = "pauli", phi0_index: int = 0) -> "Problem":
        oracle = oracle_from_lcu(h)
        sec = sector_spectrum(oracle)
        return cls(name, h, oracle, oracle.basis_state(phi0_index), sec)

    def with_range_estimate(self, e_min: float, e_max: float) -> "Problem":
        return replace(self, range_estimate=(float(e_min), float(e_max)))


@dataclass(frozen=True)
class PipelineOptions:
    n: int = 2
    J: int = 2
    exact_mode: bool = False
    dt: float | None = None
    threshold: float | None = None
    moments: bool = False
    lanczos_guard: bool = True  # reject Lanczos steps outside the known spectral interval
    seed: int = 0
    jobs: int = 1


@dataclass(frozen=True)
class TrialResult:
    trial: int
    method: str
    n: int
    J: int
    M: int
    delta_t: float
    threshold: float
    n_eps: int
    energy: float
    energy_error: float
    delta_H_norm: float
    delta_S_norm: float
    mitigated_energy: float = math.nan
    mitigated_error: float = math.nan
    lanczos_steps: int = 0
    lanczos_reason: str = ""
    zero_shot_elements: int = 0


CSV_FIELDS = [f for f in TrialResult.__dataclass_fields__]


@dataclass
class PipelineResult:
    trials: list[TrialResult]
    bounds: BoundReport | None
    summary: dict


@dataclass(frozen=True, eq=False)
class _Prepared:
    method: str
    M: int
    opts: PipelineOptions
    problem: Problem
    oracle: SpectralOracle  # shifted
    h: PauliLcu  # shifted
    shift: float
    cfg: KrylovConfig
    exact: object
    plans: tuple
    threshold: float
    h_norm: float


def prepare(problem: Problem, method: str, M: int, opts: PipelineOptions) -> _Prepared:
    if method not in ("kqd", "msd"):
        raise ValueError(f"unknown method {method!r}")
    e_lo, e_hi = problem.shift_bounds
    spectral_range = e_hi - e_lo
    if spectral_range <= 0:
        raise ValueError("spectral range must be positive")
    shift = 0.5 * (e_lo + e_hi)
    oracle = problem.oracle.shifted(shift)
    h = problem.hamiltonian.shifted(-shift)
    h_norm = spectral_range / 2
    tau = math.pi / spectral_range
    n, J = opts.n, opts.J
    dt = None
    if method == "msd":
        if opts.dt is not None:
            dt = opts.dt
        else:
            M_eff = EXACT_MODE_SHOTS if opts.exact_mode else M
            if M_eff <= 0:
                raise ValueError("MSD needs M > 0 or an explicit dt")
            dt = optimal_delta_t(n, J, h_norm, M_eff)
    cfg = KrylovConfig(n, tau, problem.phi0, J=J, dt=dt)
    exact = exact_matrices(oracle, cfg)
    plans = (None, None)
    if not opts.exact_mode:
        if n < 2:
            raise ValueError("sampled runs need n >= 2")
        pS = overlap_plan(n, M)
        if method == "kqd":
            plans = (kqd_lcu_plan(n, M, h.coeffs), pS)
        else:
            plans = (msd_plan(n, M, fd_coefficients(J, 1)), pS)
    if opts.threshold is not None:
        eps = opts.threshold
    elif opts.exact_mode:
        eps = EXACT_MODE_THRESHOLD
    else:
        ds = kqd_overlap_bound(n, M)
        dh = kqd_hamiltonian_bound(n, h.one_norm(), M) if method == "kqd" else msd_combined_bound(n, J, dt, h_norm, M)
        eps = optimal_threshold(ds, dh, h_norm)
    return _Prepared(method, int(M), opts, problem, oracle, h, shift, cfg, exact, plans, eps, h_norm)


def _estimate(p: _Prepared, trial: int):
    o = p.opts
    if p.method == "kqd":
        est = assemble_kqd(p.oracle, p.h, p.cfg, *p.plans, seed=o.seed, trial=trial, exact_mode=o.exact_mode)
    else:
        est = assemble_msd(p.oracle, p.cfg, *p.plans, seed=o.seed, trial=trial, exact_mode=o.exact_mode)
    return est, solve_gevp(est.H, est.S, p.threshold)


def trial_moments(p: _Prepared, trial: int, est=None, sol=None):
    """(MomentSet, LanczosState) for one MSD trial, energies relative to the shift."""
    if p.method != "msd":
        raise ValueError("moments are built from MSD propagator data")
    if est is None:
        est, sol = _estimate(p, trial)
    J, dt = p.cfg.J, p.cfg.dt
    pw = power_matrices(est.u_rows, J, dt)
    ms = moments_from(pw, sol.eigenvectors[:, 0], est.S)
    if not p.opts.exact_mode:
        bounds = np.array([1.0] + [moment_perturbation_bound(p.cfg.n, J, q, dt, p.h_norm, p.M)
                                   for q in range(1, 2 * J + 1)])
        ms = MomentSet(ms.mu, ms.v0, bounds)
    guard = p.h_norm if p.opts.lanczos_guard else None
    return ms, lanczos_mitigate(ms, scale=p.h_norm, spectral_bound=guard)


def run_trial(p: _Prepared, trial: int) -> TrialResult:
    o = p.opts
    est, sol = _estimate(p, trial)
    H_ref = p.exact.H - est.offset * p.exact.S if p.method == "kqd" else p.exact.H
    dH = float(np.linalg.norm(est.H - H_ref, 2))
    dS = float(np.linalg.norm(est.S - p.exact.S, 2))
    energy = float(sol.eigenvalues[0] + est.offset + p.shift)
    mit_e = mit_err = math.nan
    steps, reason = 0, ""
    if p.method == "msd" and o.moments:
        _, st = trial_moments(p, trial, est, sol)
        mit_e = st.energy + p.shift
        mit_err = mit_e - p.problem.e_exact
        steps, reason = st.steps, st.reason
    return TrialResult(
        trial=trial, method=p.method, n=p.cfg.n, J=p.cfg.J if p.method == "msd" else 0, M=p.M,
        delta_t=float(p.cfg.dt) if p.cfg.dt is not None else 0.0, threshold=float(p.threshold),
        n_eps=sol.n_eps, energy=energy, energy_error=energy - p.problem.e_exact,
        delta_H_norm=dH, delta_S_norm=dS, mitigated_energy=float(mit_e), mitigated_error=float(mit_err),
        lanczos_steps=steps, lanczos_reason=reason, zero_shot_elements=int(est.meta.get("zero_shot_elements", 0)),
    )


def _run_chunk(args):
    p, trials = args
    return [run_trial(p, t) for t in trials]


def fwhm(values) -> float:
    """Full width at half maximum of a Gaussian-kernel density estimate."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if len(v) < 2 or np.ptp(v) == 0:
        return 0.0
    kde = gaussian_kde(v)
    lo, hi = v.min() - np.ptp(v), v.max() + np.ptp(v)
    x = np.linspace(lo, hi, 4001)
    y = kde(x)
    above = np.nonzero(y >= y.max() / 2)[0]
    return float(x[above[-1]] - x[above[0]])


def summarize(trials: list[TrialResult], bound: float | None = None) -> dict:
    err = np.array([abs(t.energy_error) for t in trials])
    out = {
        "trials": len(trials),
        "mean_abs_error": float(err.mean()),
        "std_error": float(np.std([t.energy_error for t in trials])),
        "fwhm_error": fwhm([t.energy_error for t in trials]),
        "mean_delta_H": float(np.mean([t.delta_H_norm for t in trials])),
        "mean_delta_S": float(np.mean([t.delta_S_norm for t in trials])),
    }
    mit = np.array([t.mitigated_error for t in trials])
    if np.isfinite(mit).any():
        out["mean_abs_mitigated_error"] = float(np.nanmean(np.abs(mit)))
        out["std_mitigated_error"] = float(np.nanstd(mit))
        out["fwhm_mitigated_error"] = fwhm(mit)
    if bound is not None:
        out["delta_H_bound"] = bound
        out["fraction_under_bound"] = float(np.mean([t.delta_H_norm <= bound for t in trials]))
    return out


def default_jobs() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover
        return os.cpu_count() or 1


def run_pipeline(problem: Problem, method: str, M: int, trials: int = 1,
                 options: PipelineOptions = PipelineOptions()) -> PipelineResult:
    """Run independent trials; results are identical for any worker count."""
    p = prepare(problem, method, M, options)
    idx = list(range(trials))
    jobs = max(1, options.jobs)
    if jobs == 1 or trials < 2:
        results = [run_trial(p, t) for t in idx]
    else:
        chunks = [idx[k::jobs] for k in range(jobs) if idx[k::jobs]]
        with ProcessPoolExecutor(max_workers=len(chunks)) as ex:
            parts = list(ex.map(_run_chunk, [(p, c) for c in chunks]))
        results = sorted((r for part in parts for r in part), key=lambda r: r.trial)
    e_lo, e_hi = problem.shift_bounds
    rep = None
    if M > 0 and options.n >= 2:
        rep = bound_report(options.n, options.J, problem.hamiltonian.one_norm(), e_hi - e_lo, M=M,
                           dt=p.cfg.dt)
    bound = None
    if rep is not None and not options.exact_mode:
        bound = rep.kqd_delta_h if method == "kqd" else rep.msd_combined
    return PipelineResult(results, rep, summarize(results, bound))
