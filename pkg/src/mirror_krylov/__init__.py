"""Krylov ground-state estimation from sampled time-evolution data.

Two estimators for the projected Hamiltonian are provided: per-term LCU
measurement (KQD) and a central finite difference of time-shifted propagators
(MSD). Everything runs on an exact statevector oracle with emulated shot noise.
"""
from .chem import (
    ElectronIntegrals,
    FcidumpError,
    emit_fcidump,
    integral_one_norm,
    jordan_wigner,
    load_fixture,
    parse_fcidump,
)
from .engine import (
    BoundReport,
    PipelineOptions,
    Problem,
    bound_report,
    kqd_sampling_cost,
    msd_sampling_cost,
    optimal_delta_t,
    run_pipeline,
    sampling_lower_bound,
)
from .finitediff import FdScheme, fd_coefficients
from .krylov import KrylovConfig, assemble_kqd, assemble_msd, solve_gevp
from .moments import lanczos_mitigate, moments_from, power_matrices
from .pauli import PauliLcu, PauliString
from .spectral import NumericalError, SpectralOracle, sector_spectrum

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "ElectronIntegrals",
    "FcidumpError",
    "FdScheme",
    "KrylovConfig",
    "NumericalError",
    "PauliLcu",
    "PauliString",
    "PipelineOptions",
    "Problem",
    "SpectralOracle",
    "assemble_kqd",
    "assemble_msd",
    "bound_report",
    "emit_fcidump",
    "fd_coefficients",
    "integral_one_norm",
    "jordan_wigner",
    "kqd_sampling_cost",
    "lanczos_mitigate",
    "load_fixture",
    "moments_from",
    "msd_sampling_cost",
    "optimal_delta_t",
    "parse_fcidump",
    "power_matrices",
    "run_pipeline",
    "sampling_lower_bound",
    "sector_spectrum",
    "solve_gevp",
]
