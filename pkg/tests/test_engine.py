import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from mirror_krylov.engine import (
    PipelineOptions,
    Problem,
    bound_report,
    evolution_times,
    kqd_hamiltonian_bound,
    kqd_sampling_cost,
    msd_combined_bound,
    msd_fd_bound,
    msd_sampling_bound,
    msd_sampling_cost,
    optimal_delta_t,
    run_pipeline,
    sampling_lower_bound,
    summarize,
)
from mirror_krylov.finitediff import bound_constants


@pytest.fixture(scope="module")
def sto3g():
    return Problem.from_fixture("h2-sto3g")


def f_bound(dt, n, J, hn, M):
    a, b = bound_constants(n, J)
    return a / (dt * math.sqrt(M)) + b * hn ** (2 * J + 1) * dt ** (2 * J)


def test_optimal_dt_golden_section():
    n, J, hn, M = 2, 2, 1.5, 1e8
    dt = optimal_delta_t(n, J, hn, M)
    res = minimize_scalar(f_bound, bracket=(1e-4, 0.01, 2.0), args=(n, J, hn, M), method="golden",
                          options={"xtol": 1e-10})
    assert dt == pytest.approx(res.x, rel=0.01)


@pytest.mark.parametrize("J", [1, 2, 3, 5])
def test_optimal_dt_stationary_and_scaling(J):
    n, hn, M = 3, 0.8, 1e6
    dt = optimal_delta_t(n, J, hn, M)
    h = dt * 1e-5
    deriv = (f_bound(dt + h, n, J, hn, M) - f_bound(dt - h, n, J, hn, M)) / (2 * h)
    assert abs(deriv) * dt <= 1e-6 * f_bound(dt, n, J, hn, M)
    ratio = optimal_delta_t(n, J, hn, M * 16) / dt
    assert ratio == pytest.approx(16 ** (-1 / (2 * (2 * J + 1))), rel=1e-12)
    with pytest.raises(ValueError):
        optimal_delta_t(n, J, hn, 0)


def test_combined_is_sum():
    args = (3, 2, 0.05, 0.9)
    assert msd_combined_bound(*args, 1e6) == msd_sampling_bound(3, 2, 0.05, 1e6) + msd_fd_bound(*args)
    assert msd_sampling_bound(3, 2, 0.05, 0) == math.inf


@pytest.mark.parametrize("n,J,hn,eta", [(2, 2, 0.81, 0.0016), (4, 3, 1.5, 0.01), (10, 10, 3.66, 0.0016)])
def test_msd_cost_self_consistent(n, J, hn, eta):
    M = msd_sampling_cost(n, J, hn, eta)
    dt = optimal_delta_t(n, J, hn, M)
    assert msd_combined_bound(n, J, dt, hn, M) == pytest.approx(eta, rel=1e-9)
    assert msd_sampling_cost(n, J, hn, 2 * eta) == pytest.approx(M / 2 ** (2 + 1 / J), rel=1e-12)


def test_kqd_cost():
    assert kqd_sampling_cost(2, 1.86, 0.0016) == pytest.approx(8 * 4 * math.log(4) * 1.86**2 / 0.0016**2, rel=1e-15)
    assert kqd_sampling_cost(1, 1.0, 1.0) == pytest.approx(8 * math.log(2))
    assert kqd_sampling_cost(3, 2.0, 0.1) == pytest.approx(4 * kqd_sampling_cost(3, 1.0, 0.1))
    # inverting the KQD Hamiltonian bound reproduces eta
    M = kqd_sampling_cost(5, 3.0, 0.02)
    assert kqd_hamiltonian_bound(5, 3.0, M) == pytest.approx(0.02, rel=1e-12)


def test_lower_bound():
    assert sampling_lower_bound(1, 2.0, 1.0) == pytest.approx(8 * math.log(2))
    for lam, de in [(1.0, 2.0), (1.86, 1.62), (11.5, 3.1)]:
        assert lam >= de / 2
        assert sampling_lower_bound(4, de, 0.01) <= kqd_sampling_cost(4, lam, 0.01)


def test_evolution_times_examples():
    assert evolution_times(3, 1.0, 2, 0.1, 1000, "kqd").t_max == 2.0
    assert evolution_times(3, 1.0, 2, 0.1, 1000, "msd").t_max == pytest.approx(2.2)
    for m in ("kqd", "msd"):
        assert evolution_times(3, 1.0, 2, 0.1, 0, m).t_total == 0.0
    with pytest.raises(ValueError):
        evolution_times(3, 1.0, 2, 0.1, 10, "qpe")


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_t_total_bound_forms(n):
    tau, dt, M = 0.7, 0.02, 10**6
    k = evolution_times(n, tau, n, dt, M, "kqd")
    m = evolution_times(n, tau, n, dt, M, "msd")
    assert k.t_total == pytest.approx(k.t_total_bound, rel=1e-3)
    assert m.t_total <= m.t_total_bound * (1 + 1e-6)
    assert m.t_total / M <= n * tau / math.sqrt(2) + n * dt / math.log(n) if n > 1 else True


def test_bound_report_fields():
    r = bound_report(10, 10, 101.3, 7.32)
    assert r.msd_combined == pytest.approx(0.0016, rel=1e-9)
    assert r.R_M == pytest.approx(r.M_msd / r.M_kqd)
    for k, v in r.to_json_dict().items():
        if isinstance(v, float):
            assert v >= 0, k
    assert r.M_lowest <= r.M_kqd


def test_exact_pipeline(sto3g):
    for method in ("kqd", "msd"):
        res = run_pipeline(sto3g, method, 0, 1, PipelineOptions(n=3, J=3, exact_mode=True))
        assert abs(res.trials[0].energy_error) <= 1e-6


def test_deterministic_across_jobs(sto3g):
    opts = PipelineOptions(n=3, J=2, seed=5)
    a = run_pipeline(sto3g, "msd", 10**5, 6, opts).trials
    b = run_pipeline(sto3g, "msd", 10**5, 6, PipelineOptions(n=3, J=2, seed=5, jobs=3)).trials
    c = run_pipeline(sto3g, "msd", 10**5, 6, opts).trials
    # repr compares NaN fields bitwise-equal, unlike ==
    assert repr(a) == repr(b) == repr(c)
    d = run_pipeline(sto3g, "msd", 10**5, 6, PipelineOptions(n=3, J=2, seed=6)).trials
    assert repr(a) != repr(d)


def test_mean_error_monotone_in_M(sto3g):
    means = []
    for M in (10**4, 10**5, 10**6, 10**7):
        res = run_pipeline(sto3g, "msd", M, 200, PipelineOptions(n=2, J=2, seed=1, jobs=4))
        means.append(res.summary["mean_abs_error"])
    assert all(b < a for a, b in zip(means, means[1:])), means


def test_dt_sweep_convex(sto3g):
    n, J, M = 2, 2, 10**6
    dt_opt = optimal_delta_t(n, J, sto3g.sector.spectral_range / 2, M)
    grid = dt_opt * np.logspace(-1.5, 1.5, 13)
    means = [run_pipeline(sto3g, "msd", M, 100, PipelineOptions(n=n, J=J, dt=float(d), threshold=1e-3, seed=2, jobs=4))
             .summary["mean_delta_H"] for d in grid]
    best = grid[int(np.argmin(means))]
    assert dt_opt / 3 <= best <= 3 * dt_opt


@pytest.mark.slow
@pytest.mark.parametrize("method", ["kqd", "msd"])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_bound_dominance(sto3g, method, n):
    for M in (10**5, 10**6, 10**7):
        res = run_pipeline(sto3g, method, M, 1000, PipelineOptions(n=n, J=2, seed=3, jobs=8))
        assert res.summary["fraction_under_bound"] >= 0.95, (M, res.summary)


def test_summarize_fields(sto3g):
    res = run_pipeline(sto3g, "msd", 10**5, 20, PipelineOptions(n=2, J=2, moments=True))
    s = summarize(res.trials, 1.0)
    for k in ("mean_abs_error", "std_error", "fwhm_error", "mean_abs_mitigated_error", "fraction_under_bound"):
        assert k in s
