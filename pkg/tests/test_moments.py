import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from mirror_krylov.engine import PipelineOptions, Problem, _estimate, prepare
from mirror_krylov.finitediff import fd_error_bound
from mirror_krylov.krylov import KrylovConfig, assemble_msd, exact_matrices, solve_gevp
from mirror_krylov.moments import (
    MomentSet,
    hankel_determinants,
    lanczos_mitigate,
    moment_perturbation_bound,
    moments_from,
    power_matrices,
)
from mirror_krylov.engine import msd_combined_bound
from mirror_krylov.pauli import PauliLcu
from mirror_krylov.spectral import decompose, oracle_from_lcu

from conftest import random_hermitian, random_lcu


def dense_moments(H, psi, q_max):
    psi = psi / np.linalg.norm(psi)
    out, v = [1.0], psi
    for _ in range(q_max):
        v = H @ v
        out.append(float(np.vdot(psi, v).real))
    return np.array(out)


def test_two_level_recovery():
    # eigenvalues {0, 1} with weight 0.25 on 1: mu_q = 0.25 for q >= 1
    st_ = lanczos_mitigate(np.array([1.0, 0.25, 0.25, 0.25, 0.25]), scale=1.0)
    np.testing.assert_allclose(np.linalg.eigvalsh(st_.tridiagonal()), [0.0, 1.0], atol=1e-12)
    assert st_.reason in ("max-order", "degenerate")
    assert st_.energy == pytest.approx(0.0, abs=1e-12)


def test_eigenstate_terminates():
    E = -0.63
    st_ = lanczos_mitigate(np.array([E**q for q in range(7)]))
    assert st_.steps == 1 and st_.energy == pytest.approx(E, abs=1e-14)
    assert st_.reason == "degenerate"


def test_beta_negative():
    st_ = lanczos_mitigate(np.array([1.0, 0.3, 0.05, 0.1, 0.2]))
    assert st_.reason == "beta-negative"
    assert st_.steps == 1 and st_.energy == pytest.approx(0.3)


def test_needs_order_two():
    with pytest.raises(ValueError):
        lanczos_mitigate(np.array([1.0, 0.2]))


def test_moments_from_basics():
    P = {1: np.diag([0.4, 9.0]), 2: np.diag([0.16, 1.0])}
    ms = moments_from(P, np.array([1.0, 0.0]))
    np.testing.assert_allclose(ms.mu, [1.0, 0.4, 0.16])
    with pytest.raises(ValueError):
        moments_from(P, np.zeros(2))


@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_exact_lanczos_monotone_and_variational(seed, J):
    rng = np.random.default_rng(seed)
    H = random_hermitian(rng, 6)
    psi = rng.normal(size=6) + 1j * rng.normal(size=6)
    mu = dense_moments(H, psi, 2 * J)
    ev = np.linalg.eigvalsh(H)
    st_ = lanczos_mitigate(mu, spectral_bound=None)
    low = np.array(st_.lowest)
    assert np.all(np.diff(low) <= 1e-9)
    assert np.all(low >= ev[0] - 1e-7)
    T = st_.tridiagonal()
    assert np.array_equal(T, T.T)


def test_rank_of_moment_matrix(rng):
    ev = np.array([-1.0, 0.2, 0.9])
    w = np.array([0.5, 0.3, 0.2])
    mu = np.array([np.sum(w * ev**q) for q in range(9)])
    L, _, _, _ = hankel_determinants(mu, 3)
    assert abs(L[3]) <= 1e-8
    assert abs(L[2]) > 1e-4


def test_extended_vs_double():
    rng = np.random.default_rng(3)
    H = random_hermitian(rng, 5)
    mu = dense_moments(H, rng.normal(size=5), 6)
    Le, Me, _, _ = hankel_determinants(mu, 3, "extended", 1.0)
    Ld, Md, _, _ = hankel_determinants(mu, 3, "double", 1.0)
    np.testing.assert_allclose(Ld, Le, rtol=1e-6)
    np.testing.assert_allclose(Md[:3], Me[:3], rtol=1e-6)


def test_power_matrix_q1_is_msd_h(rng):
    o = oracle_from_lcu(random_lcu(rng, 2, 4))
    cfg = KrylovConfig(3, 0.6, np.array([1, 0, 0, 0], dtype=complex), J=2, dt=0.05)
    from mirror_krylov.sampling import msd_plan, overlap_plan
    from mirror_krylov.finitediff import fd_coefficients

    est = assemble_msd(o, cfg, msd_plan(3, 10**5, fd_coefficients(2)), overlap_plan(3, 10**5), seed=1)
    P = power_matrices(est.u_rows, 2, 0.05)
    assert np.array_equal(P[1], est.H)
    with pytest.raises(ValueError):
        power_matrices(est.u_rows, 2, 0.05, q_max=5)


def test_eigenstate_power_matrix():
    o = decompose(np.diag([-0.4, 0.7]))
    for dt in (0.1, 0.01):
        cfg = KrylovConfig(2, 0.5, np.array([1.0, 0.0]), J=2, dt=dt)
        est = assemble_msd(o, cfg, None, None, exact_mode=True)
        P = power_matrices(est.u_rows, 2, dt)
        for q in range(1, 5):
            assert P[q][0, 0].real == pytest.approx((-0.4) ** q, abs=fd_error_bound(2, q, dt, 0.4) + 1e-9)


def test_q2_elementwise_bound(rng):
    o = oracle_from_lcu(random_lcu(rng, 2, 5))
    hn = np.abs(o.eigenvalues).max()
    phi = rng.normal(size=4) + 1j * rng.normal(size=4)
    cfg = KrylovConfig(3, 0.5, phi / np.linalg.norm(phi), J=3, dt=0.08)
    est = assemble_msd(o, cfg, None, None, exact_mode=True)
    ex = exact_matrices(o, cfg, q_max=2)
    P = power_matrices(est.u_rows, 3, 0.08)
    assert np.abs(P[2] - ex.M[2]).max() <= fd_error_bound(3, 2, 0.08, hn)


def test_ritz_vector_oracle():
    h = PauliLcu.from_terms(1, [(0.3, "Z"), (0.5, "X")])
    o = oracle_from_lcu(h)
    D = h.to_dense()
    phi = np.array([1.0, 0.0], dtype=complex)
    cfg = KrylovConfig(2, 0.4, phi)
    ex = exact_matrices(o, cfg, q_max=2)
    sol = solve_gevp(ex.H, ex.S, 1e-12)
    v = sol.eigenvectors[:, 0]
    ms = moments_from(ex.M, v, ex.S)
    psi = sum(v[k] * scipy.linalg.expm(-1j * D * k * 0.4) @ phi for k in range(2))
    np.testing.assert_allclose(ms.mu, dense_moments(D, psi, 2), atol=1e-8)


def test_bound_q1_and_monotone():
    n, J, dt, hn, M = 3, 3, 0.1, 1.2, 1e6
    assert moment_perturbation_bound(n, J, 1, dt, hn, M) == pytest.approx(msd_combined_bound(n, J, dt, hn, M), rel=1e-12)
    b = [moment_perturbation_bound(n, J, q, dt, hn, M) for q in range(1, 2 * J + 1)]
    assert all(y > x for x, y in zip(b, b[1:]))


@pytest.mark.slow
def test_q2_monte_carlo_dominance():
    prob = Problem.from_fixture("h2-sto3g")
    p = prepare(prob, "msd", 10**6, PipelineOptions(n=2, J=2, seed=7))
    ex = exact_matrices(p.oracle, p.cfg, q_max=2)
    bound = moment_perturbation_bound(2, 2, 2, p.cfg.dt, p.h_norm, 10**6)
    hits = 0
    for t in range(1000):
        est, _ = _estimate(p, t)
        P = power_matrices(est.u_rows, 2, p.cfg.dt, 2)
        hits += np.linalg.norm(P[2] - ex.M[2], 2) <= bound
    assert hits >= 950


def test_exact_pipeline_moments_variance():
    prob = Problem.from_fixture("h2-sto3g")
    p = prepare(prob, "msd", 0, PipelineOptions(n=2, J=2, exact_mode=True))
    from mirror_krylov.engine import trial_moments

    ms, st_ = trial_moments(p, 0)
    assert ms.mu[0] == 1.0
    assert ms.variance >= -1e-8
    assert st_.energy + p.shift >= prob.e_exact - 1e-8


def test_guard_rejects_out_of_range():
    # mu_3 = 3 forces alpha_2 = 6, outside [-1, 1]
    mu = np.array([1.0, 0.0, 0.5, 3.0, 20.0])
    free = lanczos_mitigate(mu, spectral_bound=None)
    guarded = lanczos_mitigate(mu, spectral_bound=1.0)
    assert free.alpha[1] == pytest.approx(6.0)
    assert guarded.reason == "out-of-range" and guarded.steps == 1 and guarded.energy == 0.0
