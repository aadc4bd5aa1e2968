import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mirror_krylov.chem import integral_one_norm, jordan_wigner, load_fixture
from mirror_krylov.engine import Problem
from mirror_krylov.norm_reduction import (
    BlissParams,
    OptimizerConfig,
    OrbitalRotation,
    antisymmetric,
    bliss_cost_and_gradient,
    bliss_shift,
    hf_energy,
    hf_spectral_range,
    minimize_bliss,
    minimize_one_norm_orbital,
    one_norm_and_adjoint,
    rotate_integrals,
)
from mirror_krylov.spectral import oracle_from_lcu, sector_spectrum

from conftest import random_integrals

FAST = OptimizerConfig(restarts=2, max_iter=60, polish=False)


def full_spectrum(ints):
    return np.linalg.eigvalsh(jordan_wigner(ints).to_dense())


def sector_eigs(ints, n_e):
    D = jordan_wigner(ints).to_dense()
    idx = np.array([i for i in range(D.shape[0]) if bin(i).count("1") == n_e])
    return np.linalg.eigvalsh(D[np.ix_(idx, idx)])


def test_rotation_invariants(rng):
    rot = OrbitalRotation.from_params(rng.normal(size=3), 3)
    assert np.array_equal(rot.K.T, -rot.K)
    assert np.abs(rot.U.T @ rot.U - np.eye(3)).max() <= 1e-10
    with pytest.raises(ValueError):
        OrbitalRotation(np.ones((2, 2)))
    back = OrbitalRotation.from_unitary(rot.U)
    np.testing.assert_allclose(back.U, rot.U, atol=1e-10)


def test_rotate_identity(rng):
    ints = random_integrals(rng, 3)
    r = rotate_integrals(ints, np.zeros((3, 3)))
    np.testing.assert_allclose(r.h1, ints.h1, atol=1e-15)
    np.testing.assert_allclose(r.g2, ints.g2, atol=1e-15)


@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_rotation_preserves_spectrum(seed, n):
    rng = np.random.default_rng(seed)
    ints = random_integrals(rng, n)
    K = antisymmetric(rng.normal(size=n * (n - 1) // 2), n)
    r = rotate_integrals(ints, K)
    r.check_symmetry(1e-10)
    np.testing.assert_allclose(full_spectrum(r), full_spectrum(ints), atol=1e-8)


def test_two_orbital_basis_change(rng):
    ints = random_integrals(rng, 2)
    theta = 0.37
    U = OrbitalRotation.from_params([theta], 2).U
    # explicit loops over the new-orbital expansion phi'_p = sum_a U_ap phi_a
    h = np.zeros((2, 2))
    g = np.zeros((2, 2, 2, 2))
    for p, q in itertools.product(range(2), repeat=2):
        h[p, q] = sum(U[a, p] * U[b, q] * ints.h1[a, b] for a in range(2) for b in range(2))
    for p, q, r, s in itertools.product(range(2), repeat=4):
        g[p, q, r, s] = sum(U[a, p] * U[b, q] * U[c, r] * U[d, s] * ints.g2[a, b, c, d]
                            for a, b, c, d in itertools.product(range(2), repeat=4))
    out = rotate_integrals(ints, OrbitalRotation.from_params([theta], 2))
    np.testing.assert_allclose(out.h1, h, atol=1e-13)
    np.testing.assert_allclose(out.g2, g, atol=1e-13)


def test_orbital_minimizer_descends(rng):
    for _ in range(3):
        ints = random_integrals(rng, 3)
        rot, new, res = minimize_one_norm_orbital(ints, FAST)
        assert res.after <= res.before + 1e-12
        assert res.after == pytest.approx(integral_one_norm(new))
        np.testing.assert_allclose(full_spectrum(new), full_spectrum(ints), atol=1e-8)


def test_orbital_fixed_point():
    # diagonal h with no two-electron part: every rotation mixes the diagonal and cannot lower sum |h|
    from mirror_krylov.chem import ElectronIntegrals

    ints = ElectronIntegrals(2, 1, 1, 0.0, np.diag([0.5, 1.5]), np.zeros((2, 2, 2, 2)))
    rot, new, res = minimize_one_norm_orbital(ints, FAST)
    assert res.after == pytest.approx(res.before, abs=1e-12)


def test_bliss_zero_is_identity(rng):
    ints = random_integrals(rng, 3)
    out, const = bliss_shift(ints, BlissParams.zeros(3, 2))
    assert const == 0.0
    np.testing.assert_array_equal(out.h1, ints.h1)
    np.testing.assert_array_equal(out.g2, ints.g2)
    _, new, res = minimize_bliss(ints, 2, OptimizerConfig(max_iter=0, polish=False))
    np.testing.assert_array_equal(new.g2, ints.g2)
    assert res.after == res.before


def test_bliss_mu2_elementwise(rng):
    ints = random_integrals(rng, 2)
    out, const = bliss_shift(ints, BlissParams(0.0, 0.3, np.zeros((2, 2)), 2))
    for p, q, r, s in itertools.product(range(2), repeat=4):
        expect = ints.g2[p, q, r, s] - 2 * 0.3 * (p == q) * (r == s)
        assert out.g2[p, q, r, s] == pytest.approx(expect, abs=1e-15)
    assert const == pytest.approx(0.3 * 4)
    np.testing.assert_allclose(out.h1, ints.h1 - 0.3 * np.eye(2))


def test_bliss_xi_symmetric():
    with pytest.raises(ValueError):
        BlissParams(0.0, 0.0, np.array([[0.0, 1.0], [0.0, 0.0]]), 2)


@given(st.integers(0, 2**32 - 1), st.integers(2, 3), st.integers(1, 4))
def test_bliss_sector_invariance(seed, n, n_e):
    rng = np.random.default_rng(seed)
    ints = random_integrals(rng, n)
    xi = rng.normal(size=(n, n))
    params = BlissParams(float(rng.normal()), float(rng.normal()), xi + xi.T, n_e)
    out, _ = bliss_shift(ints, params)
    np.testing.assert_allclose(sector_eigs(out, n_e), sector_eigs(ints, n_e), atol=1e-8)


def test_bliss_gradient_positive_diagonal():
    from mirror_krylov.chem import ElectronIntegrals

    n = 3
    ints = ElectronIntegrals(n, 1, 1, 0.0, np.diag([0.4, 1.0, 2.0]), np.zeros((n,) * 4))
    c, d1, d2, gx = bliss_cost_and_gradient(ints, BlissParams.zeros(n, 2))
    assert c == pytest.approx(integral_one_norm(ints))
    assert d1 == -n


@pytest.mark.parametrize("seed", range(5))
def test_bliss_gradient_finite_difference(seed):
    rng = np.random.default_rng(seed)
    n, n_e = 3, 2
    ints = random_integrals(rng, n)
    x0 = rng.normal(scale=0.1, size=2 + n * (n + 1) // 2)
    c, d1, d2, gx = bliss_cost_and_gradient(ints, BlissParams.from_vector(x0, n, n_e))
    grad = np.r_[d1, d2, gx[np.triu_indices(n)]]
    f = lambda x: bliss_cost_and_gradient(ints, BlissParams.from_vector(x, n, n_e))[0]  # noqa: E731
    h = 1e-6
    fd = np.array([(f(x0 + h * e) - f(x0 - h * e)) / (2 * h) for e in np.eye(len(x0))])
    np.testing.assert_allclose(grad, fd, atol=1e-4)


def test_adjoint_cost_matches_closed_form(rng):
    ints = random_integrals(rng, 3)
    c, _, _ = one_norm_and_adjoint(ints.h1, ints.g2)
    assert c == pytest.approx(integral_one_norm(ints), rel=1e-14)


def test_norm_dominates_half_range(rng):
    ints = random_integrals(rng, 2)
    _, o_ints, _ = minimize_one_norm_orbital(ints, FAST)
    _, b_ints, _ = minimize_bliss(o_ints, 2, FAST)
    de = np.ptp(sector_eigs(ints, 2))
    for x in (ints, o_ints, b_ints):
        assert jordan_wigner(x).one_norm() >= de / 2 - 1e-12


def test_hf_energy_matches_fixture():
    ints, meta = load_fixture("h2-sto3g")
    assert hf_energy(ints) == pytest.approx(meta["e_hf"], abs=1e-8)
    ints, meta = load_fixture("h2-631g")
    assert hf_energy(ints) == pytest.approx(meta["e_hf"], abs=1e-8)


@pytest.mark.parametrize("name", ["h2-sto3g", "h2-631g"])
def test_hf_range_inside_exact(name):
    ints, _ = load_fixture(name)
    prob = Problem.from_integrals(ints, name)
    lo, hi, de = hf_spectral_range(ints, cfg=OptimizerConfig(restarts=4))
    assert lo >= prob.sector.e_min - 1e-8
    assert hi <= prob.sector.e_max + 1e-8
    assert de == pytest.approx(hi - lo)


def test_hf_range_random(rng):
    ints = random_integrals(rng, 3)
    lo, hi, _ = hf_spectral_range(ints, cfg=OptimizerConfig(restarts=3))
    o = oracle_from_lcu(jordan_wigner(ints), 3)
    sec = sector_spectrum(o, 2, 0)
    assert sec.e_min - 1e-8 <= lo <= hi <= sec.e_max + 1e-8
