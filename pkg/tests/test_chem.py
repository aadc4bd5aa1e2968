import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mirror_krylov.chem import (
    FIXTURE_NAMES,
    ElectronIntegrals,
    FcidumpError,
    emit_fcidump,
    hartree_fock_index,
    integral_one_norm,
    jordan_wigner,
    load_fixture,
    number_operator,
    parse_fcidump,
    spin_squared_operator,
)
from mirror_krylov.pauli import PauliLcu

from conftest import random_integrals

HEADER = "&FCI NORB=2,NELEC=2,MS2=0,\n ORBSYM=1,1,\n ISYM=1,\n&END\n"


def test_core_only():
    ints = parse_fcidump(HEADER + " 0.7 0 0 0 0\n")
    assert ints.core_energy == 0.7
    assert not ints.h1.any() and not ints.g2.any()
    assert (ints.n_alpha, ints.n_beta) == (1, 1)


def test_single_h_record():
    ints = parse_fcidump(HEADER + " 0.5 1 1 0 0\n -0.25 2 1 0 0\n")
    assert ints.h1[0, 0] == 0.5
    assert ints.h1[0, 1] == ints.h1[1, 0] == -0.25


def test_two_electron_symmetry_fill():
    ints = parse_fcidump(HEADER + " 0.3 2 1 2 2\n 1.5D-01 1 1 2 2\n")
    g = ints.g2
    for idx in [(1, 0, 1, 1), (0, 1, 1, 1), (1, 1, 1, 0), (1, 1, 0, 1)]:
        assert g[idx] == 0.3
    assert g[0, 0, 1, 1] == g[1, 1, 0, 0] == 0.15
    ints.check_symmetry()


@pytest.mark.parametrize("body,line", [
    (" 0.5 1 1 0\n", 5),
    (" abc 1 1 0 0\n", 5),
    (" 0.1 1 1 0 0\n 0.5 3 1 0 0\n", 6),
    (" 0.1 1 0 1 1\n", 5),
])
def test_errors_carry_line_numbers(body, line):
    with pytest.raises(FcidumpError) as ei:
        parse_fcidump(HEADER + body)
    assert ei.value.line == line


def test_malformed_header():
    with pytest.raises(FcidumpError):
        parse_fcidump("NORB=2\n 0.1 0 0 0 0\n")
    with pytest.raises(FcidumpError):
        parse_fcidump("&FCI NELEC=2 &END\n")


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_roundtrip(name):
    ints, _ = load_fixture(name)
    back = parse_fcidump(emit_fcidump(ints))
    np.testing.assert_array_equal(back.h1, ints.h1)
    np.testing.assert_array_equal(back.g2, ints.g2)
    assert back.core_energy == ints.core_energy


@pytest.mark.parametrize("name", ["h2-sto3g", "h2-631g"])
def test_fixture_fci_energy(name):
    ints, meta = load_fixture(name)
    h = jordan_wigner(ints)
    N = number_operator(ints.n_orb).to_dense()
    H = h.to_dense()
    e, v = np.linalg.eigh(H)
    n = np.einsum("ij,ik,kj->j", v.conj(), N, v).real
    assert e[np.abs(n - ints.n_electrons) < 1e-6].min() == pytest.approx(meta["e_fci"], abs=1e-8)
    S2 = spin_squared_operator(ints.n_orb).to_dense()
    assert np.linalg.norm(H @ N - N @ H) <= 1e-8
    assert np.linalg.norm(H @ S2 - S2 @ H) <= 1e-8


def test_zero_integrals():
    ints = ElectronIntegrals(2, 1, 1, 0.4, np.zeros((2, 2)), np.zeros((2,) * 4))
    h = jordan_wigner(ints)
    assert h.n_terms == 0 and h.identity == 0.4
    assert integral_one_norm(ints) == 0.0


def test_single_orbital_number_operator():
    eps = 0.8
    ints = ElectronIntegrals(1, 1, 0, 0.0, np.array([[eps]]), np.zeros((1,) * 4))
    ref = PauliLcu.from_terms(2, [(-eps / 2, "ZI"), (-eps / 2, "IZ")], identity=eps)
    np.testing.assert_allclose(jordan_wigner(ints).to_dense(), ref.to_dense(), atol=1e-14)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_integral_one_norm_matches_jw(seed, n_orb):
    ints = random_integrals(np.random.default_rng(seed), n_orb, min(1, n_orb), min(1, n_orb))
    assert integral_one_norm(ints) == pytest.approx(jordan_wigner(ints).one_norm(), abs=1e-8)


def test_symmetry_operators():
    N = number_operator(2).to_dense()
    assert N[0, 0] == 0 and N[15, 15] == 4
    assert np.allclose(np.diag(np.diag(N)), N)
    # singlet (a+_0u a+_1d - a+_0d a+_1u)|0>/sqrt2; qubits (0,1) up, (2,3) down.
    # a+_0d a+_1u = -a+_1u a+_0d, and both products carry JW sign +1, so the
    # singlet is (|1001> + |0110>)/sqrt2 and the minus combination is the triplet
    S2 = spin_squared_operator(2).to_dense()
    psi = np.zeros(16)
    psi[0b1001] = psi[0b0110] = 1 / np.sqrt(2)
    assert psi @ S2 @ psi == pytest.approx(0.0, abs=1e-14)
    psi[0b0110] *= -1
    assert psi @ S2 @ psi == pytest.approx(2.0)
    triplet = np.zeros(16)
    triplet[0b0011] = 1  # both up
    assert triplet @ S2 @ triplet == pytest.approx(2.0)


def test_hartree_fock_index():
    assert hartree_fock_index(2, 1, 1) == 0b0101
    assert hartree_fock_index(3, 2, 1) == 0b001011


def test_fixture_env_override(tmp_path, monkeypatch):
    ints, _ = load_fixture("h2-sto3g")
    (tmp_path / "toy.fcidump").write_text(emit_fcidump(ints))
    monkeypatch.setenv("MIRROR_KRYLOV_FIXTURES", str(tmp_path))
    got, meta = load_fixture("toy")
    assert meta == {} and got.n_orb == 2
    with pytest.raises(FileNotFoundError):
        load_fixture("h2-sto3g")
