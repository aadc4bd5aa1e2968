import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_lcu(rng, n_qubits, n_terms):
    from mirror_krylov.pauli import PauliLcu

    labels = ["".join(rng.choice(list("IXYZ"), n_qubits)) for _ in range(n_terms)]
    return PauliLcu.from_terms(n_qubits, list(zip(rng.normal(size=n_terms), labels)), identity=float(rng.normal()))


def random_integrals(rng, n_orb, n_alpha=1, n_beta=1):
    from mirror_krylov.chem import ElectronIntegrals

    h = rng.normal(size=(n_orb, n_orb))
    h = (h + h.T) / 2
    # positive semidefinite pair-density form gives the full 8-fold symmetry
    L = rng.normal(size=(3, n_orb, n_orb)) * 0.3
    L = (L + L.transpose(0, 2, 1)) / 2
    g = np.einsum("kpq,krs->pqrs", L, L)
    return ElectronIntegrals(n_orb, n_alpha, n_beta, float(rng.normal()), h, g)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
