"""Regenerate the checked-in FCIDUMP fixtures.

Requires pyscf, which is a development tool only; the installed package never
imports it. Run from the repository root:

    python3 tools/make_fixtures.py

Each fixture gets an FCIDUMP (canonical RHF orbitals, no frozen core) and a
sidecar JSON with geometry, basis, generator version and reference energies.
Reference energies are total energies (nuclear repulsion included).
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pyscf
from pyscf import ao2mo, fci, gto, scf
from pyscf.tools import fcidump

OUT = Path(__file__).resolve().parents[1] / "src" / "mirror_krylov" / "fixtures"

FIXTURES = {
    "h2-sto3g": dict(atom="H 0 0 0; H 0 0 0.74", basis="sto-3g"),
    "h2-631g": dict(atom="H 0 0 0; H 0 0 0.74", basis="6-31g"),
    "lih-sto3g": dict(atom="Li 0 0 0; H 0 0 1.595", basis="sto-3g"),
}


def sector_extremes(h1, g2, norb, nelec, ecore):
    """Lowest and highest singlet FCI energies in the given electron sector."""
    na, nb = nelec
    from math import comb

    nroots = comb(norb, na) * comb(norb, nb)
    solver = fci.direct_spin1.FCI()
    solver.conv_tol = 1e-12
    e, vecs = solver.kernel(h1, g2, norb, nelec, nroots=nroots, ecore=ecore)
    e = np.atleast_1d(e)
    s2 = np.array([fci.spin_op.spin_square(v, norb, nelec)[0] for v in vecs])
    singlet = np.abs(s2) < 1e-6
    return float(e[singlet].min()), float(e[singlet].max())


def build(name, atom, basis):
    mol = gto.M(atom=atom, basis=basis, unit="Angstrom", verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    c = mf.mo_coeff
    norb = c.shape[1]
    h1 = c.T @ mf.get_hcore() @ c
    g2 = ao2mo.restore(1, ao2mo.kernel(mol, c), norb)
    ecore = mol.energy_nuc()
    nelec = mol.nelec

    fcidump.from_integrals(
        str(OUT / f"{name}.fcidump"), h1, g2, norb, sum(nelec), nuc=ecore, ms=0, tol=1e-14
    )
    e_min, e_max = sector_extremes(h1, g2, norb, nelec, ecore)
    meta = {
        "name": name,
        "geometry": atom,
        "geometry_unit": "angstrom",
        "basis": basis,
        "generator": f"pyscf {pyscf.__version__} RHF canonical orbitals",
        "n_orb": int(norb),
        "n_alpha": int(nelec[0]),
        "n_beta": int(nelec[1]),
        "core_energy": float(ecore),
        "e_hf": float(mf.e_tot),
        "e_fci": e_min,
        "sector": {"n_e": int(sum(nelec)), "S": 0, "e_min": e_min, "e_max": e_max},
    }
    (OUT / f"{name}.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"{name}: norb={norb} e_hf={mf.e_tot:.10f} sector=({e_min:.10f}, {e_max:.10f})")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    for key, kw in FIXTURES.items():
        build(key, **kw)
