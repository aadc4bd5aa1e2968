"""Electron integrals: FCIDUMP I/O, Jordan-Wigner mapping and integral-level 1-norm.

Two-electron integrals use chemists' notation g[p, q, r, s] = (pq|rs) and the
Hamiltonian

    H = E_core + sum_{pq,s} h_pq a+_{ps} a_{qs}
        + 1/2 sum_{pqrs,st} g_pqrs a+_{ps} a+_{rt} a_{st} a_{qs}.

Spin orbitals are ordered spin-blocked: qubit p is (p, up), qubit p + n_orb is
(p, down).
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .pauli import PauliLcu, ladder_product

SYM_TOL = 1e-10
FIXTURE_ENV = "MIRROR_KRYLOV_FIXTURES"


class FcidumpError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass(frozen=True, eq=False)
class ElectronIntegrals:
    n_orb: int
    n_alpha: int
    n_beta: int
    core_energy: float
    h1: np.ndarray = field(repr=False)
    g2: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.n_orb
        if self.h1.shape != (n, n) or self.g2.shape != (n, n, n, n):
            raise ValueError("integral tensor shapes do not match n_orb")
        if self.n_alpha > n or self.n_beta > n or min(self.n_alpha, self.n_beta) < 0:
            raise ValueError("electron counts must lie in [0, n_orb]")

    @property
    def n_electrons(self) -> int:
        return self.n_alpha + self.n_beta

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_orb

    def check_symmetry(self, tol: float = SYM_TOL) -> None:
        h, g = self.h1, self.g2
        if np.abs(h - h.T).max(initial=0.0) > tol:
            raise ValueError("h1 is not symmetric")
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if np.abs(g - g.transpose(perm)).max(initial=0.0) > tol:
                raise ValueError(f"g2 lacks index symmetry {perm}")

    def replace(self, **kw) -> "ElectronIntegrals":
        d = dict(
            n_orb=self.n_orb,
            n_alpha=self.n_alpha,
            n_beta=self.n_beta,
            core_energy=self.core_energy,
            h1=self.h1,
            g2=self.g2,
        )
        d.update(kw)
        return ElectronIntegrals(**d)


# --- FCIDUMP -----------------------------------------------------------------

_HEADER_KEY = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z_][A-Za-z0-9_]*\s*=|\s*$)")


def _parse_header(text: str, line0: int) -> dict:
    body = re.sub(r"^\s*&FCI", "", text, flags=re.I)
    body = re.sub(r"(&END|/)\s*$", "", body.strip(), flags=re.I)
    out = {}
    for key, val in _HEADER_KEY.findall(body.replace("\n", " ")):
        vals = [v for v in re.split(r"[,\s]+", val.strip()) if v]
        try:
            out[key.upper()] = [int(v) for v in vals]
        except ValueError:
            raise FcidumpError(f"non-integer header value {key}={val.strip()}", line0) from None
    return out


def _to_float(tok: str) -> float:
    return float(tok.replace("D", "E").replace("d", "e"))


def parse_fcidump(data: bytes | str) -> ElectronIntegrals:
    """Parse FCIDUMP text into integrals, filling in all index-symmetry images."""
    if isinstance(data, bytes):
        data = data.decode("ascii", errors="strict")
    lines = data.splitlines()
    end = None
    for k, ln in enumerate(lines):
        if re.search(r"&END|^\s*/\s*$", ln, flags=re.I):
            end = k
            break
    if not lines or not lines[0].lstrip().upper().startswith("&FCI") or end is None:
        raise FcidumpError("missing &FCI ... &END namelist header", 1)
    hdr = _parse_header("\n".join(lines[: end + 1]), 1)
    try:
        norb = hdr["NORB"][0]
        nelec = hdr["NELEC"][0]
    except (KeyError, IndexError):
        raise FcidumpError("header must define NORB and NELEC", 1) from None
    ms2 = hdr.get("MS2", [0])[0]
    if norb <= 0 or nelec < 0 or (nelec + ms2) % 2:
        raise FcidumpError(f"inconsistent header NORB={norb} NELEC={nelec} MS2={ms2}", 1)
    if hdr.get("UHF", [0])[0]:
        raise FcidumpError("UHF integrals are not supported", 1)

    h = np.zeros((norb, norb))
    g = np.zeros((norb, norb, norb, norb))
    core = 0.0
    for lineno, ln in enumerate(lines[end + 1 :], start=end + 2):
        toks = ln.split()
        if not toks:
            continue
        if len(toks) != 5:
            raise FcidumpError(f"expected 5 fields, got {len(toks)}", lineno)
        try:
            v = _to_float(toks[0])
        except ValueError:
            raise FcidumpError(f"non-numeric value {toks[0]!r}", lineno) from None
        try:
            i, j, k, l = (int(t) for t in toks[1:])
        except ValueError:
            raise FcidumpError("non-integer orbital index", lineno) from None
        if min(i, j, k, l) < 0 or max(i, j, k, l) > norb:
            raise FcidumpError(f"orbital index out of range 0..{norb}", lineno)
        if i == j == k == l == 0:
            core = v
        elif k == 0 and l == 0:
            if j == 0:
                continue  # orbital energy record
            h[i - 1, j - 1] = h[j - 1, i - 1] = v
        elif min(i, j, k, l) == 0:
            raise FcidumpError("two-electron record with a zero index", lineno)
        else:
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in ((p, q, r, s), (r, s, p, q)):
                g[a, b, c, d] = g[b, a, c, d] = g[a, b, d, c] = g[b, a, d, c] = v
    return ElectronIntegrals(norb, (nelec + ms2) // 2, (nelec - ms2) // 2, core, h, g)


def emit_fcidump(ints: ElectronIntegrals, tol: float = 0.0) -> str:
    """Write integrals as FCIDUMP text (one record per symmetry-unique element)."""
    n = ints.n_orb
    out = [
        f" &FCI NORB={n},NELEC={ints.n_electrons},MS2={ints.n_alpha - ints.n_beta},",
        "  ORBSYM=" + ",".join(["1"] * n) + ",",
        "  ISYM=1,",
        " &END",
    ]
    g, h = ints.g2, ints.h1
    for p in range(n):
        for q in range(p + 1):
            pq = p * (p + 1) // 2 + q
            for r in range(n):
                for s in range(r + 1):
                    if r * (r + 1) // 2 + s > pq:
                        continue
                    v = g[p, q, r, s]
                    if abs(v) > tol:
                        out.append(f"{float(v)!r} {p + 1} {q + 1} {r + 1} {s + 1}")
    for p in range(n):
        for q in range(p + 1):
            if abs(h[p, q]) > tol:
                out.append(f"{float(h[p, q])!r} {p + 1} {q + 1} 0 0")
    out.append(f"{float(ints.core_energy)!r} 0 0 0 0")
    return "\n".join(out) + "\n"


# --- fixtures ----------------------------------------------------------------

FIXTURE_NAMES = ("h2-sto3g", "h2-631g", "lih-sto3g")


def fixture_dir() -> Path:
    env = os.environ.get(FIXTURE_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("mirror_krylov") / "fixtures"))


def load_fixture(name: str) -> tuple[ElectronIntegrals, dict]:
    """Return (integrals, sidecar metadata) for a named fixture."""
    d = fixture_dir()
    path = d / f"{name}.fcidump"
    if not path.exists():
        raise FileNotFoundError(f"no fixture {name!r} in {d}")
    ints = parse_fcidump(path.read_bytes())
    meta_path = d / f"{name}.json"
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return ints, meta


# --- Jordan-Wigner -----------------------------------------------------------

def _spin_orbital_terms(ints: ElectronIntegrals, tol: float = 1e-14):
    n = ints.n_orb
    h, g = ints.h1, ints.g2
    parts = []
    # one-body
    p, q = np.nonzero(np.abs(h) > tol)
    if len(p):
        for sig in (0, n):
            parts.append(ladder_product(h[p, q], [(p + sig, True), (q + sig, False)]))
    # two-body
    p, q, r, s = np.nonzero(np.abs(g) > tol)
    if len(p):
        coef = 0.5 * g[p, q, r, s]
        for sig in (0, n):
            for tau in (0, n):
                parts.append(
                    ladder_product(
                        coef, [(p + sig, True), (r + tau, True), (s + tau, False), (q + sig, False)]
                    )
                )
    return parts


def jordan_wigner(ints: ElectronIntegrals) -> PauliLcu:
    """Qubit Hamiltonian on 2*n_orb qubits; identity absorbs the core energy."""
    parts = _spin_orbital_terms(ints)
    nq = 2 * ints.n_orb
    if not parts:
        return PauliLcu.from_arrays(nq, [], [], [], identity=ints.core_energy)
    c = np.concatenate([pt[0] for pt in parts])
    x = np.concatenate([pt[1] for pt in parts])
    z = np.concatenate([pt[2] for pt in parts])
    return PauliLcu.from_arrays(nq, c, x, z, identity=ints.core_energy)


def one_body_norm_argument(h1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    """h_pq + sum_r g_pqrr - 1/2 sum_r g_prrq, the effective one-body coefficient."""
    return h1 + np.einsum("pqrr->pq", g2) - 0.5 * np.einsum("prrq->pq", g2)


def exchange_difference(g2: np.ndarray) -> np.ndarray:
    """g_pqrs - g_psrq restricted to p > r and s > q (zeros elsewhere)."""
    n = g2.shape[0]
    d = g2 - g2.transpose(0, 3, 2, 1)
    mask = (np.arange(n)[:, None, None, None] > np.arange(n)[None, None, :, None]) & (
        np.arange(n)[None, None, None, :] > np.arange(n)[None, :, None, None]
    )
    return d * mask


def integral_one_norm(ints_or_h1, g2: np.ndarray | None = None) -> float:
    """Pauli 1-norm of the JW Hamiltonian evaluated directly from the integrals."""
    if g2 is None:
        h1, g2 = ints_or_h1.h1, ints_or_h1.g2
    else:
        h1 = ints_or_h1
    t1 = np.abs(one_body_norm_argument(h1, g2)).sum()
    t2 = 0.5 * np.abs(exchange_difference(g2)).sum()
    t3 = 0.25 * np.abs(g2).sum()
    return float(t1 + t2 + t3)


# --- symmetry operators ------------------------------------------------------

def number_operator(n_orb: int) -> PauliLcu:
    nq = 2 * n_orb
    z = np.left_shift(1, np.arange(nq))
    return PauliLcu.from_arrays(nq, -0.5 * np.ones(nq), np.zeros(nq, np.int64), z, identity=nq / 2)


def spin_squared_operator(n_orb: int) -> PauliLcu:
    """S^2 = S- S+ + Sz^2 + Sz under the spin-blocked ordering."""
    nq = 2 * n_orb
    up = np.arange(n_orb)
    dn = up + n_orb
    p, q = (a.ravel() for a in np.meshgrid(up, up, indexing="ij"))
    parts = []
    # S- S+ = sum_pq a+_{p dn} a_{p up} a+_{q up} a_{q dn}
    parts.append(ladder_product(np.ones(len(p)), [(p + n_orb, True), (p, False), (q, True), (q + n_orb, False)]))
    # Sz^2 = 1/4 sum_{pq} sum_{st} s t n_{ps} n_{qt}
    for s_off, s_sign in ((0, 1), (n_orb, -1)):
        for t_off, t_sign in ((0, 1), (n_orb, -1)):
            coef = 0.25 * s_sign * t_sign * np.ones(len(p))
            parts.append(
                ladder_product(coef, [(p + s_off, True), (p + s_off, False), (q + t_off, True), (q + t_off, False)])
            )
    # Sz = 1/2 sum_p (n_{p up} - n_{p dn})
    parts.append(ladder_product(0.5 * np.ones(n_orb), [(up, True), (up, False)]))
    parts.append(ladder_product(-0.5 * np.ones(n_orb), [(dn, True), (dn, False)]))
    c = np.concatenate([pt[0] for pt in parts])
    x = np.concatenate([pt[1] for pt in parts])
    z = np.concatenate([pt[2] for pt in parts])
    return PauliLcu.from_arrays(nq, c, x, z)


def symmetry_operators(n_orb: int) -> tuple[PauliLcu, PauliLcu]:
    return number_operator(n_orb), spin_squared_operator(n_orb)


def hartree_fock_index(n_orb: int, n_alpha: int, n_beta: int) -> int:
    """Computational basis index of the aufbau determinant (lowest orbitals filled)."""
    return ((1 << n_alpha) - 1) | (((1 << n_beta) - 1) << n_orb)


def sector_basis(n_orb: int, n_alpha: int | None = None, n_beta: int | None = None, n_e: int | None = None):
    """Basis indices with fixed (n_alpha, n_beta), or with fixed total n_e if given."""
    nq = 2 * n_orb
    idx = np.arange(1 << nq, dtype=np.int64)
    lo = np.bitwise_count((idx & ((1 << n_orb) - 1)).astype(np.uint64)).astype(int)
    hi = np.bitwise_count((idx >> n_orb).astype(np.uint64)).astype(int)
    if n_e is not None:
        keep = (lo + hi) == n_e
    else:
        keep = (lo == n_alpha) & (hi == n_beta)
    return idx[keep]
