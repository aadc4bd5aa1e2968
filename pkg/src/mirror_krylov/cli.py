"""mirror-krylov command line: ingest, spectrum, reduce, simulate, sweep, moments, mitigate, costs.

Exit codes: 0 ok, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .chem import ElectronIntegrals, FcidumpError, emit_fcidump, integral_one_norm, jordan_wigner, load_fixture, parse_fcidump
from .engine import (
    CSV_FIELDS,
    PipelineOptions,
    Problem,
    bound_report,
    default_jobs,
    prepare,
    run_pipeline,
    trial_moments,
)
from .finitediff import J_MAX
from .pauli import DimensionCapError, PauliLcu
from .spectral import NumericalError, oracle_from_lcu, sector_mask, shift_error

CSV_HEADER = f"# mirror-krylov v{__version__} schema=1"
EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


# --- output helpers ----------------------------------------------------------

def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return v


def csv_text(fields: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k, "")) for k in fields})
    return buf.getvalue()


def emit(text: str, path: str | None) -> None:
    if path:
        atomic_write(path, text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(type(o).__name__)

    return json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n"


# --- argument groups -----------------------------------------------------------

def _sector(text: str) -> tuple[int, float]:
    try:
        a, b = text.split(",")
        return int(a), float(b)
    except ValueError:
        raise argparse.ArgumentTypeError("sector must look like N_e,S (e.g. 2,0)") from None


def _add_source(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--fixture", help="built-in fixture name (h2-sto3g, h2-631g, lih-sto3g)")
    g.add_argument("--fcidump", help="path to an FCIDUMP file")
    g.add_argument("--pauli", help="path to a Pauli-sum JSON file (no sector labels)")
    p.add_argument("--sector", type=_sector, default=None,
                   help="target symmetry sector N_e,S; N_e must match the integrals (default: N_e of the input, S=0)")


def _add_run(p, methods=("kqd", "msd", "both")):
    p.add_argument("--method", choices=methods, default=methods[0], help="Hamiltonian-matrix estimator")
    p.add_argument("--n", type=int, default=2, help="Krylov dimension n (number of time steps)")
    p.add_argument("--J", type=int, default=2, help=f"finite-difference half-width J, 1..{J_MAX} (MSD only)")
    p.add_argument("--M", type=int, default=10**6, help="shots for each of the S and H matrices")
    p.add_argument("--trials", type=int, default=1, help="independent Monte Carlo trials")
    p.add_argument("--seed", type=int, default=0, help="root seed of the per-element random streams")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: available CPUs)")
    p.add_argument("--exact", action="store_true", help="noiseless mode: exact matrix elements, no sampling")
    p.add_argument("--dt", type=float, default=None, help="time shift of the finite difference (default: optimal value)")
    p.add_argument("--threshold", type=float, default=None,
                   help="overlap eigenvalue cutoff for the GEVP (default: derived from the perturbation bounds)")
    p.add_argument("--shift", choices=("exact", "hf"), default="exact",
                   help="spectral range used for the energy shift and time step: exact sector or HF estimate")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mirror-krylov", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"mirror-krylov {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse a Hamiltonian and write its Pauli sum")
    _add_source(p)
    p.add_argument("--output", help="Pauli-sum JSON path (default: summary only)")

    p = sub.add_parser("spectrum", help="sector spectral range, 1-norm and HF shift error")
    _add_source(p)
    p.add_argument("--hf", action="store_true", help="also estimate the range from orbital-optimized HF energies")
    p.add_argument("--restarts", type=int, default=8, help="optimizer restarts for --hf")
    p.add_argument("--output", help="JSON report path (default: stdout)")

    p = sub.add_parser("reduce", help="lower the Pauli 1-norm by orbital rotation and/or BLISS")
    _add_source(p)
    p.add_argument("--orbital", action="store_true", help="optimize an orbital rotation")
    p.add_argument("--bliss", action="store_true", help="optimize a BLISS shift (after --orbital if both)")
    p.add_argument("--restarts", type=int, default=8, help="random restarts per optimizer")
    p.add_argument("--seed", type=int, default=0, help="seed for restart points")
    p.add_argument("--output", required=True, help="reduced FCIDUMP path; a .json report is written next to it")

    p = sub.add_parser("simulate", help="Monte Carlo KQD/MSD ground-energy estimation")
    _add_source(p)
    _add_run(p)
    p.add_argument("--moments", action="store_true", help="also run moment-based Lanczos mitigation (MSD)")
    p.add_argument("--output", help="per-trial CSV path (default: stdout)")
    p.add_argument("--bounds", help="bounds and summary JSON path")

    p = sub.add_parser("sweep", help="repeat simulate over a grid of M or dt values")
    _add_source(p)
    _add_run(p)
    p.add_argument("--grid", choices=("M", "dt"), required=True, help="swept parameter")
    p.add_argument("--values", type=float, nargs="+", required=True, help="grid values")
    p.add_argument("--output", help="per-trial CSV path (default: stdout)")
    p.add_argument("--summary", help="per-grid-point statistics CSV path")

    for name, text in (("moments", "Hamiltonian moments from MSD propagator data"),
                       ("mitigate", "moment-based Lanczos mitigation steps")):
        p = sub.add_parser(name, help=text)
        _add_source(p)
        _add_run(p, methods=("msd",))
        p.add_argument("--trial", type=int, default=0, help="trial index whose random streams are used")
        p.add_argument("--output", help="CSV path (default: stdout)")

    p = sub.add_parser("costs", help="theoretical shot counts, evolution times and their ratios")
    p.add_argument("--lambda", dest="lam", type=float, help="Pauli 1-norm of the Hamiltonian")
    p.add_argument("--de", type=float, help="sector spectral range")
    p.add_argument("--fixture", help="take lambda and the spectral range from a fixture")
    p.add_argument("--n", type=int, required=True, help="Krylov dimension")
    p.add_argument("--J", type=int, default=None, help="finite-difference half-width (default: n)")
    p.add_argument("--eta", type=float, default=0.0016, help="target Hamiltonian-matrix accuracy")
    p.add_argument("--M", type=float, default=None, help="shot budget for the bound columns (default: MSD prediction)")
    p.add_argument("--output", help="JSON path (default: stdout)")
    return ap


# --- commands ------------------------------------------------------------------

def _load_integrals(args) -> tuple[ElectronIntegrals, str]:
    if args.fixture:
        ints, _ = load_fixture(args.fixture)
        return ints, args.fixture
    return parse_fcidump(Path(args.fcidump).read_bytes()), Path(args.fcidump).stem


def _problem(args) -> Problem:
    if getattr(args, "pauli", None):
        if args.sector is not None:
            raise UsageError("--sector needs integrals (--fixture or --fcidump)")
        return Problem.from_pauli(PauliLcu.loads(Path(args.pauli).read_text()), name=Path(args.pauli).stem)
    ints, name = _load_integrals(args)
    S = 0.0
    if args.sector is not None:
        n_e, S = args.sector
        if n_e != ints.n_electrons:
            raise ValueError(f"sector N_e={n_e} does not match the {ints.n_electrons} electrons of the input")
    pr = Problem.from_integrals(ints, name=name, S=S)
    if getattr(args, "shift", "exact") == "hf":
        from .norm_reduction import hf_spectral_range

        lo, hi, _ = hf_spectral_range(ints)
        pr = pr.with_range_estimate(lo, hi)
    return pr


def _options(args, **kw) -> PipelineOptions:
    if not 1 <= args.J <= J_MAX:
        raise UsageError(f"--J must lie in 1..{J_MAX}")
    if args.n < 1:
        raise UsageError("--n must be positive")
    if args.M < 0 or args.trials < 1:
        raise UsageError("--M must be nonnegative and --trials positive")
    if args.dt is not None and args.method == "kqd":
        raise UsageError("--dt only applies to --method msd")
    if not args.exact and args.M == 0:
        raise UsageError("--M 0 requires --exact")
    jobs = default_jobs() if args.jobs is None else args.jobs
    return PipelineOptions(n=args.n, J=args.J, exact_mode=args.exact, dt=args.dt, threshold=args.threshold,
                           seed=args.seed, jobs=jobs, **kw)


def cmd_ingest(args) -> None:
    if args.pauli:
        h = PauliLcu.loads(Path(args.pauli).read_text())
    else:
        ints, _ = _load_integrals(args)
        h = jordan_wigner(ints)
    info = {"n_qubits": h.n_qubits, "n_terms": len(h.coeffs), "identity": h.identity, "one_norm": h.one_norm()}
    if args.output:
        atomic_write(args.output, h.dumps())
    sys.stdout.write(_json(info))


def cmd_spectrum(args) -> None:
    pr = _problem(args)
    sec = pr.sector
    out = {"n_e": sec.n_e, "S": sec.S, "e_min": sec.e_min, "e_max": sec.e_max, "delta_e": sec.spectral_range,
           "count": sec.count, "one_norm": pr.hamiltonian.one_norm()}
    if args.hf:
        if args.pauli:
            raise UsageError("--hf needs integrals")
        from .norm_reduction import OptimizerConfig, hf_spectral_range

        ints, _ = _load_integrals(args)
        lo, hi, de = hf_spectral_range(ints, cfg=OptimizerConfig(restarts=args.restarts))
        out.update(hf_e_min=lo, hf_e_max=hi, hf_delta_e=de, shift_error=shift_error(lo, hi, sec.e_min, sec.e_max))
    emit(_json(out), args.output)


def cmd_reduce(args) -> None:
    from .norm_reduction import OptimizerConfig, minimize_bliss, minimize_one_norm_orbital

    if args.pauli:
        raise UsageError("reduce needs integrals (--fixture or --fcidump)")
    if not (args.orbital or args.bliss):
        raise UsageError("choose --orbital and/or --bliss")
    ints, _ = _load_integrals(args)
    cfg = OptimizerConfig(restarts=args.restarts, seed=args.seed)
    report = {"one_norm_before": integral_one_norm(ints)}
    cur = ints
    if args.orbital:
        rot, cur, res = minimize_one_norm_orbital(cur, cfg)
        report.update(orbital_one_norm=res.after, orbital_K=rot.K)
    if args.bliss:
        par, cur, res = minimize_bliss(cur, ints.n_electrons, cfg)
        report.update(bliss_one_norm=res.after, bliss_mu1=par.mu1, bliss_mu2=par.mu2, bliss_xi=par.xi)
    report["one_norm_after"] = integral_one_norm(cur)
    if ints.n_qubits <= 12:
        o0 = oracle_from_lcu(jordan_wigner(ints), ints.n_orb)
        o1 = oracle_from_lcu(jordan_wigner(cur), ints.n_orb)
        e0 = np.sort(o0.eigenvalues[sector_mask(o0, ints.n_electrons, None)] + o0.offset)
        e1 = np.sort(o1.eigenvalues[sector_mask(o1, ints.n_electrons, None)] + o1.offset)
        diff = float(np.abs(e0 - e1).max())
        report.update(spectrum_max_deviation=diff, spectrum_check="pass" if diff <= 1e-8 else "fail")
    else:
        report["spectrum_check"] = "skipped"
    atomic_write(args.output, emit_fcidump(cur))
    atomic_write(str(Path(args.output).with_suffix(".json")), _json(report))
    sys.stdout.write(_json({k: v for k, v in report.items() if not isinstance(v, np.ndarray)}))
    if report["spectrum_check"] == "fail":
        raise NumericalError("reduced Hamiltonian changed the sector spectrum")


def _methods(m: str):
    return ("kqd", "msd") if m == "both" else (m,)


def cmd_simulate(args) -> None:
    pr = _problem(args)
    if args.moments and args.method == "kqd":
        raise UsageError("--moments needs MSD data")
    rows, bounds = [], {}
    for m in _methods(args.method):
        opts = _options(args, moments=args.moments and m == "msd")
        res = run_pipeline(pr, m, args.M, args.trials, opts)
        rows += [asdict(t) for t in res.trials]
        bounds[m] = {"summary": res.summary, "bounds": res.bounds.to_json_dict() if res.bounds else None}
    emit(csv_text(CSV_FIELDS, rows), args.output)
    if args.bounds:
        bounds["exact_energy"] = pr.e_exact
        atomic_write(args.bounds, _json(bounds))


def cmd_sweep(args) -> None:
    pr = _problem(args)
    if args.grid == "dt" and args.method != "msd":
        raise UsageError("a dt grid only applies to --method msd")
    rows, summary = [], []
    for v in args.values:
        if args.grid == "M":
            args.M = int(round(v))
        else:
            args.dt = float(v)
        for m in _methods(args.method):
            res = run_pipeline(pr, m, args.M, args.trials, _options(args))
            rows += [{"grid": args.grid, "value": v, **asdict(t)} for t in res.trials]
            for k, s in sorted(res.summary.items()):
                summary.append({"grid": args.grid, "value": v, "method": m, "statistic": k, "result": s})
    emit(csv_text(["grid", "value"] + CSV_FIELDS, rows), args.output)
    if args.summary:
        atomic_write(args.summary, csv_text(["grid", "value", "method", "statistic", "result"], summary))


def _moment_run(args):
    pr = _problem(args)
    opts = _options(args, moments=True)
    p = prepare(pr, "msd", args.M, opts)
    ms, st = trial_moments(p, args.trial)
    return p, ms, st


def cmd_moments(args) -> None:
    p, ms, _ = _moment_run(args)
    # moments of H - shift; the shift is reported so absolute moments can be rebuilt
    rows = [{"q": q, "mu_q": ms.mu[q], "bound": ms.bounds[q] if ms.bounds is not None else "",
             "shift": p.shift} for q in range(len(ms.mu))]
    emit(csv_text(["q", "mu_q", "bound", "shift"], rows), args.output)


def cmd_mitigate(args) -> None:
    p, _, st = _moment_run(args)
    rows = []
    for k, t in enumerate(st.trace):
        rows.append({
            "j": t["j"], "alpha_j": t["alpha"], "beta_sq_j": t.get("beta_sq", ""),
            "lowest_eig": t["lowest"] + p.shift, "accepted": int(k < st.steps),
            "termination": st.reason if k == len(st.trace) - 1 else "",
        })
    emit(csv_text(["j", "alpha_j", "beta_sq_j", "lowest_eig", "accepted", "termination"], rows), args.output)


def cmd_costs(args) -> None:
    if args.fixture:
        if args.lam is not None or args.de is not None:
            raise UsageError("give either --fixture or --lambda/--de")
        ints, meta = load_fixture(args.fixture)
        lam = integral_one_norm(ints)
        de = meta["sector"]["e_max"] - meta["sector"]["e_min"]
    else:
        if args.lam is None or args.de is None:
            raise UsageError("--lambda and --de are required without --fixture")
        lam, de = args.lam, args.de
    J = args.n if args.J is None else args.J
    if args.n < 2 or not 1 <= J <= J_MAX:
        raise UsageError(f"need n >= 2 and 1 <= J <= {J_MAX}")
    rep = bound_report(args.n, J, lam, de, M=args.M, eta=args.eta)
    emit(_json(rep.to_json_dict()), args.output)


COMMANDS = {
    "ingest": cmd_ingest, "spectrum": cmd_spectrum, "reduce": cmd_reduce, "simulate": cmd_simulate,
    "sweep": cmd_sweep, "moments": cmd_moments, "mitigate": cmd_mitigate, "costs": cmd_costs,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except UsageError as e:
        sys.stderr.write(f"mirror-krylov: usage error: {e}\n")
        return EXIT_USAGE
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as e:
        sys.stderr.write(f"mirror-krylov: numerical failure: {e}\n")
        return EXIT_NUMERIC
    except (FcidumpError, DimensionCapError, OSError, ValueError, KeyError, json.JSONDecodeError) as e:
        sys.stderr.write(f"mirror-krylov: data error: {e}\n")
        return EXIT_DATA
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
