"""Hamiltonian-matrix error of the two estimators versus the shot budget.

The per-term LCU estimator pays for the 1-norm of the Pauli sum, the finite
difference estimator for the spectral range. H2/STO-3G has lambda close to
the spectral range, so the two are comparable there; on 6-31G the gap opens.
"""
import numpy as np

from mirror_krylov import PipelineOptions, Problem, run_pipeline

TRIALS = 100


def main():
    for name in ("h2-sto3g", "h2-631g"):
        prob = Problem.from_fixture(name)
        lam = prob.hamiltonian.one_norm()
        print(f"{name}: lambda={lam:.3f}  dE={prob.sector.spectral_range:.3f}")
        print(f"  {'M':>8} {'kqd |dH|':>10} {'bound':>10} {'msd |dH|':>10} {'bound':>10}")
        for M in np.logspace(5, 7, 3).astype(int):
            opts = PipelineOptions(n=2, J=2, seed=1)
            k = run_pipeline(prob, "kqd", int(M), TRIALS, opts).summary
            m = run_pipeline(prob, "msd", int(M), TRIALS, opts).summary
            print(f"  {M:>8.0e} {k['mean_delta_H']:>10.2e} {k['delta_H_bound']:>10.2e} "
                  f"{m['mean_delta_H']:>10.2e} {m['delta_H_bound']:>10.2e}")


if __name__ == "__main__":
    main()
