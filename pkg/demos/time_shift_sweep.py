"""Scan the finite-difference time shift around its predicted optimum.

Too small a shift amplifies shot noise (1/dt); too large a shift lets the
truncation error (dt^2J) take over. The measured minimum should sit near
the value returned by optimal_delta_t.
"""
import numpy as np

from mirror_krylov import PipelineOptions, Problem, optimal_delta_t, run_pipeline


def main():
    prob = Problem.from_fixture("h2-sto3g")
    n, J, M = 2, 2, 10**6
    dt_opt = optimal_delta_t(n, J, prob.sector.spectral_range / 2, M)
    print(f"predicted optimum dt = {dt_opt:.4f}")
    for dt in dt_opt * np.logspace(-1.5, 1.5, 13):
        opts = PipelineOptions(n=n, J=J, dt=float(dt), threshold=1e-3, seed=3)
        s = run_pipeline(prob, "msd", M, 100, opts).summary
        print(f"  dt={dt:9.4f}  mean |dH|={s['mean_delta_H']:.3e}")


if __name__ == "__main__":
    main()
