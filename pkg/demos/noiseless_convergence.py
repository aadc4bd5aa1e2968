"""Noiseless Krylov energies of the bundled molecules as the subspace grows."""
from mirror_krylov import PipelineOptions, Problem, run_pipeline


def main():
    for name, n_max in [("h2-sto3g", 3), ("h2-631g", 6), ("lih-sto3g", 6)]:
        prob = Problem.from_fixture(name)
        print(f"{name}: exact ground energy {prob.e_exact:.10f}, spectral range {prob.sector.spectral_range:.4f}")
        for n in range(1, n_max + 1):
            r = run_pipeline(prob, "kqd", 0, 1, PipelineOptions(n=n, exact_mode=True)).trials[0]
            print(f"  n={n}  E={r.energy:.10f}  error={r.energy_error:.2e}  kept={r.n_eps}")


if __name__ == "__main__":
    main()
