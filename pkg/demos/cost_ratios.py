"""Predicted shot and evolution-time ratios between the two estimators."""
from mirror_krylov import Problem, bound_report, integral_one_norm, load_fixture


def main():
    print(f"{'system':>10} {'n':>3} {'lambda':>8} {'dE':>7} {'R[M]':>10} {'R[Tmax]':>8} {'R[Ttot]':>10}")
    for name in ("h2-sto3g", "h2-631g", "lih-sto3g"):
        ints, _ = load_fixture(name)
        n = ints.n_orb
        lam = integral_one_norm(ints)
        de = Problem.from_fixture(name).sector.spectral_range
        r = bound_report(n, n, lam, de, eta=0.0016)
        print(f"{name:>10} {n:>3} {lam:>8.3f} {de:>7.3f} {r.R_M:>10.3e} {r.R_T_max:>8.3f} {r.R_T_total:>10.3e}")


if __name__ == "__main__":
    main()
