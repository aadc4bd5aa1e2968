"""Lower the Pauli 1-norm of H2 with an orbital rotation followed by BLISS."""
import numpy as np

from mirror_krylov import integral_one_norm, jordan_wigner, load_fixture
from mirror_krylov.norm_reduction import OptimizerConfig, hf_spectral_range, minimize_bliss, minimize_one_norm_orbital
from mirror_krylov.spectral import oracle_from_lcu, sector_mask


def sector_levels(ints, n_e=2):
    o = oracle_from_lcu(jordan_wigner(ints), ints.n_orb)
    return np.sort(o.eigenvalues[sector_mask(o, n_e, None)] + o.offset)


def main():
    for name in ("h2-sto3g", "h2-631g"):
        ints, _ = load_fixture(name)
        cfg = OptimizerConfig(restarts=4)
        _, oo, _ = minimize_one_norm_orbital(ints, cfg)
        _, red, _ = minimize_bliss(oo, ints.n_electrons, cfg)
        drift = np.abs(sector_levels(red) - sector_levels(ints)).max()
        lo, hi, de = hf_spectral_range(ints, cfg=cfg)
        print(f"{name}: lambda {integral_one_norm(ints):.4f} -> {integral_one_norm(oo):.4f} (orbitals)"
              f" -> {integral_one_norm(red):.4f} (BLISS); sector drift {drift:.1e}")
        print(f"  HF range estimate [{lo:.5f}, {hi:.5f}], width {de:.4f}")


if __name__ == "__main__":
    main()
