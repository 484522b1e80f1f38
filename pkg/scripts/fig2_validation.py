"""Effective model against brute-force ensembles for the four Rydberg states.

Writes one sub-directory of CSV files per state and prints the agreement
figures: the largest deviation of P_R from the ensemble mean and the fraction
of grid points inside the mean +- 2 std band.

    python scripts/fig2_validation.py --out out/fig2 [--realizations 8] [--states 109S 80S]
"""

import argparse
import time
from pathlib import Path

from superatom import params
from superatom.config import ScenarioConfig
from superatom.scenarios import run_validate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/fig2")
    ap.add_argument("--states", nargs="+", default=list(params.N_MAX_VALIDATION))
    ap.add_argument("--realizations", type=int, default=8)
    ap.add_argument("--N", type=int, default=400)
    ap.add_argument("--z-e", default="z_omega", help="z0, z_omega or a number")
    args = ap.parse_args()

    for state in args.states:
        cfg = ScenarioConfig(kind="validate")
        cfg = cfg.replace("model", state=state, n_max=params.N_MAX_VALIDATION[state], z_e=args.z_e)
        cfg = cfg.replace("cloud", N=args.N, sigma_um=5.0).replace("pulses", omega_MHz=3.0)
        cfg = cfg.replace("oracle", realizations=args.realizations)
        t0 = time.perf_counter()
        info = run_validate(cfg, Path(args.out) / state)
        omega_b = params.blockade_frequency(state, 5.0)
        print(
            f"{state:>5} n_max={cfg.model.n_max} Omega/Omega_B={3.0 * params.TWO_PI / omega_b:7.3f} "
            f"max|dP_R|={info['max_abs_dP_R']:.4f} within2std={100 * info['fraction_within_2std']:5.1f}% "
            f"({time.perf_counter() - t0:.0f} s)"
        )


if __name__ == "__main__":
    main()
