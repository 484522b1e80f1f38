"""Drive-strength sweep of not(G) and of the mapped photon number.

Uses the experimental cloud (sigma = 5.2 um), Rydberg dephasing, the thermal
ladder and the mode-matching efficiency, and writes ``sweep.csv``. The
measured data themselves are not reproduced; the script prints the
qualitative features (growth of not(G), damping of the R/not(R) oscillation).

    python scripts/sweep_experiment.py --config configs/sweep.ini --out out/sweep
"""

import argparse
from pathlib import Path

import numpy as np

from superatom.config import parse_config
from superatom.scenarios import SWEEP_COLUMNS, sweep
from superatom.output import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/sweep.ini")
    ap.add_argument("--out", default="out/sweep")
    ap.add_argument("--n-values", type=int, help="override the number of Omega_1 values")
    args = ap.parse_args()

    cfg = parse_config(args.config)
    if args.n_values:
        cfg = cfg.replace("sweep", n_values=args.n_values)
    rows = sweep(cfg)
    path = write_csv(Path(args.out) / "sweep.csv", SWEEP_COLUMNS, rows, cfg.digest())
    print(f"wrote {path}")

    by_state = {}
    for r in rows:
        by_state.setdefault(r[0], []).append(r)
    for state, rs in by_state.items():
        ng = np.array([r[4] for r in rs])
        nph = np.array([r[6] for r in rs])
        k = int(np.argmax(nph))
        print(
            f"{state:>5}: not(G) {ng[0]:.3f} -> {ng[-1]:.3f} (monotone {bool(np.all(np.diff(ng) > 0))}), "
            f"photon peak {nph[k]:.3f} at Omega={rs[k][3]:.2f} MHz, swing {nph[k] - nph[k:].min():.3f}"
        )


if __name__ == "__main__":
    main()
