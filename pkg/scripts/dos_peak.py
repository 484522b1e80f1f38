"""Most probable pair-interaction energy against cloud ellipticity.

    python scripts/dos_peak.py [--out out/dos_peak.csv]
"""

import argparse

import numpy as np

from superatom.interactions import dos, z_peak
from superatom.output import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    betas = np.concatenate([np.linspace(-0.9, 0.9, 19), [0.99, 0.9999]])
    rows = []
    for beta in betas:
        zp = z_peak(float(beta))
        rows.append((float(beta), zp, float(dos(zp, float(beta)))))
        print(f"beta={beta:+.4f}  z_peak={zp:.6e}  p(z_peak)={rows[-1][2]:.6e}")
    print(f"spherical limit (3 sqrt2)^-6 = {(3 * np.sqrt(2)) ** -6:.6e}; flat limit 4^-6 = {4.0 ** -6:.6e}")
    if args.out:
        write_csv(args.out, ("beta", "z_peak", "p_peak"), rows)


if __name__ == "__main__":
    main()
