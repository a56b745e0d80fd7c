"""Compare closed-form stable densities with numerical CF inversion.

Prints the max absolute difference per alpha over a grid of x values.

    python3 scripts/closed_form_sweep.py --x-max 10 --n 81
"""

import argparse
import time

import numpy as np

from cidkernels.levy import invert_cf_1d
from cidkernels.stable1d import closed_form_standard_density, standard_cf

ALPHAS = {"2": 2.0, "1": 1.0, "1/2": 0.5, "4/3": 4 / 3, "3/2": 1.5, "2/3": 2 / 3}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--x-max", type=float, default=10.0)
    ap.add_argument("--n", type=int, default=81)
    args = ap.parse_args()
    xs = np.linspace(-args.x_max, args.x_max, args.n)
    print(f"{'alpha':>6} {'max |closed - inverted|':>24} {'argmax x':>9} {'seconds':>8}")
    for label, alpha in ALPHAS.items():
        start = time.perf_counter()
        cf = standard_cf(alpha, 0.0)
        diffs = np.array([abs(closed_form_standard_density(alpha, 0.0, float(x)) - invert_cf_1d(cf, float(x), 1e-12))
                          for x in xs])
        i = int(np.argmax(diffs))
        print(f"{label:>6} {diffs[i]:24.3e} {xs[i]:9.3f} {time.perf_counter() - start:8.2f}")


if __name__ == "__main__":
    main()
