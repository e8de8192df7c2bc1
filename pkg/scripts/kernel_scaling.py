"""Scaling exponents of the mean-zero biharmonic heat kernel and the measured
smoothing constants.

    python scripts/kernel_scaling.py --corpus 1000 --out results/kernels
"""

import argparse
import math
from pathlib import Path

import numpy as np

from chsplit.harness import random_field
from chsplit.io import write_table
from chsplit.kernels import kernel_norm_sweep, smoothing_sweep
from chsplit.spectral import Grid2D


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", type=int, default=1000)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--out", type=Path, default=Path("results/kernels"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    betas = [2.0**-j for j in range(4, 15)]
    rows = []
    for p in (math.inf, 4.0, 2.0, 4.0 / 3.0, 1.0):
        res = kernel_norm_sweep("K_tilde", p, betas)
        print(f"p = {p:6.4g}: fitted {res[0].fitted_exponent:+.4f}, predicted {res[0].predicted_exponent:+.4f}")
        rows += [[r.p, r.beta, r.norm_value, r.fitted_exponent, r.predicted_exponent] for r in res]
    write_table(args.out / "exponents.csv", ["p", "beta", "norm", "fitted", "predicted"], rows)

    taus = [10.0**-j for j in range(1, 7)]
    rng = np.random.default_rng(5)
    g = Grid2D(args.n)
    corpus = [random_field(g, 10_000 + i, int(rng.integers(1, g.n // 3)), 1.0) for i in range(args.corpus)]
    for which in ("Linf_from_L4", "Laplacian_Linf_from_L43"):
        R = smoothing_sweep(corpus, 1.0, taus, which)
        print(which, "max ratio per tau:", " ".join(f"{v:.4f}" for v in R.max(axis=0)))
        write_table(args.out / f"{which}.csv", ["tau", "max_ratio", "median_ratio"],
                    [[t, float(R[:, j].max()), float(np.median(R[:, j]))] for j, t in enumerate(taus)])


if __name__ == "__main__":
    main()
