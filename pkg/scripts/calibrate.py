"""Fit the stability constants on a random corpus and compare the resulting
tau* formula with bisection thresholds.

    python scripts/calibrate.py --corpus 50
"""

import argparse
from dataclasses import asdict

from chsplit.energy import calibrate_constants, threshold
from chsplit.harness import modes_field, random_corpus
from chsplit.propagators import SolverParams
from chsplit.spectral import Grid2D


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", type=int, default=50)
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--probe-steps", type=int, default=100)
    args = ap.parse_args()

    g = Grid2D(args.n)
    base = SolverParams(1e-3, args.n)
    k = calibrate_constants(random_corpus(g, args.corpus, 0, 4, 1.0), base)
    print("calibrated constants:", asdict(k))
    print("nu   scale  alpha        tau*_formula   tau*_empirical")
    for nu in (1.0, 0.25):
        for scale in (1.0, 1.5, 2.0, 2.5):
            u0 = modes_field(g, ((1, 0, scale, 0), (0, 2, 0.6 * scale, 0), (2, 1, 0.4 * scale, 0)))
            est = threshold(u0, SolverParams(1e-3, args.n, nu), k, args.probe_steps)
            emp = f">= {est.tau_star_empirical:g}" if est.empirical_at_bracket_top else f"{est.tau_star_empirical:.4g}"
            print(f"{nu:<4g} {scale:<6g} {est.alpha:<12.4g} {est.tau_star_formula:<14.4g} {emp}")


if __name__ == "__main__":
    main()
