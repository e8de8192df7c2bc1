"""Self-convergence order for several initial data and both orders.

    python scripts/convergence.py --out results/convergence.csv
"""

import argparse
from pathlib import Path

from chsplit.harness import InitialDataSpec, convergence_study
from chsplit.io import write_table
from chsplit.propagators import SolverParams

DATA = {
    "two_cosines": InitialDataSpec("modes", modes=((1, 0, 0.5, 0), (0, 2, 0.25, 0))),
    "random_band2": InitialDataSpec("random", seed=1, band=2, amplitude=1.0),
    "mixed_modes": InitialDataSpec("modes", modes=((1, 1, 0.4, 0), (1, -1, 0, 0.3), (2, 0, 0.2, 0))),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--T", type=float, default=0.5)
    ap.add_argument("--cross-check", action="store_true",
                    help="also measure each order against a reference of the other order")
    ap.add_argument("--out", type=Path, default=Path("results/convergence.csv"))
    args = ap.parse_args()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    taus = [args.T * 2.0**-j for j in range(6, 12)]

    rows = []
    for order in ("LN", "NL"):
        refs = [order, "NL" if order == "LN" else "LN"] if args.cross_check else [order]
        for ref in refs:
            for name, u0 in DATA.items():
                s = convergence_study(u0, SolverParams(1e-3, args.n, order=order), args.T, taus, reference_order=ref)
                print(f"{order} vs {ref} reference  {name:13s} order {s.fitted_order:.3f}")
                rows += [[order, ref, name, t, e, s.fitted_order] for t, e in zip(s.taus, s.errors)]
    write_table(args.out, ["order", "reference", "data", "tau", "error", "fitted_order"], rows)


if __name__ == "__main__":
    main()
