"""Sweep dyadic resolutions and report how far each grid energy sits from the
continuum functional for the chosen trial field pair.

    python3 scripts/run_convergence_sweep.py --pair sine --n-list 4,5,6,7
"""

import argparse
import csv
import sys

from framelet_restore.energy import (
    FIELD_PAIRS,
    EnergySpec,
    convergence_experiment,
)
from framelet_restore.framelet import get_bank


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pair", choices=sorted(FIELD_PAIRS), default="sine")
    ap.add_argument("--bank", choices=["linear", "cubic"], default="linear")
    ap.add_argument("--n-list", default="4,5,6,7")
    ap.add_argument("--quad-depth", type=int, default=6)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--rho", type=float, default=1.0)
    ap.add_argument("--csv", help="also write the table here")
    args = ap.parse_args()

    pair = FIELD_PAIRS[args.pair]()
    pair.validate()
    n_list = [int(x) for x in args.n_list.split(",") if x.strip()]
    spec = EnergySpec(resolution=min(n_list), lam=args.lam,
                      gamma=args.gamma, rho=args.rho)
    rows = convergence_experiment(pair, n_list, get_bank(args.bank), spec,
                                  quad_depth=args.quad_depth)

    print(f"pair={args.pair}  bank={args.bank}  "
          f"continuum energy {rows[0].continuum_energy:.10f}")
    print(f"{'n':>3} {'grid energy':>16} {'rel error':>12} {'ratio':>8}")
    prev = None
    for r in rows:
        ratio = "" if prev is None else f"{prev / r.rel_error:8.3f}"
        print(f"{r.resolution:>3} {r.grid_energy:16.10f} {r.rel_error:12.4e} {ratio}")
        prev = r.rel_error

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "E_n", "E", "rel_err"])
            for r in rows:
                writer.writerow([r.resolution, repr(r.grid_energy),
                                 repr(r.continuum_energy), repr(r.rel_error)])
        print(f"wrote {args.csv}", file=sys.stderr)


if __name__ == "__main__":
    main()
