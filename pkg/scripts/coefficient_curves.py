"""Write f_k(mu) for several orders side by side, one column per order.

    python3 scripts/coefficient_curves.py --orders 0.5 1.0 1.5 --M 30 --out fk.csv
"""
from __future__ import annotations

import argparse
import csv

from ldpid.fracseries import expand_fk


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--orders", type=float, nargs="+", default=[0.5, 1.0, 1.5])
    p.add_argument("--M", type=int, default=30)
    p.add_argument("--out", default="fk_curves.csv")
    args = p.parse_args(argv)
    cols = [expand_fk(mu, args.M).values for mu in args.orders]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k"] + [f"f_k({mu:g})" for mu in args.orders])
        for k in range(args.M + 1):
            w.writerow([k] + [repr(float(c[k])) for c in cols])
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
