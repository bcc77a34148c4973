"""Quadrature convergence of the fractional cosine equation residual.

For each order and generator the residual is computed at increasing
Gauss-Jacobi orders, and the ratio between consecutive orders is printed.
Optionally the table is written to CSV.
"""

from __future__ import annotations

import argparse
import csv

import numpy as np

from fraccos.axiom_verifier import check_cosine_equation
from fraccos.resolvent_family import FracOrder, build_family

GENERATORS = {
    "zero": np.zeros((2, 2)),
    "diag": np.diag([-1.0, -2.0]),
    "rot": np.array([[0.0, 1.0], [-1.0, 0.0]]),
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--orders", type=float, nargs="+", default=[1.25, 1.5, 1.75])
    parser.add_argument("--nodes", type=int, nargs="+", default=[8, 16, 32, 64])
    parser.add_argument("--csv", default=None, help="optional output table")
    args = parser.parse_args()

    rows = []
    print(f"{'alpha':>6} {'A':>5} {'n':>4} {'residual':>10} {'ratio':>7}")
    for alpha in args.orders:
        for name, a in GENERATORS.items():
            fam = build_family(alpha, a)
            prev = None
            for n in args.nodes:
                rel = check_cosine_equation(fam, FracOrder(alpha), n_quad=n, convergence_check=False).rel_residual
                ratio = prev / rel if prev is not None and rel > 0 else float("nan")
                print(f"{alpha:6.2f} {name:>5} {n:4d} {rel:10.2e} {ratio:7.1f}")
                rows.append((alpha, name, n, rel))
                prev = rel

    if args.csv:
        with open(args.csv, "w", newline="") as outf:
            writer = csv.writer(outf)
            writer.writerow(["alpha", "generator", "n_quad", "rel_residual"])
            writer.writerows(rows)

    return 0


if __name__ == "__main__":
    raise SystemExit(main())
