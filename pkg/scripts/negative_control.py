"""Resolvent equation residual of the corrupted families ``T(t) + eps t I``.

For every order and generator the residual is printed for a range of
corruption sizes, together with the observed order in ``eps``. For the zero
generator at ``alpha = 1.5`` the corruption coincides to first order with the
family generated by ``eps I``, so the residual is second order in ``eps``:
exactly ``eps^2 s t |t^1.5 - s^1.5| / Gamma(3.5)`` before normalization.
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from fraccos import axiom_verifier as av
from fraccos.resolvent_family import FracOrder, build_family

GENERATORS = {
    "zero": np.zeros((2, 2)),
    "diag": np.diag([-1.0, -2.0]),
    "rot": np.array([[0.0, 1.0], [-1.0, 0.0]]),
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--eps", type=float, nargs="+", default=[1e-1, 1e-2, 1e-3])
    args = parser.parse_args()

    print(f"{'alpha':>6} {'A':>5} " + " ".join(f"{'eps=' + format(e, 'g'):>11}" for e in args.eps) + f" {'order':>6}")
    for alpha in (1.25, 1.5, 1.75):
        order = FracOrder(alpha)
        for name, a in GENERATORS.items():
            oracle = av.oracle_from_family(build_family(alpha, a))
            res = [
                av.check_resolvent_equation(av.corrupt(oracle, eps), order).rel_residual
                for eps in args.eps
            ]
            slope = math.log(res[0] / res[-1]) / math.log(args.eps[0] / args.eps[-1])
            print(f"{alpha:6.2f} {name:>5} " + " ".join(f"{r:11.3e}" for r in res) + f" {slope:6.2f}")

    return 0


if __name__ == "__main__":
    raise SystemExit(main())
