"""Compare the Mittag-Leffler kernel against a high-precision mpmath series.

Prints the worst relative error per (alpha, beta) over random points in a
disk together with the worst ratio of actual error to the estimate returned
by :func:`fraccos.ml_kernel.ml_estimate`.
"""

from __future__ import annotations

import argparse

import mpmath
import numpy as np

from fraccos.ml_kernel import MLParams, ml_estimate


def ml_reference(alpha: float, beta: float, z: complex, dps: int = 60) -> complex:
    # the series converges everywhere, precision just has to absorb cancellation
    with mpmath.workdps(dps + int(abs(z) ** (1.0 / alpha) / 2.3)):
        zz = mpmath.mpc(z)
        total = mpmath.mpc(0)
        k = 0
        while True:
            term = zz**k * mpmath.rgamma(alpha * k + beta)
            total += term
            if k > 10 and abs(term) < mpmath.mpf(10) ** (-dps) * max(1, abs(total)):
                break
            k += 1
        return complex(total)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--radius", type=float, default=30.0)
    parser.add_argument("--count", type=int, default=40)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'alpha':>6} {'beta':>6} {'max rel err':>12} {'max err/est':>12}")
    for alpha in (1.25, 1.5, 1.75):
        for beta in (alpha - 1.0, 1.0, alpha, 2.0 * alpha - 1.0):
            r = args.radius * np.sqrt(rng.uniform(size=args.count))
            z = r * np.exp(2j * np.pi * rng.uniform(size=args.count))
            worst = ratio = 0.0
            for zk in z:
                value, est = ml_estimate(MLParams(alpha, beta), complex(zk))
                ref = ml_reference(alpha, beta, complex(zk))
                err = abs(value - ref)
                worst = max(worst, err / max(1.0, abs(ref)))
                ratio = max(ratio, err / est if est > 0 else 0.0)
            print(f"{alpha:6.2f} {beta:6.2f} {worst:12.2e} {ratio:12.2e}")

    return 0


if __name__ == "__main__":
    raise SystemExit(main())
