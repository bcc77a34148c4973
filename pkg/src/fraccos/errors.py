"""Exceptions raised by the package.

Every exception carries a short machine-readable ``code`` that the command
line front end reports and tests match against.
"""

from __future__ import annotations


class FraccosError(Exception):
    code = "error"


class MLDivergenceError(FraccosError):
    code = "ml-divergence"

    def __init__(self, modulus: float, alpha: float, beta: float) -> None:
        super().__init__(
            f"Mittag-Leffler evaluation did not converge: |z| = {modulus:.6e}, "
            f"alpha = {alpha}, beta = {beta}"
        )
        self.modulus = modulus
        self.alpha = alpha
        self.beta = beta


class MLMatrixFailure(FraccosError):
    code = "ml-matrix-failure"


class InvalidJacobiExponent(FraccosError, ValueError):
    code = "invalid-jacobi-exponent"


class OutOfRange(FraccosError, ValueError):
    code = "out-of-range"


class NonIntegrableSingularity(FraccosError, ValueError):
    code = "non-integrable-singularity"


class CornerQuadratureUnconverged(FraccosError):
    code = "corner-quadrature-unconverged"


class LimitUnstable(FraccosError):
    code = "limit-unstable"


class DifferentGenerators(FraccosError):
    code = "different-generators"


class TailTooHeavy(FraccosError):
    code = "tail-too-heavy"
