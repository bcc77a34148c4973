"""Riemann-Liouville fractional resolvents and cosine functions of order
:math:`\\alpha \\in (1, 2)` for matrix generators, with numerical certificates
for their functional equations.
"""

from fraccos.errors import FraccosError, MLDivergenceError
from fraccos.frac_calc import (
    SingularTrajectory,
    convolve_singular,
    frac_derivative,
    frac_integral,
    jacobi_rule,
    singular_rule,
)
from fraccos.ml_kernel import Generator, MLParams, mittag_leffler, ml_matrix
from fraccos.resolvent_family import (
    FracOrder,
    Kind,
    RLFamily,
    build_family,
    solve_rl_cauchy,
)

__all__ = [
    "FracOrder",
    "FraccosError",
    "Generator",
    "Kind",
    "MLDivergenceError",
    "MLParams",
    "RLFamily",
    "SingularTrajectory",
    "build_family",
    "convolve_singular",
    "frac_derivative",
    "frac_integral",
    "jacobi_rule",
    "mittag_leffler",
    "ml_matrix",
    "singular_rule",
    "solve_rl_cauchy",
]
