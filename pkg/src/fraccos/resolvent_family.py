r"""Fractional resolvent families of matrix generators.

For :math:`1 < \alpha < 2` and a matrix :math:`A`, the Riemann-Liouville
family and its Laplace transform are

.. math::

    T(t) = t^{\alpha - 2} E_{\alpha, \alpha - 1}(t^\alpha A),
    \qquad
    \hat{T}(\lambda) = \lambda (\lambda^\alpha I - A)^{-1},

and the Caputo solution operator is
:math:`S(t) = E_{\alpha, 1}(t^\alpha A)` with
:math:`\hat{S}(\lambda) = \lambda^{\alpha - 1} (\lambda^\alpha I - A)^{-1}`.

Families are stored through their regular part
:math:`G(t) = t^{2 - \alpha} T(t)`, which is continuous on :math:`[0, \infty)`
with :math:`G(0) = I / \Gamma(\alpha - 1)`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy.special import gamma

from fraccos.extrapolation import richardson
from fraccos.frac_calc import SingularTrajectory, frac_derivative, frac_integral
from fraccos.ml_kernel import DEFAULT_TOL, Generator, MLParams, ml_matrix_batch

#: Tolerance for Mittag-Leffler evaluations inside families.
FAMILY_TOL = 1.0e-12


@dataclass(frozen=True)
class FracOrder:
    """Fractional order :math:`\\alpha \\in (1, 2)` and its derived exponents."""

    alpha: float

    def __post_init__(self) -> None:
        if not 1.0 < self.alpha < 2.0:
            raise ValueError(f"order must be in (1, 2): {self.alpha}")
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def alpha_m1(self) -> float:
        return self.alpha - 1.0

    @property
    def alpha_m2(self) -> float:
        return self.alpha - 2.0

    @property
    def two_alpha_m2(self) -> float:
        return 2.0 * self.alpha - 2.0

    def kernel(self, t: Any) -> Any:
        r""":math:`t^{\alpha - 2} / \Gamma(\alpha - 1)`."""
        return np.asarray(t, dtype=np.float64) ** self.alpha_m2 / gamma(self.alpha_m1)


class Kind(enum.Enum):
    RIEMANN_LIOUVILLE = "rl"
    CAPUTO = "caputo"


@dataclass(frozen=True)
class RLFamily:
    """A fractional resolvent family built from Mittag-Leffler functions.

    Evaluation methods accept scalar or array times; arrays stack the
    matrices along the first axis.
    """

    order: FracOrder
    gen: Generator
    kind: Kind = Kind.RIEMANN_LIOUVILLE
    tol: float = FAMILY_TOL

    @property
    def alpha(self) -> float:
        return self.order.alpha

    @property
    def dim(self) -> int:
        return self.gen.dim

    @property
    def exponent(self) -> float:
        """Singular power of the family at :math:`t = 0`."""
        return self.order.alpha_m2 if self.kind is Kind.RIEMANN_LIOUVILLE else 0.0

    @property
    def g0(self) -> np.ndarray:
        eye = np.eye(self.dim)
        if self.kind is Kind.RIEMANN_LIOUVILLE:
            return eye / gamma(self.order.alpha_m1)
        return eye

    def _ml(self, beta: float, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        scales = np.atleast_1d(t) ** self.alpha
        out = ml_matrix_batch(MLParams(self.alpha, beta), self.gen, scales, self.tol)
        return out[0] if t.ndim == 0 else out

    def regular(self, t: Any) -> np.ndarray:
        r"""Regular part :math:`t^{-p} T(t)`, defined down to :math:`t = 0`."""
        beta = self.order.alpha_m1 if self.kind is Kind.RIEMANN_LIOUVILLE else 1.0
        return self._ml(beta, t)

    def __call__(self, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        if np.any(t <= 0):
            raise ValueError("families are evaluated for t > 0 only")
        return _scale(t ** self.exponent, self.regular(t))

    def jalpha(self, t: Any) -> np.ndarray:
        r"""Closed form of :math:`J^\alpha T(t)`.

        The Mittag-Leffler series is integrated termwise, giving
        :math:`t^{2\alpha - 2} E_{\alpha, 2\alpha - 1}(t^\alpha A)` for the
        Riemann-Liouville family and
        :math:`t^\alpha E_{\alpha, \alpha + 1}(t^\alpha A)` for the Caputo one.
        """
        t = np.asarray(t, dtype=np.float64)
        if np.any(t <= 0):
            raise ValueError("families are evaluated for t > 0 only")

        if self.kind is Kind.RIEMANN_LIOUVILLE:
            power, beta = self.order.two_alpha_m2, 2.0 * self.alpha - 1.0
        else:
            power, beta = self.alpha, self.alpha + 1.0

        return _scale(t**power, self._ml(beta, t))

    def laplace(self, lam: complex) -> np.ndarray:
        """Closed-form Laplace transform at a point right of the spectrum."""
        eye = np.eye(self.dim)
        resolvent = np.linalg.inv(lam**self.alpha * eye - self.gen.entries)
        if self.kind is Kind.RIEMANN_LIOUVILLE:
            return lam * resolvent
        return lam ** (self.alpha - 1.0) * resolvent

    def with_series_path(self) -> RLFamily:
        """The same family evaluated by the matrix series instead of eigenvectors."""
        return RLFamily(self.order, self.gen.without_spectral(), self.kind, self.tol)


def _scale(factor: np.ndarray, mats: np.ndarray) -> np.ndarray:
    if factor.ndim == 0:
        return factor * mats
    return factor.reshape(-1, *([1] * (mats.ndim - 1))) * mats


def build_family(
    order: FracOrder | float,
    gen: Generator | Any,
    kind: Kind | str = Kind.RIEMANN_LIOUVILLE,
    tol: float = FAMILY_TOL,
) -> RLFamily:
    """Construct the Riemann-Liouville or Caputo family generated by *gen*."""
    if not isinstance(order, FracOrder):
        order = FracOrder(order)
    if not isinstance(gen, Generator):
        gen = Generator(np.asarray(gen))
    if not isinstance(kind, Kind):
        kind = Kind(kind)
    if not 1.0e-15 < tol < 1.0e-2:
        raise ValueError(f"tolerance must be in (1e-15, 1e-2): {tol}")

    return RLFamily(order, gen, kind, tol)


def default_grid(tmax: float = 2.0, count: int = 32, levels: int = 8) -> np.ndarray:
    """Union of a uniform grid on :math:`(0, T]` and :math:`T 2^{-k}`."""
    uniform = np.linspace(tmax / count, tmax, count)
    geometric = tmax * 2.0 ** -np.arange(1, levels + 1, dtype=np.float64)
    return np.unique(np.concatenate([geometric, uniform]))


def make_grid(kind: str, tmax: float, count: int) -> np.ndarray:
    if kind == "uniform":
        return np.linspace(tmax / count, tmax, count)
    if kind == "geometric":
        return tmax * 2.0 ** -np.arange(count - 1, -1, -1, dtype=np.float64)
    if kind == "default":
        return default_grid(tmax, count)
    raise ValueError(f"unknown grid kind: {kind!r}")


def sample_family(
    fam: RLFamily, grid: Sequence[float] | np.ndarray, continuity_bound: float = math.inf
) -> SingularTrajectory:
    """Sample the regular part of *fam* on *grid*."""
    grid = np.asarray(grid, dtype=np.float64)
    return SingularTrajectory(
        fam.exponent, grid, fam.regular(grid), fam.g0, continuity_bound
    )


# {{{ Cauchy problem


@dataclass(frozen=True)
class InitialCertificate:
    """Evidence for the two weighted initial conditions of a solution."""

    #: extrapolated limit of Gamma(alpha - 1) t^(2 - alpha) u(t)
    limit: np.ndarray
    limit_error: float
    #: log-log slope of |d/dt J^(2 - alpha) u| on [1e-3, 1e-1]
    slope: float
    slope_required: float
    #: True when the derivative is below the noise floor on the whole window
    vanishing: bool
    tol: float

    @property
    def limit_ok(self) -> bool:
        return self.limit_error <= self.tol

    @property
    def slope_ok(self) -> bool:
        return self.vanishing or self.slope >= self.slope_required

    @property
    def passed(self) -> bool:
        return self.limit_ok and self.slope_ok


@dataclass(frozen=True)
class CauchySolution:
    order: FracOrder
    gen: Generator
    x: np.ndarray
    trajectory: SingularTrajectory
    certificate: InitialCertificate

    def __call__(self, t: Any) -> np.ndarray:
        return self._family(t) @ self.x

    @property
    def _family(self) -> RLFamily:
        return RLFamily(self.order, self.gen)

    @property
    def exponent(self) -> float:
        return self.order.alpha_m2

    def regular(self, t: Any) -> np.ndarray:
        return self._family.regular(t) @ self.x


def certify_initial_conditions(
    fam: RLFamily,
    x: np.ndarray,
    *,
    tol: float = 1.0e-8,
    window: tuple[float, float] = (1.0e-3, 1.0e-1),
    npoints: int = 9,
    slope_margin: float = 0.05,
    floor: float = 1.0e-8,
) -> InitialCertificate:
    r"""Certify :math:`(g_{2-\alpha} * u)(0) = x` and
    :math:`(g_{2-\alpha} * u)'(0) = 0` for :math:`u(t) = T(t) x`.

    The first limit is extrapolated from :math:`t = 10^{-3}, 10^{-4}, 10^{-5}`
    assuming errors of order :math:`t^\alpha` and :math:`t^{2\alpha}`. The
    second is not computable directly; instead
    :math:`|\frac{d}{dt} J^{2-\alpha} u|` must decay at least like
    :math:`t^{\alpha - 1}` on *window*, judged by a least-squares slope in
    log-log coordinates.
    """
    alpha = fam.alpha
    x = np.asarray(x)

    # Gamma(alpha - 1) t^(2 - alpha) T(t) x = Gamma(alpha - 1) G(t) x
    steps = np.array([1.0e-3, 1.0e-4, 1.0e-5])
    samples = gamma(alpha - 1.0) * (fam.regular(steps) @ x)
    limit = richardson(list(samples), steps, [alpha, 2.0 * alpha]).value
    limit_error = float(np.linalg.norm(limit - x) / max(1.0, float(np.linalg.norm(x))))

    u = _VectorFamily(fam, x)
    times = np.geomspace(window[0], window[1], npoints)
    derivs = []
    for t in times:
        h = t / 8.0
        fp = frac_integral(u, 2.0 - alpha, t + h, 32, levels=8)
        fm = frac_integral(u, 2.0 - alpha, t - h, 32, levels=8)
        derivs.append(float(np.linalg.norm((fp - fm) / (2.0 * h))))
    derivs = np.array(derivs)

    vanishing = bool(np.all(derivs <= floor))
    if vanishing:
        slope = math.inf
    else:
        slope = float(np.polyfit(np.log(times), np.log(np.maximum(derivs, 1e-300)), 1)[0])

    return InitialCertificate(
        limit, limit_error, slope, alpha - 1.0 - slope_margin, vanishing, tol
    )


@dataclass(frozen=True)
class _VectorFamily:
    fam: RLFamily
    x: np.ndarray

    @property
    def exponent(self) -> float:
        return self.fam.exponent

    def regular(self, t: np.ndarray) -> np.ndarray:
        return self.fam.regular(t) @ self.x


def solve_rl_cauchy(
    order: FracOrder | float,
    gen: Generator | Any,
    x: Any,
    grid: Sequence[float] | np.ndarray,
    *,
    tol: float = 1.0e-8,
) -> CauchySolution:
    r"""Solve :math:`D^\alpha u = A u` with
    :math:`(g_{2-\alpha} * u)(0) = x`, :math:`(g_{2-\alpha} * u)'(0) = 0`.

    The solution is :math:`u(t) = T(t) x`; it is sampled on *grid* and its
    initial conditions are certified by :func:`certify_initial_conditions`.
    """
    fam = build_family(order, gen)
    x = np.asarray(x)
    if x.shape != (fam.dim,):
        raise ValueError(f"initial value must have shape ({fam.dim},): {x.shape}")

    grid = np.asarray(grid, dtype=np.float64)
    traj = SingularTrajectory(fam.exponent, grid, fam.regular(grid) @ x, fam.g0 @ x)
    cert = certify_initial_conditions(fam, x, tol=tol)
    return CauchySolution(fam.order, fam.gen, x, traj, cert)


def dynamics_residual(sol: CauchySolution, times: Sequence[float]) -> float:
    r"""Largest relative defect of :math:`D^\alpha u = A u` at *times*."""
    worst = 0.0
    for t in times:
        lhs = frac_derivative(sol, sol.order.alpha, float(t))
        rhs = sol.gen.entries @ sol(float(t))
        err = np.linalg.norm(lhs - rhs) / (1.0 + np.linalg.norm(rhs))
        worst = max(worst, float(err))

    return worst


# }}}

__all__ = [
    "DEFAULT_TOL",
    "FAMILY_TOL",
    "CauchySolution",
    "FracOrder",
    "InitialCertificate",
    "Kind",
    "RLFamily",
    "build_family",
    "certify_initial_conditions",
    "default_grid",
    "dynamics_residual",
    "make_grid",
    "sample_family",
    "solve_rl_cauchy",
]
