r"""Two-parameter Mittag-Leffler function for scalars and dense matrices.

.. math::

    E_{\alpha,\beta}(z) = \sum_{k=0}^\infty \frac{z^k}{\Gamma(\alpha k + \beta)}

Three evaluation routes are used for scalars:

* the power series in double precision, for :math:`|z|` below the switch
  radius, and beyond it whenever the cancellation estimate allows;
* the exponential-plus-algebraic asymptotic expansion, whenever its
  truncation estimate meets the tolerance;
* the power series in extended precision (:mod:`mpmath`), otherwise.

Matrices are handled through their eigendecomposition when it is well
conditioned, and by the plain matrix power series otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import mpmath
import numpy as np
from scipy.special import gammaln, rgamma

from fraccos.errors import MLDivergenceError, MLMatrixFailure

DEFAULT_TOL = 1.0e-13
DEFAULT_SWITCH_RADIUS = 5.0

#: Maximum number of series terms, in any precision.
MAX_TERMS = 4000
#: Arguments beyond this modulus are not supported.
MAX_MODULUS = 1.0e6
#: Spectral decompositions with a larger eigenvector condition number are
#: not used by :func:`ml_matrix`.
MAX_SPECTRAL_CONDITION = 1.0e8
#: The matrix series is rejected when its estimated cancellation error,
#: relative to the largest term, exceeds this.
MAX_SERIES_CANCELLATION = 1.0e-8

_EPS = np.finfo(float).eps


def reciprocal_gamma(x: Any) -> Any:
    """Evaluate :math:`1 / \\Gamma(x)`, which vanishes at the poles of Gamma."""
    return rgamma(x)


@dataclass(frozen=True)
class MLParams:
    """Parameters :math:`(\\alpha, \\beta)` of :math:`E_{\\alpha,\\beta}`."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive: {self.alpha}")
        if not math.isfinite(self.beta):
            raise ValueError(f"beta must be finite: {self.beta}")


def _check_tol(tol: float) -> None:
    if not 1.0e-15 < tol < 1.0e-2:
        raise ValueError(f"tolerance must be in (1e-15, 1e-2): {tol}")


# {{{ series


def _series_terms(p: MLParams, r: float, rtol: float) -> int:
    """Number of terms after which the series tail is below *rtol*."""
    if r == 0.0:
        return 1

    logr = math.log(r)
    logtol = math.log(rtol)
    # the term magnitudes are log-concave in k, so once past the peak and
    # below the tolerance the tail is bounded by a geometric series
    k = 0
    prev = -math.inf
    while k < MAX_TERMS:
        arg = p.alpha * k + p.beta
        logterm = k * logr - gammaln(arg) if arg > 0 else -math.inf
        if k > 1 and logterm < prev and logterm < logtol:
            return k + 1
        prev = logterm if arg > 0 else prev
        k += 1

    return MAX_TERMS + 1


def series_max_term(p: MLParams, r: float) -> float:
    """Magnitude of the largest term of the series at modulus *r*."""
    if r == 0.0:
        return abs(float(reciprocal_gamma(p.beta)))

    logr = math.log(r)
    k_peak = max(0.0, r ** (1.0 / p.alpha) / p.alpha)
    ks = np.arange(0, int(k_peak) + 3)
    args = p.alpha * ks + p.beta
    logterms = np.where(args > 0, ks * logr - gammaln(np.where(args > 0, args, 1.0)), -np.inf)
    return float(np.exp(np.max(logterms)))


def _max_terms(p: MLParams, r: np.ndarray) -> np.ndarray:
    """Vectorized :func:`series_max_term`."""
    r = np.asarray(r, dtype=np.float64)
    out = np.full(r.shape, abs(float(reciprocal_gamma(p.beta))))
    pos = r > 0
    if not np.any(pos):
        return out

    kmax = int(np.max(r[pos]) ** (1.0 / p.alpha) / p.alpha) + 3
    ks = np.arange(kmax)
    args = p.alpha * ks + p.beta
    lg = np.where(args > 0, gammaln(np.where(args > 0, args, 1.0)), np.inf)
    logterms = ks[None, :] * np.log(r[pos])[:, None] - lg[None, :]
    with np.errstate(over="ignore"):
        out[pos] = np.exp(np.max(logterms, axis=1))
    return out


def ml_series(p: MLParams, z: Any, rtol: float = 1.0e-17) -> np.ndarray:
    """Sum the power series in double precision, elementwise over *z*."""
    z = np.asarray(z, dtype=np.complex128)
    if z.size == 0:
        return z.copy()

    r = float(np.max(np.abs(z)))
    nterms = _series_terms(p, r, rtol)
    if nterms > MAX_TERMS:
        raise MLDivergenceError(r, p.alpha, p.beta)

    result = np.zeros_like(z)
    zk = np.ones_like(z)
    for k in range(nterms):
        result += zk * reciprocal_gamma(p.alpha * k + p.beta)
        zk = zk * z

    return result


def ml_series_mp(p: MLParams, z: complex, rtol: float = 1.0e-17) -> complex:
    """Sum the power series in extended precision.

    The working precision is chosen from the size of the largest term, so the
    cancellation between terms does not reach the double precision result.
    """
    r = abs(z)
    if r > MAX_MODULUS:
        raise MLDivergenceError(r, p.alpha, p.beta)

    nterms = _series_terms(p, r, rtol)
    if nterms > MAX_TERMS:
        raise MLDivergenceError(r, p.alpha, p.beta)

    digits = max(0.0, math.log10(max(series_max_term(p, r), 1.0)))
    with mpmath.workdps(int(digits) + 25):
        zz = mpmath.mpc(z)
        a = mpmath.mpf(p.alpha)
        b = mpmath.mpf(p.beta)
        total = mpmath.mpc(0)
        zk = mpmath.mpc(1)
        for k in range(nterms):
            total += zk * mpmath.rgamma(a * k + b)
            zk *= zz

        return complex(total)


# }}}


# {{{ asymptotic expansion


def _exponential_part(p: MLParams, z: complex) -> tuple[complex, float]:
    """Sum of the exponential terms and the size of the Stokes-line ones."""
    r = abs(z)
    theta = math.atan2(z.imag, z.real)
    root = r ** (1.0 / p.alpha)

    total = 0.0j
    for m in (-1, 0, 1):
        phase = theta + 2.0 * math.pi * m
        if abs(phase) < p.alpha * math.pi:
            zeta = root * complex(math.cos(phase / p.alpha), math.sin(phase / p.alpha))
            total += zeta ** (1.0 - p.beta) * np.exp(zeta) / p.alpha

    # terms switched on across a Stokes line are at most this large
    stokes = root ** (1.0 - p.beta) * math.exp(-root) / p.alpha
    return total, stokes


def ml_asymptotic(p: MLParams, z: complex, nmax: int = 80) -> tuple[complex, float]:
    r"""Evaluate the asymptotic expansion for :math:`0 < \alpha < 2`.

    .. math::

        E_{\alpha,\beta}(z) \sim \frac{1}{\alpha} \sum_m \zeta_m^{1 - \beta}
            e^{\zeta_m} - \sum_{k = 1}^{N} \frac{z^{-k}}{\Gamma(\beta - \alpha k)},

    where :math:`\zeta_m = |z|^{1/\alpha} e^{\imath (\arg z + 2 \pi m) / \alpha}`
    ranges over the branches with :math:`|\arg z + 2 \pi m| < \alpha \pi`.
    The algebraic sum is truncated before its smallest term.

    :returns: a tuple ``(value, error)``, where *error* is the magnitude of the
        first omitted algebraic term plus the size of any exponential term
        that may have been switched on across a Stokes line.
    """
    if not 0.0 < p.alpha < 2.0:
        raise ValueError(f"expansion implemented for 0 < alpha < 2: {p.alpha}")
    if z == 0:
        raise ValueError("expansion is not defined at z = 0")

    expo, stokes = _exponential_part(p, z)

    # |1/Gamma(beta - alpha k)| <= Gamma(alpha k - beta + 1) / pi by reflection;
    # the envelope is used for truncation since 1/Gamma can vanish at poles
    logr = math.log(abs(z))
    zinv = 1.0 / z
    zk = 1.0 + 0.0j
    algebraic = 0.0j
    prev = math.inf
    omitted = math.inf
    for k in range(1, nmax + 1):
        zk = zk * zinv
        envelope = math.exp(float(gammaln(p.alpha * k - p.beta + 1.0)) - k * logr) / math.pi
        omitted = envelope
        if envelope > prev:
            break
        algebraic -= zk * reciprocal_gamma(p.beta - p.alpha * k)
        prev = envelope

    return expo + algebraic, omitted + stokes


# }}}


# {{{ scalar driver


def _ml_point(p: MLParams, z: complex, tol: float, switch_radius: float) -> complex:
    return ml_estimate(p, z, tol, switch_radius)[0]


def ml_estimate(
    p: MLParams,
    z: complex,
    tol: float = DEFAULT_TOL,
    switch_radius: float = DEFAULT_SWITCH_RADIUS,
) -> tuple[complex, float]:
    """Evaluate :math:`E_{\\alpha,\\beta}(z)` at a single point together with an
    absolute error estimate for the chosen route.
    """
    _check_tol(tol)
    z = complex(z)
    r = abs(z)
    if r > MAX_MODULUS:
        raise MLDivergenceError(r, p.alpha, p.beta)

    if r <= switch_radius:
        value = complex(ml_series(p, z)[()])
        return value, 4.0 * _EPS * max(series_max_term(p, r), abs(value))

    if p.alpha < 2.0:
        with np.errstate(over="ignore", invalid="ignore"):
            value, err = ml_asymptotic(p, z)
        if np.isfinite(value) and err <= tol * max(1.0, abs(value)):
            return value, float(err)

    if 4.0 * _EPS * series_max_term(p, r) <= tol:
        value = complex(ml_series(p, z)[()])
        err = 4.0 * _EPS * series_max_term(p, r)
        if err <= tol * max(1.0, abs(value)):
            return value, err

    value = ml_series_mp(p, z)
    return value, _EPS * max(1.0, abs(value))


def mittag_leffler(
    z: Any,
    alpha: float,
    beta: float = 1.0,
    *,
    tol: float = DEFAULT_TOL,
    switch_radius: float = DEFAULT_SWITCH_RADIUS,
) -> Any:
    """Evaluate :math:`E_{\\alpha,\\beta}(z)` elementwise.

    Real input gives real output. The error is at most
    ``tol * max(1, |E(z)|)`` up to the accuracy of the error estimates used
    to choose the evaluation route.
    """
    _check_tol(tol)
    p = MLParams(alpha, beta)

    zarr = np.asarray(z)
    is_real = not np.iscomplexobj(zarr)
    zc = zarr.astype(np.complex128).ravel()

    result = np.empty_like(zc)
    r = np.abs(zc)
    small = r <= switch_radius
    # beyond the switch radius, the double precision series is still used
    # where the largest term is small enough that cancellation stays below tol
    safe = ~small & (4.0 * _EPS * _max_terms(p, r) <= tol)
    batch = small | safe
    if np.any(batch):
        result[batch] = ml_series(p, zc[batch])

    for i in np.flatnonzero(~batch):
        result[i] = _ml_point(p, complex(zc[i]), tol, switch_radius)

    result = result.reshape(zarr.shape)
    if is_real:
        result = result.real

    return result[()] if result.ndim == 0 else result


def ml_scalar(
    p: MLParams,
    z: complex,
    tol: float = DEFAULT_TOL,
    switch_radius: float = DEFAULT_SWITCH_RADIUS,
) -> complex:
    """Evaluate :math:`E_{\\alpha,\\beta}(z)` at a single point."""
    _check_tol(tol)
    return _ml_point(p, complex(z), tol, switch_radius)


# }}}


# {{{ matrices


@dataclass(frozen=True)
class Spectral:
    eigvals: np.ndarray
    eigvecs: np.ndarray
    eigvecs_inv: np.ndarray
    condition: float


@dataclass(frozen=True)
class Generator:
    """A dense square matrix with a cached eigendecomposition.

    The decomposition is dropped when it does not reconstruct the matrix to
    ``1e-10 * ||A||_F`` or its condition number is not finite, e.g. for
    defective matrices.
    """

    entries: np.ndarray
    spectral: Spectral | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        a = np.array(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"generator must be a square matrix: shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("generator entries must be finite")
        if not np.iscomplexobj(a):
            a = a.astype(np.float64)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

        if self.spectral is None:
            object.__setattr__(self, "spectral", _decompose(a))

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @classmethod
    def from_matrix(cls, a: Any, *, spectral: bool = True) -> Generator:
        gen = cls(np.asarray(a))
        if not spectral:
            object.__setattr__(gen, "spectral", None)
        return gen

    def without_spectral(self) -> Generator:
        """Return a copy that always takes the matrix series path."""
        return Generator.from_matrix(self.entries, spectral=False)


def _decompose(a: np.ndarray) -> Spectral | None:
    try:
        w, v = np.linalg.eig(a)
        vinv = np.linalg.inv(v)
    except np.linalg.LinAlgError:
        return None

    cond = float(np.linalg.cond(v))
    if not math.isfinite(cond):
        return None

    scale = max(float(np.linalg.norm(a)), 1.0e-300)
    if np.linalg.norm(v @ np.diag(w) @ vinv - a) > 1.0e-10 * scale and scale > 1.0e-300:
        return None

    for arr in (w, v, vinv):
        arr.setflags(write=False)

    return Spectral(w, v, vinv, cond)


def _matrix_series(
    p: MLParams, a: np.ndarray, scales: np.ndarray, tol: float
) -> np.ndarray:
    """Sum ``sum_k scales**k A**k / Gamma(alpha k + beta)`` for every scale."""
    n = a.shape[0]
    norm = float(np.linalg.norm(a, 2)) if n else 0.0
    r = norm * float(np.max(np.abs(scales))) if scales.size else 0.0

    nterms = _series_terms(p, r, min(tol, 1.0e-3) * 1.0e-3)
    if nterms > MAX_TERMS or 4.0 * _EPS * series_max_term(p, r) > MAX_SERIES_CANCELLATION:
        raise MLMatrixFailure(f"matrix series does not converge: ||z A|| = {r:.3e}")

    dtype = np.result_type(a, scales, np.float64)
    result = np.zeros((scales.size, n, n), dtype=dtype)
    ak = np.eye(n, dtype=dtype)
    sk = np.ones(scales.size, dtype=dtype)
    for k in range(nterms):
        result += (sk * reciprocal_gamma(p.alpha * k + p.beta))[:, None, None] * ak
        ak = ak @ a
        sk = sk * scales

    return result


def ml_matrix_batch(
    p: MLParams,
    gen: Generator,
    scales: Any,
    tol: float = DEFAULT_TOL,
    *,
    switch_radius: float = DEFAULT_SWITCH_RADIUS,
) -> np.ndarray:
    """Evaluate :math:`E_{\\alpha,\\beta}(c A)` for every scale *c*.

    :returns: an array of shape ``(len(scales), dim, dim)``.
    """
    _check_tol(tol)
    scales = np.atleast_1d(np.asarray(scales))
    spec = gen.spectral
    a = gen.entries

    if spec is not None and spec.condition <= MAX_SPECTRAL_CONDITION:
        z = scales[:, None] * spec.eigvals[None, :]
        values = np.asarray(
            mittag_leffler(
                z.astype(np.complex128), p.alpha, p.beta, tol=tol,
                switch_radius=switch_radius,
            )
        )
        out = np.einsum("ij,kj,jl->kil", spec.eigvecs, values, spec.eigvecs_inv)
        if not (np.iscomplexobj(a) or np.iscomplexobj(scales)):
            out = out.real
        return out

    try:
        return _matrix_series(p, a, scales, tol)
    except MLMatrixFailure:
        if spec is None:
            raise MLMatrixFailure(
                "no usable eigendecomposition and the matrix series does not converge"
            ) from None
        raise MLMatrixFailure(
            f"eigenvector condition {spec.condition:.3e} is too large "
            "and the matrix series does not converge"
        ) from None


def ml_matrix(
    p: MLParams,
    gen: Generator | Any,
    tol: float = DEFAULT_TOL,
    *,
    switch_radius: float = DEFAULT_SWITCH_RADIUS,
) -> np.ndarray:
    """Evaluate :math:`E_{\\alpha,\\beta}(A)` for a single matrix."""
    if not isinstance(gen, Generator):
        gen = Generator(np.asarray(gen))

    return ml_matrix_batch(p, gen, [1.0], tol, switch_radius=switch_radius)[0]


# }}}
