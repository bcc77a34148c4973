r"""Riemann-Liouville fractional integrals and derivatives of singular functions.

Functions handled here have the form :math:`f(t) = t^p G(t)` on
:math:`(0, T]`, with :math:`p > -1` and a continuous regular part :math:`G`
(scalar-, vector- or matrix-valued). The singular power is absorbed into the
weight of a Gauss-Jacobi rule, so only :math:`G` is sampled.

.. math::

    J^\alpha f(t) = \frac{1}{\Gamma(\alpha)} \int_0^t (t - s)^{\alpha - 1} f(s) \, ds,
    \qquad
    D^\alpha f(t) = \frac{d^2}{dt^2} J^{2 - \alpha} f(t), \quad 1 < \alpha < 2.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Protocol

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import beta as beta_fn
from scipy.special import gamma, roots_jacobi

from fraccos.errors import InvalidJacobiExponent, NonIntegrableSingularity, OutOfRange

#: Ratio between consecutive breakpoints of a geometrically graded rule.
GRADING_RATIO = 0.15


class Singular(Protocol):
    """Anything of the form :math:`t^p G(t)` with a vectorized :math:`G`."""

    @property
    def exponent(self) -> float: ...

    def regular(self, t: np.ndarray) -> np.ndarray:
        """Evaluate :math:`G` at an array of times, stacking along axis 0."""


# {{{ Gauss-Jacobi rules


@dataclass(frozen=True)
class JacobiRule:
    r"""Gauss-Jacobi rule for the weight :math:`(1 - x)^a (1 + x)^b` on [-1, 1]."""

    n: int
    a: float
    b: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def moment(self) -> float:
        """Exact integral of the weight, which the weights must sum to."""
        return float(2.0 ** (self.a + self.b + 1) * beta_fn(self.a + 1, self.b + 1))

    def scaled(self, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        r"""Map the rule to :math:`[lo, hi]` for the weight
        :math:`(hi - s)^a (s - lo)^b`."""
        h = 0.5 * (hi - lo)
        return lo + h * (1.0 + self.nodes), h ** (self.a + self.b + 1.0) * self.weights


@lru_cache(maxsize=256)
def _jacobi_rule(n: int, a: float, b: float) -> JacobiRule:
    # scipy divides by zero in its recurrence when a + b = -1, but the
    # resulting rule is fine
    with np.errstate(divide="ignore", invalid="ignore"):
        x, w = roots_jacobi(n, a, b)
    x.setflags(write=False)
    w.setflags(write=False)
    return JacobiRule(n, a, b, x, w)


def jacobi_rule(n: int, a: float, b: float) -> JacobiRule:
    """Construct the *n*-point Gauss-Jacobi rule.

    The nodes and weights come from the eigenvalues of the Jacobi matrix of
    the three-term recurrence (Golub-Welsch), polished by Newton iterations,
    as implemented by :func:`scipy.special.roots_jacobi`.
    """
    if n < 1:
        raise ValueError(f"rule needs at least one node: {n}")
    if not (a > -1 and b > -1):
        raise InvalidJacobiExponent(f"exponents must be > -1: a = {a}, b = {b}")

    return _jacobi_rule(int(n), float(a), float(b))


def singular_rule(
    t: float, a: float, b: float, n: int, levels: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    r"""Nodes and weights for :math:`\int_0^t (t - s)^a s^b g(s) \, ds`.

    With ``levels = 0`` this is the single Gauss-Jacobi rule. Otherwise
    :math:`[0, t]` is split at :math:`t q^j, j = 1, \dots, levels` with
    :math:`q` = :data:`GRADING_RATIO`, and the remaining half of the interval
    is given its own panel. Only the first panel carries the :math:`s^b`
    weight and only the last one carries :math:`(t - s)^a`, so the rule stays
    accurate when :math:`g` has non-integer powers of :math:`s` near zero.
    """
    if levels == 0:
        return jacobi_rule(n, a, b).scaled(0.0, t)

    breaks = [0.0] + [t * GRADING_RATIO ** j for j in range(levels, 0, -1)]
    breaks += [0.5 * (breaks[-1] + t), t]

    nodes = []
    weights = []
    for i, (lo, hi) in enumerate(zip(breaks[:-1], breaks[1:])):
        first = i == 0
        last = i == len(breaks) - 2
        rule = jacobi_rule(n, a if last else 0.0, b if first else 0.0)
        x, w = rule.scaled(lo, hi)
        if not last:
            w = w * (t - x) ** a
        if not first:
            w = w * x ** b
        nodes.append(x)
        weights.append(w)

    return np.concatenate(nodes), np.concatenate(weights)


def _contract(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    # fixed summation order, independent of the value shape
    return np.tensordot(weights, values, axes=(0, 0))


# }}}


# {{{ singular functions


@dataclass(frozen=True)
class SingularFunction:
    """A singular function given by a callable regular part."""

    exponent: float
    fn: Callable[[np.ndarray], np.ndarray]
    g0: Any = None

    def regular(self, t: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(t, dtype=np.float64)))


def power_function(exponent: float, coefficient: Any = 1.0) -> SingularFunction:
    """The function :math:`c \\, t^p`, with a constant regular part."""
    c = np.asarray(coefficient)

    def fn(t: np.ndarray) -> np.ndarray:
        return np.broadcast_to(c, (np.size(t), *c.shape)).copy()

    return SingularFunction(exponent, fn, c)


@dataclass(frozen=True)
class SingularTrajectory:
    r"""Samples of :math:`f(t) = t^p G(t)` stored through the regular part.

    The regular part is reconstructed between samples by monotone cubic
    interpolation, anchored at :math:`G(0^+)` = *g0*.
    """

    exponent: float
    grid: np.ndarray
    regular_samples: np.ndarray
    g0: np.ndarray
    continuity_bound: float = math.inf

    def __post_init__(self) -> None:
        grid = np.array(self.grid, dtype=np.float64)
        samples = np.array(self.regular_samples)
        g0 = np.array(self.g0)

        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid must be a 1D array with at least two times")
        if not (grid[0] > 0 and np.all(np.diff(grid) > 0)):
            raise ValueError("grid must be positive and strictly increasing")
        if samples.shape[0] != grid.size:
            raise ValueError(
                f"expected {grid.size} samples, got {samples.shape[0]}"
            )
        if g0.shape != samples.shape[1:] or not np.all(np.isfinite(g0)):
            raise ValueError("g0 must be finite and shaped like a sample")

        for arr in (grid, samples, g0):
            arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "regular_samples", samples)
        object.__setattr__(self, "g0", g0)

        if self.continuity_defect() > self.continuity_bound:
            raise ValueError(
                f"samples are not continuous: defect {self.continuity_defect():.3e} "
                f"> bound {self.continuity_bound:.3e}"
            )

    @property
    def tmax(self) -> float:
        return float(self.grid[-1])

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.g0.shape)

    def continuity_defect(self) -> float:
        """Largest distance of a sample from its neighbours' linear interpolant."""
        t = np.concatenate([[0.0], self.grid])
        g = np.concatenate([self.g0[None], self.regular_samples]).reshape(t.size, -1)
        if t.size < 3:
            return 0.0

        theta = ((t[1:-1] - t[:-2]) / (t[2:] - t[:-2]))[:, None]
        interp = (1.0 - theta) * g[:-2] + theta * g[2:]
        return float(np.max(np.abs(g[1:-1] - interp)))

    def _interpolants(self) -> list[PchipInterpolator]:
        t = np.concatenate([[0.0], self.grid])
        g = np.concatenate([self.g0[None], self.regular_samples]).reshape(t.size, -1)
        if np.iscomplexobj(g):
            return [PchipInterpolator(t, g.real, axis=0), PchipInterpolator(t, g.imag, axis=0)]
        return [PchipInterpolator(t, g, axis=0)]

    def regular(self, t: np.ndarray) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        if np.any(t < 0) or np.any(t > self.tmax * (1 + 1.0e-12)):
            raise OutOfRange(f"times outside [0, {self.tmax}]")

        interps = self.__dict__.get("_interps")
        if interps is None:
            interps = self._interpolants()
            object.__setattr__(self, "_interps", interps)

        parts = [f(t) for f in interps]
        values = parts[0] if len(parts) == 1 else parts[0] + 1j * parts[1]
        return values.reshape(t.size, *self.shape)

    def values(self) -> np.ndarray:
        """The represented function :math:`t^p G(t)` at the grid times."""
        scale = self.grid ** self.exponent
        return scale.reshape(-1, *([1] * len(self.shape))) * self.regular_samples

    # {{{ serialization

    def to_csv(self, path: str | Path) -> None:
        """Write the function values to *path* and metadata to a JSON sidecar.

        The CSV has a header row ``t, f_0, f_1, ...`` with the entries of
        :math:`f(t)` flattened in row-major order; complex entries are written
        as separate real and imaginary columns. The sidecar ``<path>.json``
        holds the exponent, the entry shape and :math:`G(0^+)`.
        """
        path = Path(path)
        values = self.values().reshape(self.grid.size, -1)
        is_complex = bool(np.iscomplexobj(values))

        if is_complex:
            header = ["t"]
            for i in range(values.shape[1]):
                header += [f"re_f{i}", f"im_f{i}"]
            cols = np.empty((values.shape[0], 2 * values.shape[1]))
            cols[:, 0::2] = values.real
            cols[:, 1::2] = values.imag
        else:
            header = ["t"] + [f"f{i}" for i in range(values.shape[1])]
            cols = values

        with open(path, "w", newline="", encoding="utf-8") as outf:
            writer = csv.writer(outf, lineterminator="\n")
            writer.writerow(header)
            for t, row in zip(self.grid, cols):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])

        g0 = self.g0.reshape(-1)
        meta = {
            "exponent": self.exponent,
            "shape": list(self.shape),
            "dim": int(self.shape[0]) if self.shape else 1,
            "complex": is_complex,
            "g0": _encode(g0),
        }
        sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path: str | Path) -> SingularTrajectory:
        path = Path(path)
        meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
        shape = tuple(meta["shape"])

        with open(path, newline="", encoding="utf-8") as inf:
            rows = list(csv.reader(inf))
        data = np.array([[float(v) for v in row] for row in rows[1:]])

        grid = data[:, 0]
        cols = data[:, 1:]
        values = cols[:, 0::2] + 1j * cols[:, 1::2] if meta["complex"] else cols
        values = values.reshape(grid.size, *shape)

        p = float(meta["exponent"])
        scale = grid ** (-p)
        samples = scale.reshape(-1, *([1] * len(shape))) * values
        g0 = _decode(meta["g0"]).reshape(shape)
        return cls(p, grid, samples, g0)

    # }}}


def sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def _encode(arr: np.ndarray) -> list[Any]:
    if np.iscomplexobj(arr):
        return [[float(v.real), float(v.imag)] for v in arr]
    return [float(v) for v in arr]


def _decode(items: list[Any]) -> np.ndarray:
    if items and isinstance(items[0], list):
        return np.array([complex(re, im) for re, im in items])
    return np.array(items, dtype=np.float64)


# }}}


# {{{ fractional integrals and derivatives


def _check_range(f: Singular, t: float) -> None:
    if not t > 0:
        raise OutOfRange(f"time must be positive: {t}")
    tmax = getattr(f, "tmax", math.inf)
    if t > tmax * (1 + 1.0e-12):
        raise OutOfRange(f"time {t} beyond the last grid time {tmax}")
    if not f.exponent > -1:
        raise NonIntegrableSingularity(f"singular exponent must be > -1: {f.exponent}")


def frac_integral(
    f: Singular, alpha_int: float, t: float, n: int = 32, *, levels: int = 0
) -> np.ndarray:
    r"""Riemann-Liouville integral :math:`J^\alpha f(t)`.

    Both the kernel :math:`(t - s)^{\alpha - 1}` and the singular power
    :math:`s^p` are weights of one Gauss-Jacobi rule with :math:`n` nodes
    (or of a graded rule, see :func:`singular_rule`).
    """
    if not alpha_int > 0:
        raise ValueError(f"integration order must be positive: {alpha_int}")
    if n < 4:
        raise ValueError(f"need at least 4 quadrature nodes: {n}")
    _check_range(f, t)

    x, w = singular_rule(t, alpha_int - 1.0, f.exponent, n, levels)
    return _contract(w, f.regular(x)) / gamma(alpha_int)


def _second_difference(
    f: Singular, order: float, t: float, h: float, n: int, levels: int
) -> np.ndarray:
    fm = frac_integral(f, order, t - h, n, levels=levels)
    f0 = frac_integral(f, order, t, n, levels=levels)
    fp = frac_integral(f, order, t + h, n, levels=levels)
    return (fp - 2.0 * f0 + fm) / h**2


def frac_derivative(
    f: Singular,
    alpha_d: float,
    t: float,
    h: float | None = None,
    *,
    n: int = 32,
    levels: int = 8,
    extrapolate: int = 2,
) -> np.ndarray:
    r"""Riemann-Liouville derivative :math:`D^\alpha f(t)` for
    :math:`1 < \alpha < 2`.

    The second derivative of :math:`J^{2 - \alpha} f` is taken by central
    differences with steps :math:`h, h/2, \dots`, combined by Richardson
    extrapolation (the plain difference is second order in :math:`h`). The
    default step is the smaller of the local grid spacing and :math:`t / 8`.
    """
    if not 1.0 < alpha_d < 2.0:
        raise ValueError(f"derivative order must be in (1, 2): {alpha_d}")

    grid = getattr(f, "grid", None)
    if h is None:
        h = t / 8.0
        if grid is not None:
            spacing = np.diff(np.concatenate([[0.0], grid]))
            i = min(int(np.searchsorted(grid, t)), grid.size - 1)
            h = min(h, float(spacing[i]))

    tmax = getattr(f, "tmax", math.inf)
    if not (t - h > 0 and t + h <= tmax * (1 + 1.0e-12)):
        raise OutOfRange(f"stencil [{t - h}, {t + h}] leaves (0, {tmax}]")

    table = [
        _second_difference(f, 2.0 - alpha_d, t, h / 2**i, n, levels)
        for i in range(extrapolate + 1)
    ]
    for j in range(1, extrapolate + 1):
        factor = 4.0**j
        table = [
            (factor * table[i + 1] - table[i]) / (factor - 1.0)
            for i in range(len(table) - 1)
        ]

    return table[0]


def convolve_singular(
    f: Singular,
    g: Singular,
    t: float,
    n: int = 32,
    *,
    levels: int = 0,
) -> np.ndarray:
    r"""Convolution :math:`(f * g)(t) = \int_0^t f(t - s) g(s) \, ds`.

    The interval is split at :math:`t / 2`: on the left panel :math:`g` carries
    its singular weight at 0, on the right panel :math:`f(t - s)` carries its
    weight at :math:`t`. Matrix values are multiplied in the order
    :math:`f(t - s) \, g(s)`.
    """
    _check_range(f, t)
    _check_range(g, t)
    half = 0.5 * t

    # left panel: s in (0, t/2], singular weight s^{p_g}
    xl, wl = singular_rule(half, 0.0, g.exponent, n, levels)
    left = _product_sum(wl, (t - xl) ** f.exponent, f.regular(t - xl), g.regular(xl))

    # right panel: s = t - u with u in (0, t/2], singular weight u^{p_f}
    xr, wr = singular_rule(half, 0.0, f.exponent, n, levels)
    right = _product_sum(wr, (t - xr) ** g.exponent, f.regular(xr), g.regular(t - xr))

    return left + right


def _product_sum(
    weights: np.ndarray, scale: np.ndarray, fv: np.ndarray, gv: np.ndarray
) -> np.ndarray:
    w = weights * scale
    if fv.ndim == 3 and gv.ndim == 3:
        return np.einsum("k,kij,kjl->il", w, fv, gv)
    if fv.ndim == 3 and gv.ndim == 2:
        return np.einsum("k,kij,kj->i", w, fv, gv)
    return _contract(w, fv * gv)


# }}}
