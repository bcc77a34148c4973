r"""Numerical certificates for the functional equations of resolvent families.

Every check returns a :class:`ResidualReport`. Residuals of matrix identities
``LHS = RHS`` are measured as

.. math::

    \frac{\|LHS - RHS\|_F}{1 + \max(\|LHS\|_F, \|RHS\|_F)}

and maximized over the sampled time points, since both sides blow up like
:math:`t^{\alpha - 2}` near the origin.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Iterable, Iterator, Sequence

import numpy as np
from scipy.special import gamma, roots_legendre

from fraccos.errors import (
    CornerQuadratureUnconverged,
    DifferentGenerators,
    LimitUnstable,
    TailTooHeavy,
)
from fraccos.extrapolation import richardson
from fraccos.frac_calc import (
    convolve_singular,
    frac_integral,
    power_function,
    singular_rule,
)
from fraccos.resolvent_family import FracOrder, Kind, RLFamily

#: Grading depth used whenever a fractional integral has no closed form.
QUAD_LEVELS = 8

DEFAULT_PAIR_TIMES = (0.25, 0.5, 1.0, 2.0)


# {{{ reports


@dataclass(frozen=True)
class ResidualReport:
    check_id: str
    points: list[tuple[float, ...]]
    abs_residual: float
    rel_residual: float
    tolerance: float
    passed: bool
    quadrature_order: int
    label: str = ""
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (self.abs_residual >= 0 and self.rel_residual >= 0):
            raise ValueError("residuals must be non-negative")
        if self.passed != (self.rel_residual <= self.tolerance):
            raise ValueError("passed must agree with rel_residual <= tolerance")

    @classmethod
    def from_residuals(
        cls,
        check_id: str,
        points: Sequence[tuple[float, ...]],
        abs_residual: float,
        rel_residual: float,
        tolerance: float,
        quadrature_order: int = 0,
        label: str = "",
        **details: Any,
    ) -> ResidualReport:
        return cls(
            check_id,
            [tuple(float(v) for v in pt) for pt in points],
            float(abs_residual),
            float(rel_residual),
            float(tolerance),
            bool(rel_residual <= tolerance),
            int(quadrature_order),
            label,
            details,
        )

    def to_json(self) -> str:
        data = asdict(self)
        data["points"] = [list(pt) for pt in self.points]
        return json.dumps(data, sort_keys=True, default=_jsonable)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj)}")


class ReportLog:
    """Append-only collection of reports."""

    def __init__(self, reports: Iterable[ResidualReport] = ()) -> None:
        self._reports: list[ResidualReport] = []
        for r in reports:
            self.append(r)

    def append(self, report: ResidualReport) -> None:
        self._reports.append(report)

    def __iter__(self) -> Iterator[ResidualReport]:
        return iter(tuple(self._reports))

    def __len__(self) -> int:
        return len(self._reports)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self._reports)

    def to_jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self._reports)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["check_id", "label", "npoints", "abs_residual", "rel_residual",
             "tolerance", "passed", "quadrature_order"]
        )
        for r in self._reports:
            writer.writerow(
                [r.check_id, r.label, len(r.points), repr(r.abs_residual),
                 repr(r.rel_residual), repr(r.tolerance), str(r.passed).lower(),
                 r.quadrature_order]
            )
        return buf.getvalue()


# }}}


# {{{ family oracles


@dataclass(frozen=True)
class FamilyOracle:
    r"""A family :math:`t \mapsto T(t)` seen only through evaluations.

    *evaluator* maps an array of positive times to stacked matrices. The
    optional closed forms are used when present; otherwise the checks fall
    back on quadrature.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    exponent: float
    label: str
    dim: int
    regular_fn: Callable[[np.ndarray], np.ndarray] | None = None
    jalpha_fn: Callable[[np.ndarray], np.ndarray] | None = None
    laplace_fn: Callable[[complex], np.ndarray] | None = None
    #: growth bound used for the Laplace transform abscissa and tail
    growth: float = 0.0

    def __post_init__(self) -> None:
        if not -1.0 < self.exponent <= 0.0:
            raise ValueError(f"singular exponent must be in (-1, 0]: {self.exponent}")

    def __call__(self, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        if np.any(t <= 0):
            raise ValueError("families are evaluated for t > 0 only")
        if t.ndim == 0:
            return self.evaluator(t[None])[0]
        return self.evaluator(t)

    def regular(self, t: Any) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        if self.regular_fn is not None:
            return self.regular_fn(t)
        return (t ** -self.exponent)[:, None, None] * self.evaluator(t)

    @property
    def closed_form(self) -> bool:
        return self.jalpha_fn is not None


def oracle_from_family(fam: RLFamily, label: str | None = None) -> FamilyOracle:
    eig = fam.gen.spectral.eigvals if fam.gen.spectral is not None else np.linalg.eigvals(fam.gen.entries)
    rho = float(np.max(np.abs(eig))) if eig.size else 0.0
    if label is None:
        label = f"{fam.kind.value}(alpha={fam.alpha:g}, dim={fam.dim})"

    return FamilyOracle(
        evaluator=fam,
        exponent=fam.exponent,
        label=label,
        dim=fam.dim,
        regular_fn=fam.regular,
        jalpha_fn=fam.jalpha,
        laplace_fn=fam.laplace,
        growth=rho ** (1.0 / fam.alpha),
    )


def corrupt(oracle: FamilyOracle, eps: float) -> FamilyOracle:
    r"""Negative control :math:`T(t) + \varepsilon t I`."""
    eye = np.eye(oracle.dim)
    p = oracle.exponent

    def evaluator(t: np.ndarray) -> np.ndarray:
        return oracle.evaluator(t) + eps * t[:, None, None] * eye

    def regular(t: np.ndarray) -> np.ndarray:
        return oracle.regular(t) + eps * (t ** (1.0 - p))[:, None, None] * eye

    return FamilyOracle(
        evaluator, p, f"{oracle.label}+{eps:g}*t*I", oracle.dim, regular,
        growth=oracle.growth,
    )


def rescale(oracle: FamilyOracle, factor: float) -> FamilyOracle:
    """Negative control :math:`c \\, T(t)`."""

    def evaluator(t: np.ndarray) -> np.ndarray:
        return factor * oracle.evaluator(t)

    def regular(t: np.ndarray) -> np.ndarray:
        return factor * oracle.regular(t)

    return FamilyOracle(
        evaluator, oracle.exponent, f"{factor:g}*{oracle.label}", oracle.dim,
        regular, growth=oracle.growth,
    )


def perturb_smooth(oracle: FamilyOracle, order: FracOrder, delta: float) -> FamilyOracle:
    r"""Perturbation :math:`T(t) + \delta t^{3\alpha - 2} I`.

    The added term is of higher order than the generator term of the
    expansion at :math:`t = 0`, so the recovered generator is unchanged.
    """
    eye = np.eye(oracle.dim)
    power = 3.0 * order.alpha - 2.0
    p = oracle.exponent

    def evaluator(t: np.ndarray) -> np.ndarray:
        return oracle.evaluator(t) + delta * (t**power)[:, None, None] * eye

    def regular(t: np.ndarray) -> np.ndarray:
        return oracle.regular(t) + delta * (t ** (power - p))[:, None, None] * eye

    return FamilyOracle(
        evaluator, p, f"{oracle.label}+{delta:g}*t^{power:g}*I", oracle.dim,
        regular, growth=oracle.growth,
    )


def _as_oracle(fam: FamilyOracle | RLFamily) -> FamilyOracle:
    return fam if isinstance(fam, FamilyOracle) else oracle_from_family(fam)


def jalpha(oracle: FamilyOracle, order: FracOrder, t: float, n_quad: int) -> np.ndarray:
    r""":math:`J^\alpha T(t)`, in closed form when the oracle provides one."""
    if oracle.jalpha_fn is not None:
        return oracle.jalpha_fn(np.float64(t))
    return frac_integral(oracle, order.alpha, t, n_quad, levels=QUAD_LEVELS)


# }}}


def default_pairs(alpha: float, times: Sequence[float] = DEFAULT_PAIR_TIMES) -> list[tuple[float, float]]:
    """All pairs of *times*, dropping the smallest one for :math:`\\alpha < 1.2`."""
    pairs = [(t, s) for t in times for s in times]
    if alpha < 1.2:
        smallest = (min(times), min(times))
        pairs = [pt for pt in pairs if pt != smallest]
    return pairs


def _residual(lhs: np.ndarray, rhs: np.ndarray) -> tuple[float, float]:
    diff = float(np.linalg.norm(lhs - rhs))
    scale = 1.0 + max(float(np.linalg.norm(lhs)), float(np.linalg.norm(rhs)))
    return diff, diff / scale


def _check_pairs(pairs: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    pairs = sorted((float(t), float(s)) for t, s in pairs)
    if not pairs or any(t <= 0 or s <= 0 for t, s in pairs):
        raise ValueError("pairs must be non-empty and strictly positive")
    return pairs


# {{{ resolvent equations


def check_resolvent_equation(
    fam: FamilyOracle | RLFamily,
    order: FracOrder,
    pairs: Sequence[tuple[float, float]] | None = None,
    n_quad: int = 32,
    tol: float = 1.0e-7,
) -> ResidualReport:
    r"""Check the resolvent equation for all pairs :math:`(t, s)`:

    .. math::

        T(s) J^\alpha T(t) - J^\alpha T(s) \, T(t)
        = \frac{s^{\alpha - 2}}{\Gamma(\alpha - 1)} J^\alpha T(t)
        - \frac{t^{\alpha - 2}}{\Gamma(\alpha - 1)} J^\alpha T(s).
    """
    oracle = _as_oracle(fam)
    if n_quad < 8:
        raise ValueError(f"quadrature order must be at least 8: {n_quad}")
    pairs = _check_pairs(pairs if pairs is not None else default_pairs(order.alpha))

    worst_abs = worst_rel = 0.0
    for t, s in pairs:
        jt = jalpha(oracle, order, t, n_quad)
        js = jalpha(oracle, order, s, n_quad)
        tt, ts = oracle(t), oracle(s)

        lhs = ts @ jt - js @ tt
        rhs = order.kernel(s) * jt - order.kernel(t) * js
        a, r = _residual(lhs, rhs)
        worst_abs, worst_rel = max(worst_abs, a), max(worst_rel, r)

    return ResidualReport.from_residuals(
        "resolvent", pairs, worst_abs, worst_rel, tol, n_quad, oracle.label,
        closed_form=oracle.closed_form,
    )


def check_caputo_resolvent(
    fam: FamilyOracle | RLFamily,
    order: FracOrder,
    pairs: Sequence[tuple[float, float]] | None = None,
    n_quad: int = 32,
    tol: float = 1.0e-8,
) -> ResidualReport:
    r"""Check the Caputo resolvent equation for all pairs :math:`(t, s)`:

    .. math::

        S(s) J^\alpha S(t) - J^\alpha S(s) \, S(t) = J^\alpha S(t) - J^\alpha S(s).
    """
    oracle = _as_oracle(fam)
    if oracle.exponent != 0.0:
        raise ValueError("Caputo families are regular at t = 0")
    if n_quad < 8:
        raise ValueError(f"quadrature order must be at least 8: {n_quad}")
    pairs = _check_pairs(pairs if pairs is not None else default_pairs(order.alpha))

    worst_abs = worst_rel = 0.0
    for t, s in pairs:
        jt = jalpha(oracle, order, t, n_quad)
        js = jalpha(oracle, order, s, n_quad)
        lhs = oracle(s) @ jt - js @ oracle(t)
        rhs = jt - js
        a, r = _residual(lhs, rhs)
        worst_abs, worst_rel = max(worst_abs, a), max(worst_rel, r)

    return ResidualReport.from_residuals(
        "caputo", pairs, worst_abs, worst_rel, tol, n_quad, oracle.label,
        closed_form=oracle.closed_form,
    )


# }}}


# {{{ cosine equation


def _integral(oracle: FamilyOracle, t: float, a: float, n: int, levels: int) -> np.ndarray:
    r""":math:`\int_0^t (t - s)^a T(s) \, ds`."""
    x, w = singular_rule(t, a, oracle.exponent, n, levels)
    return np.tensordot(w, oracle.regular(x), axes=(0, 0))


def _corner_term(
    oracle: FamilyOracle, alpha: float, t: float, s: float, n: int, levels: int
) -> np.ndarray:
    r""":math:`\int_0^t \int_0^s T(\sigma) T(\tau) (t + s - \sigma - \tau)^{1 - \alpha}
    d\tau \, d\sigma`.

    The rectangle is cut at :math:`(t/2, s/2)`. The three panels away from
    the corner :math:`(t, s)` have a smooth kernel and use tensor rules that
    carry the singular weights of :math:`T` at the origin. The corner panel is
    split along its diagonal into two triangles, each mapped to the unit
    square by a Duffy transform centred at the corner, so the kernel
    singularity becomes the radial Jacobi weight :math:`\rho^{2 - \alpha}`.
    """
    p = oracle.exponent
    k = 1.0 - alpha
    ht, hs = 0.5 * t, 0.5 * s

    def near(lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        # panel touching the origin: weight s^p
        return singular_rule(hi - lo, 0.0, p, n, levels)

    def far(lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        x, w = roots_legendre(n)
        h = 0.5 * (hi - lo)
        xs = lo + h * (1.0 + x)
        return xs, h * w * xs**p

    total = np.zeros((oracle.dim, oracle.dim), dtype=np.result_type(oracle.regular(np.array([t]))))

    # panels away from the corner
    for sig_rule, tau_rule in (
        (near(0.0, ht), near(0.0, hs)),
        (far(ht, t), near(0.0, hs)),
        (near(0.0, ht), far(hs, s)),
    ):
        xs, ws = sig_rule
        xt, wt = tau_rule
        kern = (t + s - xs[:, None] - xt[None, :]) ** k
        weights = ws[:, None] * wt[None, :] * kern
        total = total + np.einsum(
            "ij,iab,jbc->ac", weights, oracle.regular(xs), oracle.regular(xt)
        )

    # corner panel: u = t - sigma in [0, t/2], v = s - tau in [0, s/2]
    rho, wrho = singular_rule(1.0, 0.0, 2.0 - alpha, n, 0)
    xw, ww = roots_legendre(n)
    w01 = 0.5 * (1.0 + xw)
    ww = 0.5 * ww

    for first, second, a, b in ((True, False, ht, hs), (False, True, hs, ht)):
        # radial direction along the longer-named side a, transverse side b
        u_long = rho * a
        u_trans = rho[:, None] * b * w01[None, :]
        kern = (a + b * w01[None, :]) ** k
        weights = wrho[:, None] * ww[None, :] * kern * (a * b)

        if first:
            sig = t - u_long
            tau = s - u_trans
            g_sig = oracle.regular(sig) * (sig**p)[:, None, None]
            g_tau = oracle.regular(tau.ravel()) * (tau.ravel() ** p)[:, None, None]
            g_tau = g_tau.reshape(n, n, oracle.dim, oracle.dim)
            total = total + np.einsum("ij,iab,ijbc->ac", weights, g_sig, g_tau)
        else:
            tau = s - u_long
            sig = t - u_trans
            g_tau = oracle.regular(tau) * (tau**p)[:, None, None]
            g_sig = oracle.regular(sig.ravel()) * (sig.ravel() ** p)[:, None, None]
            g_sig = g_sig.reshape(n, n, oracle.dim, oracle.dim)
            total = total + np.einsum("ij,ijab,ibc->ac", weights, g_sig, g_tau)

    return total


def cosine_sides(
    oracle: FamilyOracle,
    order: FracOrder,
    t: float,
    s: float,
    n: int,
    levels: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r"""Both sides of the fractional cosine equation at :math:`(t, s)`.

    .. math::

        \Gamma(2 - \alpha) \int_0^{t + s} T(\sigma) d\sigma
        = \iint T(\sigma) T(\tau) \left[ (t - \sigma)^{1 - \alpha}
        + (s - \tau)^{1 - \alpha} - (t + s - \sigma - \tau)^{1 - \alpha} \right]
        d\tau \, d\sigma

    over :math:`[0, t] \times [0, s]`. The first two double integrals factor
    into products of one-dimensional Jacobi integrals.

    :returns: ``(lhs, rhs, corner)`` where *corner* is the third double
        integral.
    """
    alpha = order.alpha
    k = 1.0 - alpha

    lhs = gamma(2.0 - alpha) * _integral(oracle, t + s, 0.0, n, levels)

    kt = _integral(oracle, t, k, n, levels)
    it = _integral(oracle, t, 0.0, n, levels)
    ks = _integral(oracle, s, k, n, levels)
    is_ = _integral(oracle, s, 0.0, n, levels)
    corner = _corner_term(oracle, alpha, t, s, n, levels)

    rhs = kt @ is_ + it @ ks - corner
    return lhs, rhs, corner


def check_cosine_equation(
    fam: FamilyOracle | RLFamily,
    order: FracOrder,
    pairs: Sequence[tuple[float, float]] | None = None,
    n_quad: int = 32,
    tol: float = 1.0e-3,
    *,
    levels: int = 0,
    convergence_check: bool = True,
) -> ResidualReport:
    """Check the fractional cosine equation at every pair :math:`(t, s)`.

    With *convergence_check*, the corner integral is recomputed with twice as
    many nodes; if it moves by more than a tenth of *tol* (in the residual
    normalization) the quadrature is declared unconverged.
    """
    oracle = _as_oracle(fam)
    if n_quad < 8:
        raise ValueError(f"quadrature order must be at least 8: {n_quad}")
    pairs = _check_pairs(pairs if pairs is not None else default_pairs(order.alpha))

    worst_abs = worst_rel = 0.0
    worst_corner = 0.0
    for t, s in pairs:
        lhs, rhs, corner = cosine_sides(oracle, order, t, s, n_quad, levels)
        a, r = _residual(lhs, rhs)
        worst_abs, worst_rel = max(worst_abs, a), max(worst_rel, r)

        if convergence_check:
            fine = _corner_term(oracle, order.alpha, t, s, 2 * n_quad, levels)
            scale = 1.0 + max(float(np.linalg.norm(lhs)), float(np.linalg.norm(rhs)))
            change = float(np.linalg.norm(fine - corner)) / scale
            worst_corner = max(worst_corner, change)
            if change > 0.1 * tol:
                raise CornerQuadratureUnconverged(
                    f"corner integral at (t, s) = ({t}, {s}) changed by {change:.3e} "
                    f"when doubling {n_quad} nodes (limit {0.1 * tol:.3e})"
                )

    return ResidualReport.from_residuals(
        "cosine", pairs, worst_abs, worst_rel, tol, n_quad, oracle.label,
        corner_change=worst_corner,
    )


def cosine_symmetry_defect(
    fam: FamilyOracle | RLFamily, order: FracOrder, t: float, s: float, n_quad: int = 32
) -> float:
    """Relative change of the right-hand side when swapping :math:`t` and :math:`s`."""
    oracle = _as_oracle(fam)
    _, rhs_ts, _ = cosine_sides(oracle, order, t, s, n_quad)
    _, rhs_st, _ = cosine_sides(oracle, order, s, t, n_quad)
    return _residual(rhs_ts, rhs_st)[1]


# }}}


# {{{ generator recovery


@dataclass(frozen=True)
class GeneratorEstimate:
    matrix: np.ndarray
    #: Richardson error estimate
    error: float
    #: distance to the true generator, when known
    distance: float | None
    #: the same limit taken through J^(2 - alpha), when requested
    integral_form: np.ndarray | None = None


def _difference_quotients(oracle: FamilyOracle, order: FracOrder, t_seq: np.ndarray) -> list[np.ndarray]:
    alpha = order.alpha
    eye = np.eye(oracle.dim)
    regular = oracle.regular(t_seq)
    out = []
    for t, g in zip(t_seq, regular):
        # (T(t) - t^(alpha-2) I / Gamma(alpha-1)) / t^(2 alpha - 2), through G
        num = g - eye / gamma(alpha - 1.0)
        out.append(gamma(2.0 * alpha - 1.0) * num * t ** (-alpha))
    return out


def _integral_quotients(
    oracle: FamilyOracle, order: FracOrder, t_seq: np.ndarray, n_quad: int
) -> list[np.ndarray]:
    alpha = order.alpha
    eye = np.eye(oracle.dim)
    c0 = eye / gamma(alpha - 1.0)

    class _Defect:
        exponent = oracle.exponent

        @staticmethod
        def regular(t: np.ndarray) -> np.ndarray:
            return oracle.regular(t) - c0

    out = []
    for t in t_seq:
        val = frac_integral(_Defect(), 2.0 - alpha, float(t), n_quad, levels=QUAD_LEVELS)
        out.append(gamma(alpha + 1.0) * t ** (-alpha) * val)
    return out


def _check_monotone(values: list[np.ndarray], what: str) -> None:
    diffs = np.array(
        [np.linalg.norm(values[k] - values[k - 1]) for k in range(1, len(values))]
    )
    scale = 1.0 + max(float(np.linalg.norm(v)) for v in values)
    # differences must shrink on the coarse end of the sequence until they
    # reach the roundoff floor
    head = diffs[: max(3, len(diffs) // 2)]
    floor = 1.0e-9 * scale
    growing = [d1 > 1.5 * d0 and d1 > floor for d0, d1 in zip(head[:-1], head[1:])]
    if any(growing) or not np.all(np.isfinite(diffs)):
        raise LimitUnstable(f"{what} does not converge: successive changes {head}")


def recover_generator(
    fam: FamilyOracle | RLFamily,
    order: FracOrder,
    t_seq: Sequence[float] | None = None,
    *,
    true_generator: Any = None,
    tol: float = 1.0e-5,
    integral_form: bool = False,
    n_quad: int = 32,
) -> tuple[GeneratorEstimate, ResidualReport]:
    r"""Recover :math:`A` from the expansion of the family at :math:`t = 0`.

    .. math::

        A = \Gamma(2\alpha - 1) \lim_{t \to 0^+}
            \frac{T(t) - t^{\alpha - 2} I / \Gamma(\alpha - 1)}{t^{2\alpha - 2}}

    The quotient has errors of orders :math:`t^\alpha, t^{2\alpha}, \dots`,
    which Richardson extrapolation over the geometric sequence *t_seq*
    removes. With *integral_form*, the limit
    :math:`\Gamma(\alpha + 1) t^{-\alpha} J^{2-\alpha}(T(t) - t^{\alpha-2} I/\Gamma(\alpha-1))`
    is extrapolated as well, and the report measures the agreement of the
    two forms (plus the distance to *true_generator* when given).
    """
    oracle = _as_oracle(fam)
    if t_seq is None:
        t_seq = 0.1 * 2.0 ** -np.arange(0, 13, dtype=np.float64)
    t_seq = np.asarray(t_seq, dtype=np.float64)
    if not np.all(np.diff(t_seq) < 0):
        raise ValueError("t_seq must be decreasing")

    orders = [order.alpha * (j + 1) for j in range(t_seq.size)]

    quotients = _difference_quotients(oracle, order, t_seq)
    _check_monotone(quotients, "difference quotient")
    est = richardson(quotients, t_seq, orders)

    alt = None
    residuals = []
    if integral_form:
        iq = _integral_quotients(oracle, order, t_seq, n_quad)
        _check_monotone(iq, "integral quotient")
        alt = richardson(iq, t_seq, orders).value
        residuals.append(_relative(alt, est.value))

    distance = None
    if true_generator is not None:
        a = np.asarray(true_generator)
        distance = _relative(est.value, a)
        residuals.append(distance)

    rel = max(residuals) if residuals else est.error / (1.0 + float(np.linalg.norm(est.value)))
    estimate = GeneratorEstimate(est.value, est.error, distance, alt)
    report = ResidualReport.from_residuals(
        "generator", [(float(t),) for t in t_seq], rel * max(1.0, float(np.linalg.norm(est.value))),
        rel, tol, n_quad if integral_form else 0, oracle.label,
        richardson_error=est.error,
        distance=distance,
        forms_agreement=residuals[0] if integral_form else None,
    )
    return estimate, report


def _relative(x: np.ndarray, ref: np.ndarray) -> float:
    return float(np.linalg.norm(x - ref)) / max(1.0, float(np.linalg.norm(ref)))


# }}}


# {{{ uniqueness


def check_uniqueness(
    fam_a: FamilyOracle | RLFamily,
    fam_b: FamilyOracle | RLFamily,
    order: FracOrder,
    grid: Sequence[float],
    tol: float = 1.0e-8,
    *,
    generator_tol: float = 1.0e-4,
    n_quad: int = 32,
) -> ResidualReport:
    r"""Certify that two families with the same generator coincide.

    Besides the pointwise distance on *grid*, the convolutions
    :math:`\frac{t^{\alpha - 2}}{\Gamma(\alpha - 1)} * T_A` and
    :math:`\frac{t^{\alpha - 2}}{\Gamma(\alpha - 1)} * T_B` are compared; the
    report carries the larger of the two residuals.
    """
    a = _as_oracle(fam_a)
    b = _as_oracle(fam_b)

    gen_a, _ = recover_generator(a, order)
    gen_b, _ = recover_generator(b, order)
    mismatch = _relative(gen_b.matrix, gen_a.matrix)
    if mismatch > generator_tol:
        raise DifferentGenerators(
            f"recovered generators differ by {mismatch:.3e} (limit {generator_tol:.1e})"
        )

    grid = np.asarray(grid, dtype=np.float64)
    ta, tb = a(grid), b(grid)
    worst_abs = worst_rel = 0.0
    for x, y in zip(ta, tb):
        d, r = _residual(x, y)
        worst_abs, worst_rel = max(worst_abs, d), max(worst_rel, r)
    pointwise = worst_rel

    kernel = power_function(order.alpha_m2, 1.0 / gamma(order.alpha_m1))
    for t in grid:
        ca = convolve_singular(_scalar_left(kernel, a.dim), a, float(t), n_quad, levels=QUAD_LEVELS)
        cb = convolve_singular(_scalar_left(kernel, b.dim), b, float(t), n_quad, levels=QUAD_LEVELS)
        d, r = _residual(ca, cb)
        worst_abs, worst_rel = max(worst_abs, d), max(worst_rel, r)

    return ResidualReport.from_residuals(
        "uniqueness", [(float(t),) for t in grid], worst_abs, worst_rel, tol, n_quad,
        f"{a.label} vs {b.label}",
        generator_mismatch=mismatch,
        pointwise=pointwise,
    )


def _scalar_left(kernel: Any, dim: int) -> Any:
    """Promote a scalar kernel to a multiple of the identity matrix."""
    eye = np.eye(dim)

    class _Kernel:
        exponent = kernel.exponent

        @staticmethod
        def regular(t: np.ndarray) -> np.ndarray:
            return kernel.regular(t)[:, None, None] * eye

    return _Kernel()


# }}}


# {{{ Laplace transform


def laplace_abscissa(oracle: FamilyOracle) -> float:
    """Default lower bound for transform variables: one plus the growth rate."""
    return 1.0 + oracle.growth


def numerical_laplace(
    oracle: FamilyOracle,
    lam: float,
    horizon: float = 40.0,
    n: int = 32,
    *,
    panel: float = 1.0,
    tol: float = 1.0e-5,
) -> np.ndarray:
    r""":math:`\int_0^T e^{-\lambda t} T(t) \, dt` with a bound on the tail.

    The first panel :math:`[0, 1]` uses a graded Jacobi rule for the
    singularity at 0, the rest unit Gauss-Legendre panels. The neglected tail
    is bounded by :math:`\|T(T)\| e^{-\lambda T} / (\lambda - \omega)`, where
    :math:`\omega` is the growth rate of the oracle.
    """
    if lam <= oracle.growth:
        raise ValueError(f"transform variable {lam} is not right of the growth rate {oracle.growth}")

    p = oracle.exponent
    first = min(panel, horizon)
    x, w = singular_rule(first, 0.0, p, n, QUAD_LEVELS)
    xs = [x]
    ws = [w * np.exp(-lam * x)]

    xl, wl = roots_legendre(n)
    lo = first
    while lo < horizon - 1.0e-12:
        hi = min(lo + panel, horizon)
        h = 0.5 * (hi - lo)
        xk = lo + h * (1.0 + xl)
        xs.append(xk)
        ws.append(h * wl * xk**p * np.exp(-lam * xk))
        lo = hi

    x = np.concatenate(xs)
    w = np.concatenate(ws)
    value = np.tensordot(w, oracle.regular(x), axes=(0, 0))

    tail = float(np.linalg.norm(oracle(horizon))) * math.exp(-lam * horizon) / (lam - oracle.growth)
    if tail > tol * max(1.0, float(np.linalg.norm(value))):
        raise TailTooHeavy(f"tail beyond t = {horizon} is about {tail:.3e}")

    return value


def laplace_sides(
    that_lam: np.ndarray, that_mu: np.ndarray, lam: float, mu: float, alpha: float
) -> tuple[np.ndarray, np.ndarray]:
    r"""Both sides of the transformed resolvent equation.

    .. math::

        (\lambda^{-\alpha} - \mu^{-\alpha}) \hat{T}(\mu) \hat{T}(\lambda)
        = \lambda^{1 - \alpha} \mu^{1 - \alpha}
          (\lambda^{-1} \hat{T}(\lambda) - \mu^{-1} \hat{T}(\mu))
    """
    lhs = (lam**-alpha - mu**-alpha) * (that_mu @ that_lam)
    rhs = lam ** (1.0 - alpha) * mu ** (1.0 - alpha) * (that_lam / lam - that_mu / mu)
    return lhs, rhs


def check_laplace_identity(
    fam: FamilyOracle | RLFamily,
    order: FracOrder,
    lam_mu: Sequence[tuple[float, float]],
    *,
    numerical: bool = False,
    horizon: float = 40.0,
    n_quad: int = 32,
    tol: float | None = None,
    abscissa: float | None = None,
) -> ResidualReport:
    """Check the transformed resolvent equation at every :math:`(\\lambda, \\mu)`.

    The transform is the closed form of the oracle, or with *numerical* the
    truncated integral of :func:`numerical_laplace`. Default tolerances are
    ``1e-9`` and ``1e-5`` respectively.
    """
    oracle = _as_oracle(fam)
    if tol is None:
        tol = 1.0e-5 if numerical else 1.0e-9
    if abscissa is None:
        abscissa = laplace_abscissa(oracle)
    lam_mu = sorted((float(a), float(b)) for a, b in lam_mu)
    if not lam_mu or any(min(pt) < abscissa for pt in lam_mu):
        raise ValueError(f"transform variables must be at least the abscissa {abscissa:.6g}")

    if numerical:
        def transform(x: float) -> np.ndarray:
            return numerical_laplace(oracle, x, horizon, n_quad, tol=tol)
    else:
        if oracle.laplace_fn is None:
            raise ValueError("oracle has no closed-form transform")
        transform = oracle.laplace_fn

    worst_abs = worst_rel = 0.0
    for lam, mu in lam_mu:
        lhs, rhs = laplace_sides(transform(lam), transform(mu), lam, mu, order.alpha)
        a, r = _residual(lhs, rhs)
        worst_abs, worst_rel = max(worst_abs, a), max(worst_rel, r)

    check_id = "laplace-numerical" if numerical else "laplace"
    return ResidualReport.from_residuals(
        check_id, lam_mu, worst_abs, worst_rel, tol, n_quad if numerical else 0,
        oracle.label, horizon=horizon if numerical else None,
    )


# }}}


# {{{ solution operator identities


def check_solution_identities(
    fam: RLFamily,
    times: Sequence[float],
    tol: float = 1.0e-7,
) -> ResidualReport:
    r"""Check, with the closed form of :math:`J^\alpha T`, that

    .. math::

        T(t) x = \frac{t^{\alpha-2}}{\Gamma(\alpha-1)} x + A J^\alpha T(t) x
        = \frac{t^{\alpha-2}}{\Gamma(\alpha-1)} x + J^\alpha T(t) A x

    for every basis vector :math:`x`.
    """
    a = fam.gen.entries
    worst_abs = worst_rel = 0.0
    for t in times:
        tt = fam(float(t))
        j = fam.jalpha(float(t))
        base = fam.order.kernel(t) * np.eye(fam.dim)
        for rhs in (base + a @ j, base + j @ a):
            d, r = _residual(tt, rhs)
            worst_abs, worst_rel = max(worst_abs, d), max(worst_rel, r)

    return ResidualReport.from_residuals(
        "solution-identities", [(float(t),) for t in times], worst_abs, worst_rel, tol,
        0, oracle_from_family(fam).label,
    )


def check_jalpha_quadrature(
    fam: RLFamily, times: Sequence[float], n_quad: int = 32, tol: float = 1.0e-7
) -> ResidualReport:
    r"""Compare the closed form of :math:`J^\alpha T` with quadrature."""
    worst_abs = worst_rel = 0.0
    for t in times:
        quad = frac_integral(fam, fam.alpha, float(t), n_quad, levels=QUAD_LEVELS)
        d, r = _residual(quad, fam.jalpha(float(t)))
        worst_abs, worst_rel = max(worst_abs, d), max(worst_rel, r)

    return ResidualReport.from_residuals(
        "jalpha-quadrature", [(float(t),) for t in times], worst_abs, worst_rel, tol,
        n_quad, oracle_from_family(fam).label,
    )


def check_commutativity(
    fam: FamilyOracle | RLFamily, pairs: Sequence[tuple[float, float]], tol: float = 1.0e-10
) -> ResidualReport:
    r""":math:`\|T(t)T(s) - T(s)T(t)\| \le tol \, \|T(t)\| \|T(s)\|`."""
    oracle = _as_oracle(fam)
    pairs = _check_pairs(pairs)
    worst_abs = worst_rel = 0.0
    for t, s in pairs:
        tt, ts = oracle(t), oracle(s)
        d = float(np.linalg.norm(tt @ ts - ts @ tt))
        r = d / max(float(np.linalg.norm(tt) * np.linalg.norm(ts)), 1.0e-300)
        worst_abs, worst_rel = max(worst_abs, d), max(worst_rel, r)

    return ResidualReport.from_residuals(
        "commutativity", pairs, worst_abs, worst_rel, tol, 0, oracle.label
    )


# }}}
