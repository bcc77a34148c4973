"""Command-line front end.

Subcommands:

* ``eval-ml``: evaluate a scalar Mittag-Leffler function;
* ``build``: sample the family generated by a matrix;
* ``solve``: solve the Cauchy problem and certify its initial conditions;
* ``verify``: run functional-equation checks and write reports;
* ``recover-generator``: recover the generator from samples near zero.

Exit codes are 0 on success, 1 when a check fails, 2 on usage or runtime
errors and 3 when the initial conditions of a solution cannot be certified.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from fraccos import axiom_verifier as av
from fraccos.errors import (
    DifferentGenerators,
    FraccosError,
    LimitUnstable,
)
from fraccos.ml_kernel import MLParams, ml_estimate
from fraccos.resolvent_family import (
    FracOrder,
    Kind,
    build_family,
    make_grid,
    sample_family,
    solve_rl_cauchy,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2
EXIT_UNCERTIFIED = 3

SUBCOMMANDS = ("eval-ml", "build", "solve", "verify", "recover-generator")
ALL_CHECKS = ("resolvent", "cosine", "generator", "caputo", "laplace", "uniqueness")
RL_CHECKS = ("resolvent", "cosine", "generator", "laplace", "uniqueness")
DEFAULT_CHECKS = ("resolvent", "cosine")

DEFAULT_TOLERANCES = {
    "resolvent": 1.0e-7,
    "cosine": 1.0e-3,
    "generator": 1.0e-5,
    "caputo": 1.0e-8,
    "laplace": 1.0e-9,
    "laplace-numerical": 1.0e-5,
    "uniqueness": 1.0e-8,
    "certification": 1.0e-8,
}


class UsageError(Exception):
    """Invalid configuration or command line; reported with exit code 2."""


# {{{ configuration


@dataclass(frozen=True)
class GridSpec:
    kind: str = "default"
    tmax: float = 2.0
    count: int = 32

    def __post_init__(self) -> None:
        if self.kind not in ("default", "uniform", "geometric"):
            raise UsageError(f"unknown grid kind: {self.kind!r}")
        if not self.tmax > 0:
            raise UsageError(f"grid T must be positive: {self.tmax}")
        if not 2 <= self.count <= 64:
            raise UsageError(f"grid count must be in [2, 64]: {self.count}")

    def times(self) -> np.ndarray:
        return make_grid(self.kind, self.tmax, self.count)


@dataclass(frozen=True)
class RunConfig:
    alpha: float
    generator_path: Path
    kind: str = "rl"
    grid: GridSpec = field(default_factory=GridSpec)
    quad_order: int = 32
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out_dir: Path = Path("out")
    checks: tuple[str, ...] = DEFAULT_CHECKS
    initial_value: tuple[float, ...] | None = None
    pairs: tuple[tuple[float, float], ...] | None = None
    laplace_points: tuple[tuple[float, float], ...] | None = None
    horizon: float = 40.0

    def __post_init__(self) -> None:
        if not 1.0 < self.alpha < 2.0:
            raise UsageError(f"alpha must be in (1, 2): {self.alpha}")
        if self.kind not in ("rl", "caputo"):
            raise UsageError(f"kind must be 'rl' or 'caputo': {self.kind!r}")
        if self.quad_order < 8:
            raise UsageError(f"quad_order must be at least 8: {self.quad_order}")
        for name, tol in self.tolerances.items():
            if name not in DEFAULT_TOLERANCES:
                raise UsageError(f"unknown tolerance {name!r}")
            if not tol > 0:
                raise UsageError(f"tolerance {name!r} must be positive: {tol}")
        unknown = [c for c in self.checks if c not in ALL_CHECKS]
        if unknown:
            raise UsageError(f"unknown checks: {', '.join(unknown)}")
        if self.kind == "caputo":
            rl_only = [c for c in self.checks if c in RL_CHECKS]
            if rl_only:
                raise UsageError(
                    f"checks {', '.join(rl_only)} apply to Riemann-Liouville families only"
                )
        if not self.horizon > 0:
            raise UsageError(f"horizon must be positive: {self.horizon}")

    def tol(self, name: str) -> float:
        return self.tolerances.get(name, DEFAULT_TOLERANCES[name])

    @classmethod
    def from_json(cls, path: str | Path) -> RunConfig:
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise UsageError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError(f"config file {path} must hold a JSON object")

        known = {
            "alpha", "generator", "kind", "grid", "quad_order", "tolerances", "out",
            "checks", "initial_value", "pairs", "laplace_points", "horizon",
        }
        extra = sorted(set(data) - known)
        if extra:
            raise UsageError(f"unknown config keys: {', '.join(extra)}")
        for key in ("alpha", "generator"):
            if key not in data:
                raise UsageError(f"config is missing {key!r}")

        # relative paths are resolved against the config file
        gen_path = Path(data["generator"])
        if not gen_path.is_absolute():
            gen_path = path.parent / gen_path
        out_dir = Path(data.get("out", "out"))
        if not out_dir.is_absolute():
            out_dir = path.parent / out_dir

        grid = data.get("grid", {})
        tolerances = dict(DEFAULT_TOLERANCES)
        tolerances.update({k: float(v) for k, v in data.get("tolerances", {}).items()})

        def pairs(key: str) -> tuple[tuple[float, float], ...] | None:
            if key not in data:
                return None
            return tuple((float(a), float(b)) for a, b in data[key])

        try:
            return cls(
                alpha=float(data["alpha"]),
                generator_path=gen_path,
                kind=str(data.get("kind", "rl")),
                grid=GridSpec(
                    str(grid.get("kind", "default")),
                    float(grid.get("T", 2.0)),
                    int(grid.get("count", 32)),
                ),
                quad_order=int(data.get("quad_order", 32)),
                tolerances=tolerances,
                out_dir=out_dir,
                checks=tuple(data.get("checks", DEFAULT_CHECKS)),
                initial_value=(
                    tuple(float(v) for v in data["initial_value"])
                    if "initial_value" in data else None
                ),
                pairs=pairs("pairs"),
                laplace_points=pairs("laplace_points"),
                horizon=float(data.get("horizon", 40.0)),
            )
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid config {path}: {exc}") from None


def load_generator(path: Path) -> np.ndarray:
    """Read a generator file ``{"dim": d, "rows": [[...], ...]}``.

    Complex entries are written as ``[re, im]`` pairs.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"generator file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"generator file {path} is not valid JSON: {exc}") from None

    try:
        dim = int(data["dim"])
        rows = data["rows"]
        is_complex = any(isinstance(v, list) for row in rows for v in row)
        if is_complex:
            a = np.array(
                [[complex(*v) if isinstance(v, list) else complex(v) for v in row] for row in rows]
            )
        else:
            a = np.array(rows, dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"generator file {path} is malformed: {exc}") from None

    if a.shape != (dim, dim):
        raise UsageError(f"generator file {path}: expected a {dim}x{dim} matrix, got {a.shape}")
    if not 1 <= dim <= 8:
        raise UsageError(f"generator dimension must be in [1, 8]: {dim}")
    if not np.all(np.isfinite(a)):
        raise UsageError(f"generator file {path} has non-finite entries")
    return a


def write_generator(path: Path, a: np.ndarray) -> None:
    if np.iscomplexobj(a):
        rows = [[[float(v.real), float(v.imag)] for v in row] for row in a]
    else:
        rows = [[float(v) for v in row] for row in a]
    path.write_text(json.dumps({"dim": int(a.shape[0]), "rows": rows}) + "\n", encoding="utf-8")


def _writable(out_dir: Path) -> Path:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out_dir}: {exc}") from None
    if not os.access(out_dir, os.W_OK):
        raise UsageError(f"output directory {out_dir} is not writable")
    return out_dir


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_json(args.config)
    overrides: dict[str, Any] = {}
    if getattr(args, "alpha", None) is not None:
        overrides["alpha"] = args.alpha
    if getattr(args, "out", None) is not None:
        overrides["out_dir"] = Path(args.out)
    if getattr(args, "quad_order", None) is not None:
        overrides["quad_order"] = args.quad_order
    if getattr(args, "checks", None) is not None:
        checks = tuple(c.strip() for c in args.checks.split(",") if c.strip())
        if not checks:
            raise UsageError("no checks selected")
        overrides["checks"] = checks
    if overrides:
        cfg = replace(cfg, **overrides)
    if not cfg.checks:
        raise UsageError("no checks selected")

    return cfg


# }}}


# {{{ subcommands


def _format_complex(z: complex) -> str:
    if z.imag == 0.0:
        return repr(z.real)
    return f"{z.real!r}{z.imag:+.17g}j"


def cmd_eval_ml(args: argparse.Namespace) -> int:
    p = MLParams(args.alpha, args.beta)
    value, err = ml_estimate(p, complex(args.z), args.tol)
    z = _format_complex(complex(args.z))
    print(f"E_{{{args.alpha:g},{args.beta:g}}}({z}) = {_format_complex(value)}")
    print(f"error estimate: {err:.3e}")
    return EXIT_OK


def cmd_build(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    a = load_generator(cfg.generator_path)
    out_dir = _writable(cfg.out_dir)

    fam = build_family(cfg.alpha, a, cfg.kind)
    traj = sample_family(fam, cfg.grid.times())
    path = out_dir / "family.csv"
    traj.to_csv(path)
    print(f"{cfg.kind} family, alpha = {cfg.alpha:g}, dim = {fam.dim}, {traj.grid.size} times")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    a = load_generator(cfg.generator_path)
    if cfg.kind != "rl":
        raise UsageError("solve handles the Riemann-Liouville problem only (kind = 'rl')")
    x = np.zeros(a.shape[0]) if cfg.initial_value is None else np.array(cfg.initial_value)
    if cfg.initial_value is None:
        x[0] = 1.0
    if x.shape != (a.shape[0],):
        raise UsageError(f"initial_value must have {a.shape[0]} entries")
    out_dir = _writable(cfg.out_dir)

    sol = solve_rl_cauchy(cfg.alpha, a, x, cfg.grid.times(), tol=cfg.tol("certification"))
    path = out_dir / "solution.csv"
    sol.trajectory.to_csv(path)

    cert = sol.certificate
    print(f"wrote {path}")
    print(
        f"initial limit: error {cert.limit_error:.3e} "
        f"(tol {cert.tol:.1e}) {'ok' if cert.limit_ok else 'FAILED'}"
    )
    if cert.vanishing:
        print("initial slope: derivative below noise floor ok")
    else:
        print(
            f"initial slope: {cert.slope:.4f} (required >= {cert.slope_required:.4f}) "
            f"{'ok' if cert.slope_ok else 'FAILED'}"
        )
    print(f"certification: {'passed' if cert.passed else 'FAILED'}")
    return EXIT_OK if cert.passed else EXIT_UNCERTIFIED


def _failed(check_id: str, label: str, tol: float, exc: FraccosError) -> av.ResidualReport:
    return av.ResidualReport.from_residuals(
        check_id, [], float("inf"), float("inf"), tol, 0, label,
        error=exc.code, message=str(exc),
    )


def run_checks(cfg: RunConfig, a: np.ndarray, corrupt_eps: float = 0.0) -> av.ReportLog:
    """Run the checks selected in *cfg* on the family generated by *a*."""
    order = FracOrder(cfg.alpha)
    n = cfg.quad_order
    pairs = list(cfg.pairs) if cfg.pairs is not None else av.default_pairs(cfg.alpha)

    def oracle_for(kind: Kind) -> av.FamilyOracle:
        oracle = av.oracle_from_family(build_family(order, a, kind))
        return av.corrupt(oracle, corrupt_eps) if corrupt_eps else oracle

    log = av.ReportLog()
    for check in ALL_CHECKS:
        if check not in cfg.checks:
            continue

        if check == "caputo":
            log.append(av.check_caputo_resolvent(oracle_for(Kind.CAPUTO), order, pairs, n, cfg.tol("caputo")))
            continue

        oracle = oracle_for(Kind.RIEMANN_LIOUVILLE)
        if check == "resolvent":
            log.append(av.check_resolvent_equation(oracle, order, pairs, n, cfg.tol("resolvent")))
        elif check == "cosine":
            log.append(av.check_cosine_equation(oracle, order, pairs, n, cfg.tol("cosine")))
        elif check == "generator":
            try:
                _, report = av.recover_generator(
                    oracle, order, true_generator=a, tol=cfg.tol("generator"),
                    integral_form=True, n_quad=n,
                )
            except LimitUnstable as exc:
                report = _failed("generator", oracle.label, cfg.tol("generator"), exc)
            log.append(report)
        elif check == "laplace":
            if cfg.laplace_points is not None:
                points = list(cfg.laplace_points)
            else:
                ab = av.laplace_abscissa(oracle)
                points = [(ab + 0.5, ab + 1.5), (ab + 1.0, ab + 3.0)]
            if oracle.laplace_fn is not None:
                log.append(av.check_laplace_identity(oracle, order, points, tol=cfg.tol("laplace")))
            log.append(av.check_laplace_identity(
                oracle, order, points, numerical=True, horizon=cfg.horizon,
                n_quad=n, tol=cfg.tol("laplace-numerical"),
            ))
        elif check == "uniqueness":
            reference = av.oracle_from_family(build_family(order, a).with_series_path())
            try:
                report = av.check_uniqueness(
                    oracle, reference, order, cfg.grid.times(), cfg.tol("uniqueness"), n_quad=n
                )
            except (LimitUnstable, DifferentGenerators) as exc:
                report = _failed("uniqueness", oracle.label, cfg.tol("uniqueness"), exc)
            log.append(report)

    return log


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    a = load_generator(cfg.generator_path)
    if args.corrupt is not None and not args.corrupt >= 0:
        raise UsageError(f"--corrupt must be non-negative: {args.corrupt}")
    out_dir = _writable(cfg.out_dir)

    log = run_checks(cfg, a, args.corrupt or 0.0)
    (out_dir / "reports.jsonl").write_text(log.to_jsonl(), encoding="utf-8")
    (out_dir / "summary.csv").write_text(log.to_csv(), encoding="utf-8")

    for r in log:
        status = "pass" if r.passed else "FAIL"
        print(f"{status} {r.check_id:<18} residual {r.rel_residual:.3e} (tol {r.tolerance:.1e})")
    print(f"wrote {out_dir / 'reports.jsonl'} and {out_dir / 'summary.csv'}")
    return EXIT_OK if log.all_passed else EXIT_CHECK_FAILED


def cmd_recover_generator(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    a = load_generator(cfg.generator_path)
    if cfg.kind != "rl":
        raise UsageError("generator recovery uses the Riemann-Liouville family (kind = 'rl')")
    out_dir = _writable(cfg.out_dir)

    fam = build_family(cfg.alpha, a)
    est, report = av.recover_generator(
        fam, fam.order, true_generator=a, tol=cfg.tol("generator"),
        integral_form=True, n_quad=cfg.quad_order,
    )
    write_generator(out_dir / "generator.json", est.matrix)
    with np.printoptions(precision=12, suppress=True):
        print(est.matrix)
    print(f"distance to configured generator: {est.distance:.3e}")
    print(f"agreement of the two limit forms: {report.details['forms_agreement']:.3e}")
    print(f"wrote {out_dir / 'generator.json'}")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


# }}}


# {{{ argument parsing


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="JSON run configuration")
    sub.add_argument("--alpha", type=float, help="override the order alpha in (1, 2)")
    sub.add_argument("--out", help="override the output directory")
    sub.add_argument("--quad-order", type=int, help="override the quadrature order (>= 8)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fraccos",
        description="Fractional resolvents and cosine functions of matrix generators.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("eval-ml", help="evaluate the Mittag-Leffler function E_{alpha,beta}(z)")
    sub.add_argument("--alpha", type=float, required=True)
    sub.add_argument("--beta", type=float, default=1.0)
    sub.add_argument("--z", type=complex, required=True, help="argument, e.g. -1 or 2+3j")
    sub.add_argument("--tol", type=float, default=1.0e-13)
    sub.set_defaults(func=cmd_eval_ml)

    sub = subs.add_parser("build", help="sample the family generated by a matrix")
    _add_config_flags(sub)
    sub.set_defaults(func=cmd_build)

    sub = subs.add_parser("solve", help="solve the Cauchy problem and certify it")
    _add_config_flags(sub)
    sub.set_defaults(func=cmd_solve)

    sub = subs.add_parser("verify", help="check functional equations and write reports")
    _add_config_flags(sub)
    sub.add_argument("--corrupt", type=float, help="add EPS * t * I to the family")
    sub.add_argument(
        "--checks", help=f"comma separated subset of {','.join(ALL_CHECKS)}"
    )
    sub.set_defaults(func=cmd_verify)

    sub = subs.add_parser("recover-generator", help="recover the generator near t = 0")
    _add_config_flags(sub)
    sub.set_defaults(func=cmd_recover_generator)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK

    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except FraccosError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


# }}}


if __name__ == "__main__":
    sys.exit(main())
