import json

import numpy as np
import pytest
from scipy.special import gamma

from conftest import GENERATORS, ORDERS
from fraccos import axiom_verifier as av
from fraccos.errors import (
    CornerQuadratureUnconverged,
    DifferentGenerators,
    LimitUnstable,
    TailTooHeavy,
)
from fraccos.resolvent_family import FracOrder, build_family, default_grid

SCALAR = np.array([[-1.0]])


def _family(alpha, a, kind="rl"):
    return build_family(alpha, a, kind)


def _without_closed_forms(oracle):
    return av.FamilyOracle(
        oracle.evaluator, oracle.exponent, oracle.label, oracle.dim, oracle.regular_fn,
        growth=oracle.growth,
    )


# {{{ reports


def test_report_invariants():
    r = av.ResidualReport.from_residuals("resolvent", [(1.0, 2.0)], 1e-9, 1e-10, 1e-7, 32, "x")
    assert r.passed
    assert r.points == [(1.0, 2.0)]
    with pytest.raises(ValueError):
        av.ResidualReport("resolvent", [], 1.0, 1.0, 1e-7, True, 32)
    with pytest.raises(ValueError):
        av.ResidualReport("resolvent", [], -1.0, 0.0, 1e-7, True, 32)

    data = json.loads(r.to_json())
    assert list(data) == sorted(data)
    assert data["points"] == [[1.0, 2.0]]


def test_report_log():
    log = av.ReportLog()
    log.append(av.ResidualReport.from_residuals("a", [], 0.0, 0.0, 1.0))
    log.append(av.ResidualReport.from_residuals("b", [], 2.0, 2.0, 1.0))
    assert len(log) == 2
    assert not log.all_passed
    assert [r.check_id for r in log] == ["a", "b"]
    assert not hasattr(log, "remove")
    lines = log.to_jsonl().splitlines()
    assert [json.loads(line)["check_id"] for line in lines] == ["a", "b"]
    csv = log.to_csv().splitlines()
    assert csv[0].startswith("check_id,label,npoints")
    assert csv[2].split(",")[6] == "false"


def test_oracle_validation():
    with pytest.raises(ValueError):
        av.FamilyOracle(lambda t: t, -1.0, "bad", 1)
    oracle = av.oracle_from_family(_family(1.5, SCALAR))
    with pytest.raises(ValueError):
        oracle(0.0)
    assert oracle.growth == pytest.approx(1.0)


def test_default_pairs():
    assert len(av.default_pairs(1.5)) == 16
    assert (0.25, 0.25) not in av.default_pairs(1.1)
    assert len(av.default_pairs(1.1)) == 15


# }}}


# {{{ resolvent equation


@pytest.mark.parametrize("alpha", ORDERS)
def test_resolvent_zero_generator(alpha):
    r = av.check_resolvent_equation(_family(alpha, np.zeros((2, 2))), FracOrder(alpha), tol=1e-12)
    assert r.passed


def test_resolvent_scalar():
    r = av.check_resolvent_equation(_family(1.5, SCALAR), FracOrder(1.5), tol=1e-8)
    assert r.passed
    assert r.details["closed_form"]


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_resolvent_by_quadrature(name):
    oracle = _without_closed_forms(av.oracle_from_family(_family(1.5, GENERATORS[name])))
    r = av.check_resolvent_equation(oracle, FracOrder(1.5))
    assert not r.details["closed_form"]
    assert r.passed


@pytest.mark.parametrize("alpha", ORDERS)
@pytest.mark.parametrize("name", ["diag", "rot"])
def test_resolvent_detects_corruption(alpha, name):
    oracle = av.corrupt(av.oracle_from_family(_family(alpha, GENERATORS[name])), 1e-2)
    r = av.check_resolvent_equation(oracle, FracOrder(alpha))
    assert r.rel_residual >= 1e-3
    assert not r.passed


def test_degenerate_corruption_is_second_order():
    # at alpha = 1.5 and A = 0, T + eps t I agrees to first order in eps with
    # the family generated by eps I, so the residual scales like eps^2
    order = FracOrder(1.5)
    base = av.oracle_from_family(_family(1.5, np.zeros((2, 2))))
    r2 = av.check_resolvent_equation(av.corrupt(base, 1e-2), order).rel_residual
    r3 = av.check_resolvent_equation(av.corrupt(base, 1e-3), order).rel_residual
    assert r2 / r3 == pytest.approx(100.0, rel=0.05)
    # a generic perturbation of the same family is first order
    r = av.check_resolvent_equation(av.rescale(base, 1.01), order)
    assert not r.passed


def test_caputo_resolvent():
    order = FracOrder(1.5)
    assert av.check_caputo_resolvent(_family(1.5, np.zeros((2, 2)), "caputo"), order).abs_residual == 0.0
    assert av.check_caputo_resolvent(_family(1.5, SCALAR, "caputo"), order, tol=1e-8).passed
    near_two = FracOrder(1.99)
    assert av.check_caputo_resolvent(_family(1.99, SCALAR, "caputo"), near_two, tol=1e-6).passed
    with pytest.raises(ValueError):
        av.check_caputo_resolvent(_family(1.5, SCALAR), order)


def test_pairs_validation():
    with pytest.raises(ValueError):
        av.check_resolvent_equation(_family(1.5, SCALAR), FracOrder(1.5), [(0.0, 1.0)])
    with pytest.raises(ValueError):
        av.check_resolvent_equation(_family(1.5, SCALAR), FracOrder(1.5), n_quad=4)


# }}}


# {{{ cosine equation


@pytest.mark.parametrize("alpha", ORDERS)
def test_cosine_zero_generator(alpha):
    r = av.check_cosine_equation(_family(alpha, np.zeros((2, 2))), FracOrder(alpha), tol=1e-6)
    assert r.passed


def test_cosine_scalar():
    pairs = [(0.5, 0.5), (0.5, 1.0), (1.0, 0.5), (1.0, 1.0)]
    r = av.check_cosine_equation(_family(1.5, SCALAR), FracOrder(1.5), pairs, tol=1e-4)
    assert r.passed
    assert r.details["corner_change"] <= 1e-5


def test_cosine_symmetry():
    fam = _family(1.5, GENERATORS["rot"])
    for t, s in [(0.5, 1.0), (0.25, 2.0)]:
        assert av.cosine_symmetry_defect(fam, FracOrder(1.5), t, s) <= 1e-10


def test_cosine_unconverged_corner():
    with pytest.raises(CornerQuadratureUnconverged) as info:
        av.check_cosine_equation(_family(1.25, GENERATORS["diag"]), FracOrder(1.25), n_quad=8, tol=1e-9)
    assert info.value.code == "corner-quadrature-unconverged"


@pytest.mark.parametrize("name", ["diag", "rot"])
def test_cosine_converges(name):
    fam = _family(1.5, GENERATORS[name])
    r32 = av.check_cosine_equation(fam, FracOrder(1.5), n_quad=32)
    r64 = av.check_cosine_equation(fam, FracOrder(1.5), n_quad=64)
    assert r64.rel_residual * 4 <= r32.rel_residual


@pytest.mark.parametrize(
    "make",
    [
        lambda o: o,
        lambda o: av.corrupt(o, 1e-2),
        lambda o: av.rescale(o, 1.01),
    ],
    ids=["family", "corrupted", "rescaled"],
)
def test_resolvent_and_cosine_agree(make):
    order = FracOrder(1.75)
    oracle = make(av.oracle_from_family(_family(1.75, GENERATORS["rot"])))
    resolvent = av.check_resolvent_equation(oracle, order)
    cosine = av.check_cosine_equation(oracle, order)
    assert resolvent.passed == cosine.passed


# }}}


# {{{ generator recovery


def test_generator_zero():
    est, report = av.recover_generator(_family(1.5, np.zeros((2, 2))), FracOrder(1.5))
    np.testing.assert_array_equal(est.matrix, np.zeros((2, 2)))
    assert report.passed


def test_generator_rotation():
    a = GENERATORS["rot"]
    est, report = av.recover_generator(
        _family(1.5, a), FracOrder(1.5), true_generator=a, integral_form=True
    )
    assert est.distance <= 1e-6
    assert report.details["forms_agreement"] <= 1e-5
    assert report.passed


def test_generator_block_diagonal():
    a1 = np.array([[-1.0, 0.5], [0.0, -2.0]])
    a2 = GENERATORS["rot"]
    a = np.zeros((4, 4))
    a[:2, :2], a[2:, 2:] = a1, a2
    order = FracOrder(1.5)
    est, _ = av.recover_generator(_family(1.5, a), order)
    np.testing.assert_allclose(est.matrix[:2, 2:], 0.0, atol=1e-12)
    np.testing.assert_allclose(est.matrix[2:, :2], 0.0, atol=1e-12)
    for block, sub in ((est.matrix[:2, :2], a1), (est.matrix[2:, 2:], a2)):
        alone, _ = av.recover_generator(_family(1.5, sub), order)
        assert np.linalg.norm(block - sub) <= 1e-5 * np.linalg.norm(sub)
        np.testing.assert_allclose(block, alone.matrix, atol=1e-12)


def test_generator_limit_unstable():
    # the corruption adds eps t^(3 - 2 alpha) to the quotient, unbounded for alpha > 1.5
    oracle = av.corrupt(av.oracle_from_family(_family(1.75, GENERATORS["diag"])), 1e-2)
    with pytest.raises(LimitUnstable) as info:
        av.recover_generator(oracle, FracOrder(1.75))
    assert info.value.code == "limit-unstable"


def test_generator_validation():
    with pytest.raises(ValueError):
        av.recover_generator(_family(1.5, SCALAR), FracOrder(1.5), [0.1, 0.2])


# }}}


# {{{ uniqueness


def test_uniqueness_same_family():
    fam = _family(1.5, GENERATORS["rot"])
    r = av.check_uniqueness(fam, fam, FracOrder(1.5), default_grid(2.0, 8, 3))
    assert r.abs_residual == 0.0


def test_uniqueness_two_paths():
    fam = _family(1.5, GENERATORS["rot"])
    r = av.check_uniqueness(fam, fam.with_series_path(), FracOrder(1.5), default_grid(2.0, 8, 3), tol=1e-9)
    assert r.passed


def test_uniqueness_detects_perturbation():
    order = FracOrder(1.5)
    fam = av.oracle_from_family(_family(1.5, GENERATORS["diag"]))
    r = av.check_uniqueness(fam, av.perturb_smooth(fam, order, 1e-3), order, default_grid(2.0, 8, 3))
    assert r.rel_residual >= 5e-4
    assert not r.passed


def test_uniqueness_different_generators():
    with pytest.raises(DifferentGenerators) as info:
        av.check_uniqueness(
            _family(1.5, GENERATORS["diag"]), _family(1.5, GENERATORS["rot"]),
            FracOrder(1.5), [1.0, 2.0],
        )
    assert info.value.code == "different-generators"


# }}}


# {{{ Laplace identity


@pytest.mark.parametrize("alpha", ORDERS)
def test_laplace_zero_generator(alpha):
    r = av.check_laplace_identity(
        _family(alpha, np.zeros((2, 2))), FracOrder(alpha), [(2.0, 3.0), (1.5, 5.0)], tol=1e-12
    )
    assert r.passed


def test_laplace_scalar():
    fam = _family(1.5, SCALAR)
    order = FracOrder(1.5)
    assert av.check_laplace_identity(fam, order, [(2.0, 3.0)]).rel_residual <= 1e-9
    num = av.check_laplace_identity(fam, order, [(2.0, 3.0)], numerical=True, horizon=40.0)
    assert num.rel_residual <= 1e-5
    assert num.check_id == "laplace-numerical"


def test_numerical_transform_matches_closed_form():
    fam = _family(1.5, GENERATORS["rot"])
    oracle = av.oracle_from_family(fam)
    for lam in (2.5, 4.0):
        assert np.linalg.norm(av.numerical_laplace(oracle, lam) - fam.laplace(lam)) <= 1e-10


def test_laplace_antisymmetry():
    fam = _family(1.5, GENERATORS["diag"])
    lam, mu = 3.0, 4.5
    lhs, _ = av.laplace_sides(fam.laplace(lam), fam.laplace(mu), lam, mu, 1.5)
    lhs_swapped, _ = av.laplace_sides(fam.laplace(mu), fam.laplace(lam), mu, lam, 1.5)
    assert np.linalg.norm(lhs + lhs_swapped) <= 1e-12


def test_laplace_errors():
    fam = _family(1.5, GENERATORS["diag"])
    order = FracOrder(1.5)
    with pytest.raises(ValueError):
        av.check_laplace_identity(fam, order, [(1.5, 3.0)])
    with pytest.raises(TailTooHeavy) as info:
        av.check_laplace_identity(fam, order, [(3.0, 4.0)], numerical=True, horizon=2.0)
    assert info.value.code == "tail-too-heavy"


# }}}


# {{{ solution identities


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_solution_identities(name):
    fam = _family(1.5, GENERATORS[name])
    assert av.check_solution_identities(fam, [0.3, 1.0, 2.0]).passed
    assert av.check_jalpha_quadrature(fam, [0.3, 1.0, 2.0]).passed


def test_commutativity_check():
    fam = _family(1.25, GENERATORS["rot"])
    assert av.check_commutativity(fam, av.default_pairs(1.25)).passed


def test_kernel_consistency():
    order = FracOrder(1.5)
    assert order.kernel(1.0) == pytest.approx(1 / gamma(0.5))


# }}}
