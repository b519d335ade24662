import numpy as np
import pytest

from wong_zakai_lab.coefficients import AdmissibleRegion, CoefficientSystem, reduce_to_wz_form
from wong_zakai_lab.errors import DomainError, LyapunovError, ParameterError
from wong_zakai_lab.lyapunov import (
    BallDomain,
    BoxDomain,
    LogRadialDomain,
    LyapunovData,
    audit,
    eval_J1_general,
    eval_J2_general,
    eval_J1_sde,
    eval_J2_sde,
    eval_trace_general,
    eval_trace_sde,
    parse_domain,
)
from wong_zakai_lab.models.base import FunctionModel
from wong_zakai_lab.models.registry import builtin


def _cubic_points():
    return np.random.default_rng(0).uniform(-10.0, 10.0, size=(2000, 1))


def test_cubic_first_condition_vanishes():
    model = builtin("cubic")
    lyap = model.lyapunov()
    assert (lyap.theta, lyap.eta) == (1.0, 4.0)
    x = _cubic_points()
    J1 = eval_J1_sde(model, lyap, x)
    assert np.all(np.abs(J1) <= 1e-10 * (1.0 + x[:, 0] ** 4))


def test_cubic_trace_term():
    model = builtin("cubic")
    x = _cubic_points()
    np.testing.assert_allclose(eval_trace_sde(model, model.lyapunov(), x), 2.0 * x[:, 0] ** 4, rtol=1e-10)


def test_cubic_second_condition():
    model = builtin("cubic")
    x = _cubic_points()
    np.testing.assert_allclose(eval_J2_sde(model, model.lyapunov(), x), -2.0 * x[:, 0] ** 4, rtol=1e-9, atol=1e-9)


def test_single_point_returns_scalar():
    model = builtin("cubic")
    value = eval_J1_sde(model, model.lyapunov(), [2.0])
    assert np.ndim(value) == 0
    assert value == pytest.approx(0.0, abs=1e-10)


def test_quotient_at_zero_of_v():
    model = builtin("cubic")
    assert eval_J1_sde(model, model.lyapunov(), [0.0]) == 0.0


def test_singular_quotient_raises():
    lyap = LyapunovData(
        lambda x: np.zeros(np.shape(x)[:-1]),
        lambda x: np.ones(np.shape(x)),
        lambda x: np.zeros(np.shape(x) + (np.shape(x)[-1],)),
    )
    system = CoefficientSystem.build(1, 1, F=lambda x: np.ones(np.shape(x) + (1,)))
    with pytest.raises(LyapunovError):
        eval_J1_general(system, lyap, [1.0])


def test_general_second_condition_on_unreduced_cubic():
    model = builtin("cubic")
    system = CoefficientSystem.build(1, 1, B=model.drift, G=model.diffusion, gradG=model.diffusion_gradient)
    x = _cubic_points()
    # the corrected drift cancels; trace and quotient each give x^4
    np.testing.assert_allclose(eval_J2_general(system, model.lyapunov(), x), 2.0 * x[:, 0] ** 4, rtol=1e-9, atol=1e-9)


def test_general_second_condition_with_cancelling_noise():
    lyap = builtin("cubic").lyapunov()
    system = CoefficientSystem.build(
        1,
        1,
        B=lambda x: -np.asarray(x, dtype=float),
        G=lambda x: np.full(np.shape(x) + (1,), 0.5),
        F=lambda x: np.full(np.shape(x) + (1,), -0.5),
    )
    assert eval_J2_general(system, lyap, [3.0]) == pytest.approx(-18.0)
    assert eval_J2_general(CoefficientSystem.build(2, 1), LyapunovData.from_expression("x1^2 + x2^2", 2), [1.0, 2.0]) == 0.0


def test_system_traces():
    system = reduce_to_wz_form(builtin("cubic"), "shifted")
    lyap = builtin("cubic").lyapunov()
    x = np.array([[1.0], [2.0]])
    # H, G and F are +-x^2; (F + G) vanishes.
    np.testing.assert_allclose(eval_trace_general(system, lyap, x, "c"), 6.0 * x[:, 0] ** 4)
    np.testing.assert_allclose(eval_trace_general(system, lyap, x, "e"), 2.0 * x[:, 0] ** 4)
    with pytest.raises(ParameterError):
        eval_trace_general(system, lyap, x, "d")


MODELS = ["cubic", "duffing_vdp", "lotka_volterra3", "sir", "threshold_ou"]


def _positive_points(model, count=200):
    return np.random.default_rng(6).uniform(0.1, 2.0, size=(count, model.dim))


@pytest.mark.parametrize("name", MODELS)
def test_general_conditions_specialise_to_the_sde_forms(name):
    model = builtin(name)
    lyap = model.lyapunov()
    x = _positive_points(model)
    np.testing.assert_allclose(
        eval_J1_general(reduce_to_wz_form(model, "skeleton"), lyap, x), eval_J2_sde(model, lyap, x), rtol=1e-12, atol=1e-12
    )
    np.testing.assert_allclose(
        eval_J1_general(reduce_to_wz_form(model, "direct"), lyap, x), eval_J1_sde(model, lyap, x), rtol=1e-12, atol=1e-12
    )


def _doubled(model):
    return FunctionModel(
        model.drift,
        lambda x: 2.0 * model.diffusion(x),
        lambda x: 2.0 * model.diffusion_gradient(x),
        dim=model.dim,
        noise_dim=model.noise_dim,
        x0=model.x0,
        region=model.region,
    )


@pytest.mark.parametrize("name", MODELS)
def test_trace_is_quadratic_in_sigma(name):
    model = builtin(name)
    lyap = model.lyapunov()
    x = _positive_points(model)
    assert np.array_equal(eval_trace_sde(_doubled(model), lyap, x), 4.0 * eval_trace_sde(model, lyap, x))
    doubled = reduce_to_wz_form(_doubled(model), "shifted")
    assert np.array_equal(eval_trace_general(doubled, lyap, x), 4.0 * eval_trace_general(reduce_to_wz_form(model, "shifted"), lyap, x))


@pytest.mark.parametrize("gamma", [0.5, 1.3])
def test_lotka_volterra_trace(gamma):
    model = builtin("lotka_volterra3", {"gamma": gamma})
    lyap = model.lyapunov()
    assert eval_trace_sde(model, lyap, [1.0, 1.0, 1.0]) == pytest.approx(6.0 * gamma ** 2, rel=1e-14)
    y = _positive_points(model)
    np.testing.assert_allclose(eval_trace_sde(model, lyap, y), 2.0 * gamma ** 2 * lyap.V(y), rtol=1e-14)


def test_from_expression_matches_analytic():
    model = builtin("duffing_vdp")
    exact = model.lyapunov()
    parsed = LyapunovData.from_expression("x1^4/2 + x1^2 + x2^2", 2, C=exact.C)
    x = np.random.default_rng(4).uniform(-3.0, 3.0, size=(50, 2))
    np.testing.assert_allclose(parsed.V(x), exact.V(x))
    np.testing.assert_allclose(parsed.gradV(x), exact.gradV(x), rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(parsed.hessV(x), exact.hessV(x), rtol=1e-4, atol=1e-4)
    hess = parsed.hessV(x)
    assert np.array_equal(hess, np.swapaxes(hess, -1, -2))


@pytest.mark.parametrize("name", ["theta", "eta", "C", "M"])
def test_constants_must_be_positive(name):
    lyap = builtin("cubic").lyapunov()
    with pytest.raises(ParameterError):
        lyap.with_constants(**{name: -1.0})


def test_with_constants_keeps_unchanged_values():
    lyap = builtin("cubic").lyapunov().with_constants(theta=2.0, eta=None)
    assert (lyap.theta, lyap.eta, lyap.C) == (2.0, 4.0, 1.0)


@pytest.mark.parametrize(
    "text, expected",
    [("box:-1:2", BoxDomain(-1.0, 2.0)), ("ball:3", BallDomain(3.0)), ("logradial", LogRadialDomain()), ("logradial:0.1:10", LogRadialDomain(0.1, 10.0))],
)
def test_parse_domain(text, expected):
    assert parse_domain(text) == expected


@pytest.mark.parametrize("text", ["box:2:1", "ball:0", "ball", "logradial:5:1", "cube:1", "box:a:b"])
def test_parse_domain_errors(text):
    with pytest.raises(DomainError):
        parse_domain(text)


def test_domain_samples_stay_inside():
    rng = np.random.default_rng(5)
    points = BallDomain(2.0).sample(3, 500, rng)
    assert np.all(np.linalg.norm(points, axis=-1) <= 2.0 + 1e-12)
    radii = np.linalg.norm(LogRadialDomain(0.5, 4.0).sample(2, 500, rng), axis=-1)
    assert np.all((radii >= 0.5 - 1e-12) & (radii <= 4.0 + 1e-12))


def test_audit_needs_enough_samples():
    model = builtin("cubic")
    with pytest.raises(ParameterError):
        audit(model, model.lyapunov(), "box:-1:1", samples=999)


def test_coercivity_does_not_decide_the_verdict():
    flat = LyapunovData(
        lambda x: np.ones(np.shape(x)[:-1]),
        lambda x: np.zeros(np.shape(x)),
        lambda x: np.zeros(np.shape(x) + (np.shape(x)[-1],)),
    )
    report = audit(builtin("cubic"), flat, "box:-10:10", samples=1000)
    assert not report.coercive
    assert report.passed
    assert report.to_dict()["coercive"] is False


def test_audit_is_deterministic():
    model = builtin("cubic")
    first = audit(model, model.lyapunov(), "ball:5", samples=1000, seed=9)
    second = audit(model, model.lyapunov(), "ball:5", samples=1000, seed=9)
    assert first.to_dict() == second.to_dict()
    assert sorted(first.conditions) == ["J1", "J2", "trace"]


def test_audit_reports_violations():
    model = builtin("cubic")
    lyap = LyapunovData.from_expression("x^2", 1, theta=1.0, eta=1.0)
    report = audit(model, lyap, "box:-10:10", samples=1000, seed=1)
    J1 = report.conditions["J1"]
    assert not report.passed
    assert not J1.passed
    assert J1.violation_count > 25
    assert len(J1.violations) == 25
    values = [value for __, value in J1.violations]
    assert values == sorted(values, reverse=True)
    assert report.to_dict()["conditions"]["J1"]["violation_count"] == J1.violation_count


def test_audit_of_coefficient_system():
    model = builtin("cubic")
    system = reduce_to_wz_form(model, "skeleton")
    report = audit(system, model.lyapunov(), "box:-10:10", samples=1000)
    assert sorted(report.conditions) == ["J1", "J2", "trace_c", "trace_e"]
    assert report.target == "cubic/skeleton"


def test_audit_reflects_orthant_samples():
    model = builtin("lotka_volterra3")
    report = audit(model, model.lyapunov(), "box:-1:1", samples=1000)
    assert report.passed


def test_audit_outside_half_space():
    system = CoefficientSystem.build(1, 1, region=AdmissibleRegion.half_space([1.0], 0.0))
    with pytest.raises(DomainError):
        audit(system, builtin("cubic").lyapunov(), "box:-1:1", samples=1000)
