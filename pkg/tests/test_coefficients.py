import numpy as np
import pytest

from wong_zakai_lab.coefficients import (
    AdmissibleRegion,
    CoefficientSystem,
    TruncationBump,
    check_gradient,
    finite_difference_jacobian,
    reduce_to_wz_form,
    stratonovich_correction,
    truncate_system,
)
from wong_zakai_lab.errors import DomainError, ParameterError
from wong_zakai_lab.models.registry import builtin, list_models


def _points(model, count=200, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2.0, 2.0, size=(count, model.dim))
    if model.region.kind != "everywhere":
        x = np.abs(x) + 0.05
    return x


def test_bump_plateaus_are_exact():
    bump = TruncationBump(2.0)
    inside = np.array([[0.0, 0.0], [3.0, 0.0], [1.0, -2.0]])
    outside = np.array([[6.0, 0.0], [10.0, 10.0]])
    assert np.all(bump(inside) == 1.0)
    assert np.all(bump.gradient(inside) == 0.0)
    assert np.all(bump(outside) == 0.0)
    assert np.all(bump.gradient(outside) == 0.0)


def test_bump_is_monotone_and_differentiable():
    bump = TruncationBump(1.0)
    r = np.linspace(0.0, 5.0, 501)
    profile = bump.profile(r)
    assert np.all(np.diff(profile) <= 0.0)
    x = np.stack([r[1:], np.zeros(500)], axis=-1)
    numeric = finite_difference_jacobian(bump, x, step=1e-6)
    np.testing.assert_allclose(numeric, bump.gradient(x), atol=1e-6)


def test_bump_rejects_nonpositive_radius():
    with pytest.raises(ParameterError):
        TruncationBump(0.0)


@pytest.mark.parametrize("name", list_models())
def test_diffusion_gradient_matches_finite_differences(name):
    model = builtin(name)
    x = _points(model)
    assert check_gradient(model.diffusion, model.diffusion_gradient, x) < model.fd_tolerance


def test_stratonovich_correction_cubic():
    model = builtin("cubic")
    x = np.linspace(-3.0, 3.0, 13)[:, None]
    np.testing.assert_allclose(stratonovich_correction(model, x), 2.0 * x ** 3)


def test_stratonovich_correction_lotka_volterra():
    model = builtin("lotka_volterra3", {"gamma": 0.7})
    y = np.array([[0.5, 1.0, 2.0]])
    np.testing.assert_allclose(stratonovich_correction(model, y), 0.49 * y)


def test_stratonovich_correction_sir():
    model = builtin("sir", {"beta": 0.5})
    x = np.array([0.6, 0.3, 0.1])
    expected = 0.25 * 0.6 * 0.3 * (0.3 - 0.6)
    np.testing.assert_allclose(stratonovich_correction(model, x), [expected, -expected, 0.0])


def test_stratonovich_correction_duffing_vanishes():
    model = builtin("duffing_vdp")
    x = _points(model)
    assert np.all(stratonovich_correction(model, x) == 0.0)


def test_stratonovich_correction_outside_region():
    model = builtin("lotka_volterra3")
    with pytest.raises(DomainError):
        stratonovich_correction(model, [-1.0, 1.0, 1.0])


def test_skeleton_form_of_cubic():
    system = reduce_to_wz_form(builtin("cubic"), "skeleton")
    x = np.linspace(-2.0, 2.0, 9)[:, None]
    np.testing.assert_allclose(system.B(x), -2.0 * x ** 3)
    assert np.all(system.H(x) == 0.0)
    assert np.all(system.F(x) == 0.0)
    np.testing.assert_allclose(system.G(x)[..., 0], x ** 2)


def test_shifted_form_signs():
    model = builtin("duffing_vdp")
    system = reduce_to_wz_form(model, "shifted")
    x = _points(model, count=5)
    sigma = model.diffusion(x)
    assert np.array_equal(system.B(x), model.drift(x))
    assert np.array_equal(system.H(x), sigma)
    assert np.array_equal(system.G(x), -sigma)
    assert np.array_equal(system.F(x), sigma)
    assert np.array_equal(system.gradG(x), -model.diffusion_gradient(x))


def test_direct_form_has_no_correction():
    model = builtin("cubic")
    system = reduce_to_wz_form(model, "direct")
    x = np.array([[0.5], [1.5]])
    assert np.all(system.ito_correction(x) == 0.0)
    assert np.array_equal(system.F(x), model.diffusion(x))


def test_unknown_variant():
    with pytest.raises(ParameterError):
        reduce_to_wz_form(builtin("cubic"), "sideways")


def test_ito_correction_of_skeleton_form():
    system = reduce_to_wz_form(builtin("cubic"), "skeleton")
    x = np.array([[0.5], [-2.0]])
    np.testing.assert_allclose(system.ito_correction(x), x ** 3)


def test_truncated_system_matches_inside_ball():
    system = reduce_to_wz_form(builtin("cubic"), "skeleton")
    truncated = truncate_system(system, 2.0)
    x = np.linspace(-3.0, 3.0, 61)[:, None]
    for coefficient in ("B", "H", "G", "F", "gradG"):
        assert np.array_equal(getattr(truncated, coefficient)(x), getattr(system, coefficient)(x))


def test_truncated_system_vanishes_outside():
    system = reduce_to_wz_form(builtin("cubic"), "skeleton")
    truncated = truncate_system(system, 1.0)
    x = np.array([[4.0], [-10.0]])
    assert np.all(truncated.B(x) == 0.0)
    assert np.all(truncated.G(x) == 0.0)
    assert np.all(truncated.gradG(x) == 0.0)


def test_truncated_gradient_follows_product_rule():
    system = reduce_to_wz_form(builtin("cubic"), "skeleton")
    truncated = truncate_system(system, 1.0)
    x = np.linspace(2.1, 3.9, 10)[:, None]
    assert check_gradient(truncated.G, truncated.gradG, x, step=1e-6) < 1e-5


def test_build_fills_zeros():
    system = CoefficientSystem.build(2, 3)
    x = np.ones((4, 2))
    assert system.B(x).shape == (4, 2)
    assert system.G(x).shape == (4, 2, 3)
    assert system.gradG(x).shape == (4, 2, 3, 2)
    assert not system.B(x).any()


def test_system_rejects_bad_dimensions():
    with pytest.raises(ParameterError):
        CoefficientSystem.build(0, 1)


def test_regions():
    points = np.array([[1.0, 2.0], [0.0, 1.0], [-1.0, 1.0]])
    assert AdmissibleRegion.everywhere().contains(points).tolist() == [True, True, True]
    assert AdmissibleRegion.positive_orthant().contains(points).tolist() == [True, False, False]
    assert AdmissibleRegion.nonnegative_orthant().contains(points).tolist() == [True, True, False]
    assert AdmissibleRegion.half_space([1.0, 0.0], -0.5).contains(points).tolist() == [True, True, False]
    with pytest.raises(ParameterError):
        AdmissibleRegion("cube")
