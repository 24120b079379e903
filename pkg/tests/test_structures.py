"""Test second-order structures derived from Christoffel fields"""

import numpy as np
import pytest

from frechet_geo.core.calculus import BilinearMap, SmoothMap
from frechet_geo.core.structures import (
    ChartTransition,
    ChristoffelField,
    ScalarField,
    TwoJet,
    VectorField,
    are_equivalent,
    check_level_transformation_laws,
    check_transformation_law,
    christoffel_from_dissection,
    christoffel_from_spray,
    covariant_derivative,
    dissection_eval,
    hessian_apply,
    hessian_via_connection,
    spray_eval,
    spray_quadratic,
    transform_christoffel,
    transform_twojet,
    transformed_field,
)
from frechet_geo.errors import (
    InverseMismatchError,
    MissingInverseError,
    NotQuadraticError,
    NotSymmetricError,
    SingularTransitionError,
)
from frechet_geo.models.connections import flat_christoffel
from frechet_geo.models.polynomial import (
    quadratic_map,
    random_polynomial_christoffel,
    random_quadratic_map,
)
from frechet_geo.solvers.geodesic import geodesic


def half_square_transition() -> ChartTransition:
    """F(x) = x + x^2 / 2 on x > -1 with its inverse G(v) = sqrt(1 + 2v) - 1"""
    F = SmoothMap(
        eval=lambda x: x + 0.5 * x * x,
        d1=lambda x, v: (1.0 + x) * v,
        d2=lambda x, v, w: v * w,
        domain_dim=1,
        codomain_dim=1,
    )
    G = SmoothMap(
        eval=lambda v: np.sqrt(1.0 + 2.0 * v) - 1.0,
        d1=lambda v, w: w / np.sqrt(1.0 + 2.0 * v),
        domain_dim=1,
        codomain_dim=1,
    )
    return ChartTransition(F, G)


def near_identity_transition(dim: int, rng: np.random.Generator) -> ChartTransition:
    F = quadratic_map(
        np.zeros(dim),
        np.eye(dim) + 0.1 * rng.standard_normal((dim, dim)),
        0.2 * rng.standard_normal((dim, dim, dim)),
    )
    return ChartTransition(F)


def relative_error(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b))) / (1.0 + float(np.linalg.norm(b)))


def test_flat_covariant_derivative_is_directional_derivative():
    """Test nabla_X Y = DY.X when Gamma = 0"""
    rng = np.random.default_rng(0)
    X = VectorField(random_quadratic_map(2, 2, rng))
    Y = VectorField(random_quadratic_map(2, 2, rng))
    u = np.array([0.3, -0.2])
    expected = Y.principal.d1(u, X(u))
    np.testing.assert_allclose(covariant_derivative(flat_christoffel(2), X, Y, u), expected, atol=1e-14)


def test_flat_hessian_is_second_derivative():
    """Test Hf(X, Y) = D^2f(X, Y) for the flat connection"""
    rng = np.random.default_rng(1)
    f = ScalarField(random_quadratic_map(3, 1, rng))
    X = VectorField(SmoothMap.constant([1.0, 0.0, 0.0], 3))
    Y = VectorField(SmoothMap.constant([0.0, 1.0, 0.0], 3))
    u = np.zeros(3)
    expected = float(f.f.d2(u, X(u), Y(u))[0])
    assert hessian_apply(flat_christoffel(3), f, X, Y, u) == pytest.approx(expected, abs=1e-14)


def test_hessian_equivalence_random_instances():
    """Test D^2f + Df.Gamma = X(Y f) - (nabla_X Y) f over seeded random instances"""
    rng = np.random.default_rng(2024)
    for instance in range(50):
        dim = 1 + instance % 4
        gamma = random_polynomial_christoffel(dim, rng, symmetric=instance % 2 == 0)
        f = ScalarField(random_quadratic_map(dim, 1, rng))
        X = VectorField(random_quadratic_map(dim, dim, rng))
        Y = VectorField(random_quadratic_map(dim, dim, rng))
        u = 0.5 * rng.standard_normal(dim)

        direct = hessian_apply(gamma, f, X, Y, u)
        nested = hessian_via_connection(gamma, f, X, Y, u)
        assert abs(direct - nested) <= 1e-5 * (1.0 + abs(direct))


def test_hessian_equivalence_without_analytic_derivatives():
    """Test the nested finite-difference path when f has no analytic derivative"""
    rng = np.random.default_rng(7)
    for _ in range(20):
        gamma = random_polynomial_christoffel(2, rng)
        f = ScalarField(random_quadratic_map(2, 1, rng, analytic=False))
        X = VectorField(random_quadratic_map(2, 2, rng))
        Y = VectorField(random_quadratic_map(2, 2, rng))
        u = 0.5 * rng.standard_normal(2)

        direct = hessian_apply(gamma, f, X, Y, u)
        nested = hessian_via_connection(gamma, f, X, Y, u)
        assert abs(direct - nested) <= 1e-5 * (1.0 + abs(direct))


def test_spray_rejects_non_symmetric_field():
    rng = np.random.default_rng(3)
    gamma = random_polynomial_christoffel(2, rng, symmetric=False)
    with pytest.raises(NotSymmetricError):
        spray_eval(gamma, np.zeros(2), np.ones(2))


def test_spray_eval_fiber_part():
    """Test that the spray returns (v, Gamma(u)(v, v))"""
    rng = np.random.default_rng(4)
    gamma = random_polynomial_christoffel(3, rng)
    u, v = rng.standard_normal(3), rng.standard_normal(3)
    position, acceleration = spray_eval(gamma, u, v)
    np.testing.assert_array_equal(position, v)
    np.testing.assert_allclose(acceleration, gamma(u, v, v))


def test_spray_round_trip():
    """Test that polarizing the spray recovers the symmetric field"""
    rng = np.random.default_rng(5)
    gamma = random_polynomial_christoffel(3, rng, symmetric=True)
    recovered = christoffel_from_spray(spray_quadratic(gamma), 3)
    assert recovered.symmetric
    for _ in range(100):
        u, a, b = (rng.standard_normal(3) for _ in range(3))
        reference = gamma(u, a, b)
        assert relative_error(recovered(u, a, b), reference) <= 1e-12


def test_spray_not_quadratic():
    """Test that a fiber part of degree one is rejected"""
    with pytest.raises(NotQuadraticError):
        christoffel_from_spray(lambda u, v: v, 2)


def test_dissection_round_trip():
    """Test that evaluating the dissection on the covector basis recovers the field"""
    rng = np.random.default_rng(6)
    gamma = random_polynomial_christoffel(3, rng, symmetric=True)
    recovered = christoffel_from_dissection(lambda u, alpha: dissection_eval(gamma, alpha, u), 3)
    for _ in range(100):
        u, a, b = (rng.standard_normal(3) for _ in range(3))
        assert relative_error(recovered(u, a, b), gamma(u, a, b)) <= 1e-12


def test_dissection_of_flat_field_is_zero():
    jet = dissection_eval(flat_christoffel(2), [1.0, 2.0], np.zeros(2))
    np.testing.assert_array_equal(jet.alpha, [1.0, 2.0])
    np.testing.assert_array_equal(jet.B, np.zeros((2, 2)))


def test_twojet_requires_symmetric_form():
    with pytest.raises(NotSymmetricError):
        TwoJet([1.0, 0.0], [[0.0, 1.0], [0.0, 0.0]])


def test_transformation_law_analytic_transitions():
    """Test transform_christoffel against the chart-change law on seeded cases"""
    rng = np.random.default_rng(8)
    for case in range(50):
        dim = 1 + case % 3
        gamma = random_polynomial_christoffel(dim, rng, symmetric=True)
        T = near_identity_transition(dim, rng)
        u = 0.3 * rng.standard_normal(dim)
        target = transform_christoffel(gamma, T, u)
        psi = ChristoffelField(lambda v: target, dim, chart_id="psi", symmetric=True)
        assert check_transformation_law(gamma, psi, T, u) <= 1e-8


def test_transformation_law_finite_difference_transitions():
    """Test the law when the transition only has values"""
    rng = np.random.default_rng(9)
    for _ in range(50):
        gamma = random_polynomial_christoffel(2, rng, symmetric=True)
        analytic = near_identity_transition(2, rng).F
        T = ChartTransition(SmoothMap(eval=analytic.eval, domain_dim=2, codomain_dim=2))
        u = 0.3 * rng.standard_normal(2)
        target = transform_christoffel(gamma, T, u)
        psi = ChristoffelField(lambda v: target, 2, chart_id="psi", symmetric=True)
        assert check_transformation_law(gamma, psi, T, u) <= 1e-4


def test_transformation_law_detects_wrong_field():
    """Test that dropping the D^2F term is detected"""
    T = half_square_transition()
    residual = check_transformation_law(flat_christoffel(1), flat_christoffel(1), T, [0.5])
    assert residual == pytest.approx(1.0)


def test_singular_transition_rejected():
    """Test DF(u) = 0 at u = -1"""
    T = half_square_transition()
    with pytest.raises(SingularTransitionError):
        transform_christoffel(flat_christoffel(1), T, [-1.0])


def test_transformed_field_requires_inverse():
    T = ChartTransition(SmoothMap.linear(np.eye(2)))
    with pytest.raises(MissingInverseError):
        transformed_field(flat_christoffel(2), T)


def test_are_equivalent():
    """Test equivalence of (phi, 0) and (psi, transformed) but not (psi, 0)"""
    T = half_square_transition()
    u = np.array([0.5])
    flat = flat_christoffel(1)
    transformed = transform_christoffel(flat, T, u)
    assert are_equivalent(flat.at(u), transformed, T, u)
    assert not are_equivalent(flat.at(u), flat.at(u), T, u)


def test_level_transformation_laws():
    """Test per-level residuals on a two-level family"""
    rng = np.random.default_rng(10)
    gammas_phi, gammas_psi, transitions, points = {}, {}, {}, {}
    for index, dim in enumerate((1, 2)):
        gamma = random_polynomial_christoffel(dim, rng)
        T = near_identity_transition(dim, rng)
        u = 0.3 * rng.standard_normal(dim)
        target = transform_christoffel(gamma, T, u)
        gammas_phi[index] = gamma
        gammas_psi[index] = ChristoffelField(lambda v, b=target: b, dim, chart_id="psi", symmetric=True)
        transitions[index], points[index] = T, u

    residuals = check_level_transformation_laws(gammas_phi, gammas_psi, transitions, points)
    assert sorted(residuals) == [0, 1]
    assert max(residuals.values()) <= 1e-8


def test_geodesic_chart_covariance():
    """Test that a flat geodesic pushed through F is a geodesic of the transformed field"""
    T = half_square_transition()
    x0, y0 = np.array([0.2]), np.array([0.5])
    gamma_psi = transformed_field(flat_christoffel(1), T)

    v0 = T.F(x0)
    w0 = T.F.d1(x0, y0)
    trajectory = geodesic(gamma_psi, v0, w0, 1.0, 1000)
    expected = T.F(x0 + y0)
    assert trajectory.final_position[0] == pytest.approx(expected[0], abs=1e-6)


def test_twojet_transform_matches_transformed_dissection():
    """Test the 2-jet chart change against the dissection of the transformed field"""
    T = half_square_transition()
    u = np.array([0.4])
    alpha = np.array([1.5])
    jet = transform_twojet(dissection_eval(flat_christoffel(1), alpha, u), T, u)

    v = T.F(u)
    gamma_psi = transformed_field(flat_christoffel(1), T)
    expected = dissection_eval(gamma_psi, jet.alpha, v)
    np.testing.assert_allclose(jet.alpha, alpha / (1.0 + u))
    np.testing.assert_allclose(jet.B, expected.B, atol=1e-12)


def scaled_field(f: SmoothMap, X: VectorField) -> VectorField:
    """u -> f(u) X(u) with the product-rule derivative"""
    def d1(x, v):
        fx = float(np.asarray(f(x)).reshape(-1)[0])
        dfx = float(np.asarray(f.d1(x, v)).reshape(-1)[0])
        return dfx * X(x) + fx * X.principal.d1(x, v)

    return VectorField(SmoothMap(
        eval=lambda x: float(np.asarray(f(x)).reshape(-1)[0]) * X(x),
        d1=d1,
        domain_dim=X.principal.domain_dim,
        codomain_dim=X.principal.codomain_dim,
    ))


def combined_field(a: float, X1: VectorField, b: float, X2: VectorField) -> VectorField:
    p, q = X1.principal, X2.principal
    return VectorField(SmoothMap(
        eval=lambda x: a * p(x) + b * q(x),
        d1=lambda x, v: a * p.d1(x, v) + b * q.d1(x, v),
        domain_dim=p.domain_dim,
        codomain_dim=p.codomain_dim,
    ))


def test_covariant_derivative_constant_product_field():
    """Test Gamma(a, b) = ab with X = Y = 1 gives -1"""
    form = BilinearMap(lambda a, b: a * b, 1, 1, symmetric=True)
    gamma = ChristoffelField(lambda u: form, 1, symmetric=True)
    one = VectorField(SmoothMap.constant([1.0], 1))
    np.testing.assert_allclose(covariant_derivative(gamma, one, one, [0.7]), [-1.0], atol=1e-14)


def test_covariant_derivative_is_bilinear():
    rng = np.random.default_rng(11)
    gamma = random_polynomial_christoffel(2, rng)
    X1, X2, Y1, Y2 = (VectorField(random_quadratic_map(2, 2, rng)) for _ in range(4))
    u = np.array([0.2, -0.4])
    a, b = 1.7, -0.6

    lhs = covariant_derivative(gamma, combined_field(a, X1, b, X2), Y1, u)
    rhs = a * covariant_derivative(gamma, X1, Y1, u) + b * covariant_derivative(gamma, X2, Y1, u)
    np.testing.assert_allclose(lhs, rhs, atol=1e-8)

    lhs = covariant_derivative(gamma, X1, combined_field(a, Y1, b, Y2), u)
    rhs = a * covariant_derivative(gamma, X1, Y1, u) + b * covariant_derivative(gamma, X1, Y2, u)
    np.testing.assert_allclose(lhs, rhs, atol=1e-8)


def test_covariant_derivative_function_linear_in_direction():
    """Test nabla_{fX} Y = f nabla_X Y"""
    rng = np.random.default_rng(12)
    gamma = random_polynomial_christoffel(3, rng)
    f = random_quadratic_map(3, 1, rng)
    X = VectorField(random_quadratic_map(3, 3, rng))
    Y = VectorField(random_quadratic_map(3, 3, rng))
    u = 0.5 * rng.standard_normal(3)

    expected = float(f(u)[0]) * covariant_derivative(gamma, X, Y, u)
    np.testing.assert_allclose(covariant_derivative(gamma, scaled_field(f, X), Y, u), expected, atol=1e-8)


def test_covariant_derivative_leibniz_rule():
    """Test nabla_X (fY) = f nabla_X Y + (X f) Y with a finite-difference fY"""
    rng = np.random.default_rng(13)
    gamma = random_polynomial_christoffel(2, rng)
    f = random_quadratic_map(2, 1, rng)
    X = VectorField(random_quadratic_map(2, 2, rng))
    Y = VectorField(random_quadratic_map(2, 2, rng))
    fY = VectorField(SmoothMap(eval=lambda x: float(f(x)[0]) * Y(x), domain_dim=2, codomain_dim=2))
    u = np.array([0.1, 0.3])

    xf = float(f.d1(u, X(u))[0])
    expected = float(f(u)[0]) * covariant_derivative(gamma, X, Y, u) + xf * Y(u)
    np.testing.assert_allclose(covariant_derivative(gamma, X, fY, u), expected, atol=1e-5)


def test_leibniz_flat_identity_function():
    """Test f(x) = x, X = Y = 1 and Gamma = 0 gives nabla_X (fY) = 1 at 0"""
    one = VectorField(SmoothMap.constant([1.0], 1))
    fY = VectorField(SmoothMap(eval=lambda x: np.asarray(x, dtype=float), domain_dim=1, codomain_dim=1))
    np.testing.assert_allclose(covariant_derivative(flat_christoffel(1), one, fY, [0.0]), [1.0], atol=1e-8)


def test_hessian_symmetric_for_symmetric_field():
    rng = np.random.default_rng(14)
    for dim in (1, 2, 3):
        gamma = random_polynomial_christoffel(dim, rng, symmetric=True)
        f = ScalarField(random_quadratic_map(dim, 1, rng))
        X = VectorField(random_quadratic_map(dim, dim, rng))
        Y = VectorField(random_quadratic_map(dim, dim, rng))
        u = 0.5 * rng.standard_normal(dim)
        assert hessian_apply(gamma, f, X, Y, u) == pytest.approx(hessian_apply(gamma, f, Y, X, u), abs=1e-8)


def test_twojet_transform_under_doubling():
    """Test F = 2 id, G = id / 2 maps (1, [[1]]) to (1/2, [[1/4]])"""
    T = ChartTransition(SmoothMap.linear([[2.0]]), SmoothMap.linear([[0.5]]))
    jet = transform_twojet(TwoJet([1.0], [[1.0]]), T, [0.3])
    np.testing.assert_allclose(jet.alpha, [0.5], atol=1e-14)
    np.testing.assert_allclose(jet.B, [[0.25]], atol=1e-14)


def test_inverse_residual_of_half_square():
    T = half_square_transition()
    assert T.inverse_residual([np.array([x]) for x in (-0.5, 0.0, 0.4, 2.0)]) <= 1e-12


def test_wrong_inverse_rejected():
    """Test that a G which does not undo F is refused at the point of use"""
    T = ChartTransition(SmoothMap.linear([[2.0]]), SmoothMap.linear([[0.6]]))
    with pytest.raises(InverseMismatchError) as info:
        transform_twojet(TwoJet([1.0], [[1.0]]), T, [0.3])
    assert info.value.residual > 1e-8

    gamma_psi = transformed_field(flat_christoffel(1), T)
    with pytest.raises(InverseMismatchError):
        gamma_psi([0.5], [1.0], [1.0])
