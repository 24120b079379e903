"""Test geodesics, parallel transport and tower integration"""

import math

import numpy as np
import pytest

from frechet_geo.core.calculus import BilinearMap
from frechet_geo.core.structures import ChristoffelField
from frechet_geo.core.tower import truncation_tower
from frechet_geo.errors import DimensionMismatchError
from frechet_geo.models.connections import coordinatewise_christoffel, flat_christoffel
from frechet_geo.solvers.geodesic import (
    Curve,
    check_christoffel_family,
    geodesic,
    geodesic_existence_interval,
    geodesic_transport,
    integrate_tower,
    level_residuals,
    parallel_transport,
    tower_geodesic,
    tower_parallel_transport,
)
from frechet_geo.solvers.integrators import Trajectory


def damping_field() -> ChristoffelField:
    """Constant 1-D field Gamma(a, b) = -a b: geodesics x(t) = log(1 + t) for x0 = 0, y0 = 1"""
    form = BilinearMap(lambda a, b: -a * b, 1, 1, symmetric=True)
    return ChristoffelField(lambda u: form, 1, symmetric=True)


def test_flat_geodesic_is_straight_line():
    """Test x(t) = p + t v for the flat connection"""
    p, v = np.array([1.0, -2.0, 0.5]), np.array([0.5, 0.25, -1.0])
    trajectory = geodesic(flat_christoffel(3), p, v, 2.0, 100)
    expected = p + np.outer(trajectory.times, v)
    np.testing.assert_allclose(trajectory.positions, expected, atol=1e-12)
    np.testing.assert_allclose(trajectory.velocities, np.tile(v, (101, 1)), atol=1e-12)


def test_nonlinear_geodesic():
    """Test y' = -y^2 against log(1 + t)"""
    trajectory = geodesic(damping_field(), [0.0], [1.0], 1.0, 1000)
    assert trajectory.final_position[0] == pytest.approx(math.log(2.0), abs=1e-10)


def test_geodesic_dimension_checked():
    with pytest.raises(DimensionMismatchError):
        geodesic(flat_christoffel(2), [0.0], [1.0], 1.0, 10)


def test_flat_transport_is_identity():
    """Test parallel transport of the flat connection along a circle"""
    curve = Curve(lambda t: np.array([math.cos(t), math.sin(t)]), 0.0, 2.0,
                  lambda t: np.array([-math.sin(t), math.cos(t)]))
    path = parallel_transport(flat_christoffel(2), curve, [0.3, -0.7], steps=200)
    np.testing.assert_allclose(path.vectors, np.tile([0.3, -0.7], (201, 1)), atol=1e-12)


def test_exponential_transport():
    """Test Gamma(a, b) = a b along c(t) = t gives u0 e^t"""
    curve = Curve(lambda t: np.array([t]), 0.0, 1.0, lambda t: np.array([1.0]))
    path = parallel_transport(coordinatewise_christoffel(1), curve, [2.0], steps=1000)
    assert path.final_vector[0] == pytest.approx(2.0 * math.e, abs=1e-8)


def test_transport_without_velocity_closure():
    """Test central-difference velocities of a curve"""
    curve = Curve(lambda t: np.array([t]), 0.0, 1.0)
    path = parallel_transport(coordinatewise_christoffel(1), curve, [1.0], steps=1000)
    assert path.final_vector[0] == pytest.approx(math.e, abs=1e-7)


def test_transport_is_linear():
    """Test T(a u + b w) = a T(u) + b T(w)"""
    rng = np.random.default_rng(11)
    gamma = coordinatewise_christoffel(3)
    curve = Curve(lambda t: np.array([t, t * t, math.sin(t)]), 0.0, 1.0,
                  lambda t: np.array([1.0, 2.0 * t, math.cos(t)]))
    u, w = rng.standard_normal(3), rng.standard_normal(3)
    combined = parallel_transport(gamma, curve, 2.0 * u - 3.0 * w, steps=400).final_vector
    separate = (2.0 * parallel_transport(gamma, curve, u, steps=400).final_vector
                - 3.0 * parallel_transport(gamma, curve, w, steps=400).final_vector)
    np.testing.assert_allclose(combined, separate, atol=1e-9)


def test_transport_along_sampled_trajectory():
    """Test transport along a Hermite-interpolated geodesic"""
    trajectory = geodesic(flat_christoffel(2), [0.0, 0.0], [1.0, 1.0], 1.0, 50)
    path = parallel_transport(coordinatewise_christoffel(2), trajectory, [1.0, 1.0])
    assert len(path.times) == 51
    np.testing.assert_allclose(path.final_vector, [math.e, math.e], rtol=1e-6)


def test_curve_from_samples_needs_two_points():
    with pytest.raises(ValueError):
        Curve.from_samples([0.0], [[0.0]])


def test_transport_vector_dimension_checked():
    curve = Curve(lambda t: np.array([t]), 0.0, 1.0)
    with pytest.raises(DimensionMismatchError):
        parallel_transport(flat_christoffel(1), curve, [1.0, 2.0])


def test_geodesic_transport_joint_system():
    """Test the joint system reproduces the separate geodesic"""
    gamma = damping_field()
    trajectory, path = geodesic_transport(gamma, [0.0], [1.0], [1.0], 1.0, 1000)
    alone = geodesic(gamma, [0.0], [1.0], 1.0, 1000)
    np.testing.assert_allclose(trajectory.positions, alone.positions, atol=1e-14)
    # u' = -y u with y = 1 / (1 + t) gives u = 1 / (1 + t)
    assert path.final_vector[0] == pytest.approx(0.5, abs=1e-10)


def test_level_residuals_rows():
    """Test one row per time and level pair"""
    tower = truncation_tower([1, 2])
    series = {0: np.array([[1.0], [2.0]]), 1: np.array([[1.0, 5.0], [2.5, 5.0]])}
    rows = level_residuals(series, np.array([0.0, 1.0]), tower)
    assert [(row.j, row.i) for row in rows] == [(1, 0), (1, 0)]
    assert rows[0].residual == 0.0
    assert rows[1].residual == pytest.approx(0.5)


def test_tower_geodesic_flat():
    """Test that flat geodesics commute with the projections"""
    tower = truncation_tower([1, 2, 3])
    gammas = {level.index: flat_christoffel(level.dim) for level in tower.levels}
    result = tower_geodesic(gammas, tower, [1.0, 2.0, 3.0], [0.5, -0.5, 1.0], 1.0, 100)
    assert sorted(result.trajectories) == [0, 1, 2]
    assert result.max_residual <= 1e-9
    assert result.warnings == []


def test_tower_geodesic_coordinatewise():
    """Test y' = y^2 coordinatewise on a truncation tower"""
    tower = truncation_tower([1, 2, 4])
    gammas = {level.index: coordinatewise_christoffel(level.dim) for level in tower.levels}
    result = tower_geodesic(gammas, tower, np.zeros(4), [0.3, -0.2, 0.1, 0.4], 1.0, 500)
    assert result.max_residual <= 1e-9
    # y = y0 / (1 - y0 t), x = -log(1 - y0 t)
    assert result.trajectories[0].final_position[0] == pytest.approx(-math.log(0.7), abs=1e-9)


def test_tower_geodesic_incompatible_family_warns():
    """Test that an incompatible family yields a warning and nonzero residuals"""
    tower = truncation_tower([1, 2])
    mixing = BilinearMap(lambda a, b: np.array([a[1] * b[1], 0.0]), 2, 2, symmetric=True)
    gammas = {0: flat_christoffel(1), 1: ChristoffelField(lambda u: mixing, 2, symmetric=True)}
    result = tower_geodesic(gammas, tower, [0.0, 0.0], [0.0, 1.0], 1.0, 100)
    assert len(result.warnings) == 1
    assert result.max_residual == pytest.approx(0.5, abs=1e-9)


def test_check_christoffel_family():
    tower = truncation_tower([1, 3])
    gammas = {level.index: coordinatewise_christoffel(level.dim) for level in tower.levels}
    assert check_christoffel_family(gammas, tower) <= 1e-14


def test_integrate_tower_requires_shared_grid():
    """Test that levels on different time grids are rejected"""
    tower = truncation_tower([1, 2])

    def solve_level(level, xi, yi):
        steps = 10 if level.index == 0 else 20
        return geodesic(flat_christoffel(level.dim), xi, yi, 1.0, steps, level=level.index)

    with pytest.raises(DimensionMismatchError):
        integrate_tower(solve_level, tower, [0.0, 0.0], [1.0, 1.0])


def test_integrate_tower_custom_solver():
    """Test the generic driver with a hand-written per-level solver"""
    tower = truncation_tower([1, 2])

    def solve_level(level, xi, yi):
        times = np.array([0.0, 1.0])
        return Trajectory(times, np.vstack([xi, xi + yi]), np.vstack([yi, yi]), level=level.index)

    result = integrate_tower(solve_level, tower, [1.0, 2.0], [3.0, 4.0])
    np.testing.assert_array_equal(result.trajectories[1].final_position, [4.0, 6.0])
    assert result.max_residual == 0.0


def test_tower_parallel_transport():
    """Test transported vectors commute with the projections"""
    tower = truncation_tower([1, 2])
    gammas = {level.index: coordinatewise_christoffel(level.dim) for level in tower.levels}
    result = tower_parallel_transport(gammas, tower, [0.0, 0.0], [0.2, 0.1], [1.0, -1.0], 1.0, 200)
    assert sorted(result.paths) == [0, 1]
    assert result.max_residual <= 1e-12


def test_geodesic_existence_interval_flat():
    """Test a = min(tau, 1 / (M + k)) with M = |y0| at the top level"""
    tower = truncation_tower([1, 2])
    gammas = {level.index: flat_christoffel(level.dim) for level in tower.levels}
    report = geodesic_existence_interval(gammas, tower, [0.0, 0.0], [3.0, 4.0], 1.0, 10.0)
    assert report.per_level_M == pytest.approx({0: 3.0, 1: 5.0})
    assert report.a == pytest.approx(1.0 / 6.0)
    assert report.growing


def test_geodesic_existence_interval_constant_bound():
    tower = truncation_tower([1, 2])
    gammas = {level.index: flat_christoffel(level.dim) for level in tower.levels}
    report = geodesic_existence_interval(gammas, tower, [0.0, 0.0], [3.0, 0.0], 1.0, 0.1)
    assert report.a == pytest.approx(0.1)
    assert not report.growing


def test_geodesic_transport_backward_grid():
    """Test that integrating towards an earlier time returns increasing times"""
    gamma = damping_field()
    trajectory, path = geodesic_transport(gamma, [0.0], [1.0], [1.0], -0.5, 500)
    backward = geodesic(gamma, [0.0], [1.0], -0.5, 500)
    assert np.all(np.diff(trajectory.times) > 0)
    np.testing.assert_allclose(trajectory.positions, backward.positions, atol=1e-14)
    # x = log(1 + t), u = 1 / (1 + t) on t in [-0.5, 0]
    assert trajectory.positions[0, 0] == pytest.approx(math.log(0.5), abs=1e-9)
    assert path.vectors[0, 0] == pytest.approx(2.0, abs=1e-9)
