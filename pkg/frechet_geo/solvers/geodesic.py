"""Geodesics, parallel transport and their tower-wide versions"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from frechet_geo.core.calculus import FIRST_ORDER_STEP, as_vector
from frechet_geo.core.structures import ChristoffelField
from frechet_geo.core.tower import Level, ProbeSampler, Tower, project_element, seminorm
from frechet_geo.errors import DimensionMismatchError
from frechet_geo.solvers.integrators import SecondOrderRHS, Trajectory, rk4_first_order, rk4_integrate
from frechet_geo.utils.logger import setup_logger

logger = setup_logger(__name__)


def geodesic_rhs(gamma: ChristoffelField, lipschitz_k: float = 1.0) -> SecondOrderRHS:
    """Phi(t, x, y) = Gamma(x)(y, y)"""
    return SecondOrderRHS(lambda t, x, y: gamma(x, y, y), lipschitz_k, gamma.dim)


def geodesic(gamma: ChristoffelField, x0, y0, t_end: float, steps: int, t0: float = 0.0,
             level: Union[int, str] = "limit") -> Trajectory:
    """Integrate gamma'' = Gamma(gamma)(gamma', gamma') with RK4"""
    return rk4_integrate(geodesic_rhs(gamma), t0, x0, y0, t_end, steps, level=level)


@dataclass(frozen=True)
class Curve:
    """Curve c on [t0, t1] with an optional velocity closure"""
    position: Callable[[float], np.ndarray]
    t0: float
    t1: float
    velocity: Optional[Callable[[float], np.ndarray]] = None

    @classmethod
    def from_samples(cls, times, positions, velocities=None) -> "Curve":
        """Cubic Hermite curve through samples; velocities default to central differences"""
        times = np.asarray(times, dtype=float)
        positions = np.asarray(positions, dtype=float)
        if times.size < 2:
            raise ValueError("A sampled curve needs at least two samples")
        if velocities is None:
            velocities = np.gradient(positions, times, axis=0)
        spline = CubicHermiteSpline(times, positions, np.asarray(velocities, dtype=float), axis=0)
        return cls(spline, float(times[0]), float(times[-1]), spline.derivative())

    @classmethod
    def from_trajectory(cls, trajectory: Trajectory) -> "Curve":
        return cls.from_samples(trajectory.times, trajectory.positions, trajectory.velocities)

    def at(self, t: float) -> np.ndarray:
        return as_vector(self.position(t))

    def velocity_at(self, t: float) -> np.ndarray:
        if self.velocity is not None:
            return as_vector(self.velocity(t))
        h = FIRST_ORDER_STEP * max(1.0, abs(t))
        return (self.at(t + h) - self.at(t - h)) / (2.0 * h)


@dataclass
class TransportPath:
    """Vectors transported along a curve"""
    times: np.ndarray
    vectors: np.ndarray
    level: Union[int, str] = "limit"

    @property
    def final_vector(self) -> np.ndarray:
        return self.vectors[-1]


def parallel_transport(gamma: ChristoffelField, curve: Union[Curve, Trajectory], u0,
                       steps: Optional[int] = None) -> TransportPath:
    """
    Solve gamma' = Gamma(c)(c', gamma), gamma(t0) = u0 along the curve with RK4

    Args:
        gamma: Christoffel field
        curve: Curve closure or a sampled Trajectory
        u0: Initial vector
        steps: RK4 steps (defaults to the sample count of a trajectory, else 1000)
    """
    if isinstance(curve, Trajectory):
        steps = steps or len(curve) - 1
        curve = Curve.from_trajectory(curve)
    steps = steps or 1000
    u0 = as_vector(u0)
    if u0.shape != (gamma.dim,):
        raise DimensionMismatchError(f"Initial vector has shape {u0.shape}, expected ({gamma.dim},)")

    def rhs(t, v):
        return gamma(curve.at(t), curve.velocity_at(t), v)

    times, vectors = rk4_first_order(rhs, curve.t0, u0, curve.t1, steps)
    return TransportPath(times, vectors)


def geodesic_transport(gamma: ChristoffelField, x0, y0, u0, t_end: float, steps: int,
                       t0: float = 0.0, level: Union[int, str] = "limit"):
    """
    Geodesic and a vector transported along it, integrated as one system

    Returns:
        (Trajectory, TransportPath) on the same time grid
    """
    x0, y0, u0 = as_vector(x0), as_vector(y0), as_vector(u0)
    n = gamma.dim

    def rhs(t, z):
        x, y, v = z[:n], z[n:2 * n], z[2 * n:]
        at_x = gamma.at(x)
        return np.concatenate([y, at_x(y, y), at_x(y, v)])

    times, states = rk4_first_order(rhs, t0, np.concatenate([x0, y0, u0]), t_end, steps)
    if t_end < t0:
        times, states = times[::-1], states[::-1]
    trajectory =Trajectory(times, states[:, :n], states[:, n:2 * n], level=level)
    return trajectory, TransportPath(times, states[:, 2 * n:], level=level)


class ResidualRow(NamedTuple):
    t: float
    j: int
    i: int
    residual: float


def level_residuals(series: Mapping[int, np.ndarray], times: np.ndarray, tower: Tower) -> List[ResidualRow]:
    """|rho_{ji}(s_j(t)) - s_i(t)| for every level pair j > i and every time"""
    rows = []
    indices = sorted(series)
    for n, t in enumerate(times):
        for pos, j in enumerate(indices):
            for i in indices[:pos]:
                projected = project_element(series[j][n], j, i, tower)
                rows.append(ResidualRow(float(t), j, i, float(np.linalg.norm(projected - series[i][n]))))
    return rows


@dataclass
class TowerTrajectory:
    """Per-level trajectories on a shared grid plus projection residuals"""
    trajectories: Dict[int, Trajectory]
    residuals: List[ResidualRow]
    warnings: List[str] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max((row.residual for row in self.residuals), default=0.0)


@dataclass
class TowerTransport:
    """Per-level transported vectors plus projection residuals"""
    paths: Dict[int, TransportPath]
    residuals: List[ResidualRow]
    warnings: List[str] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max((row.residual for row in self.residuals), default=0.0)


def _run_levels(tower: Tower, task: Callable[[Level], object], max_workers: Optional[int]) -> Dict[int, object]:
    """Run independent per-level tasks concurrently; results keyed by level index"""
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(task, tower.levels))
    return {level.index: result for level, result in zip(tower.levels, results)}


def integrate_tower(solve_level: Callable[[Level, np.ndarray, np.ndarray], Trajectory], tower: Tower,
                    x0, y0, max_workers: Optional[int] = None) -> TowerTrajectory:
    """
    Integrate every level from projected top-level data and compare projections

    Args:
        solve_level: (level, x0_i, y0_i) -> Trajectory
        tower: Tower of levels
        x0, y0: Initial data at the deepest level
        max_workers: Thread pool size (None lets the executor decide)
    """
    top = tower.top.index

    def task(level: Level) -> Trajectory:
        xi = project_element(x0, top, level.index, tower)
        yi = project_element(y0, top, level.index, tower)
        return solve_level(level, xi, yi)

    trajectories = _run_levels(tower, task, max_workers)
    times = trajectories[top].times
    for index, trajectory in trajectories.items():
        if not np.array_equal(trajectory.times, times):
            raise DimensionMismatchError(f"Level {index} does not share the time grid")

    residuals = level_residuals({idx: tr.positions for idx, tr in trajectories.items()}, times, tower)
    result = TowerTrajectory(trajectories, residuals)
    logger.info(f"Tower integration: {len(tower.levels)} levels, max residual {result.max_residual:.3e}")
    return result


def check_christoffel_family(gammas: Mapping[int, ChristoffelField], tower: Tower, probes: int = 8,
                             seed: int = 42, sampler: Optional[ProbeSampler] = None) -> float:
    """Largest |rho Gamma_j(x)(a, b) - Gamma_i(rho x)(rho a, rho b)| over probes"""
    rng = np.random.default_rng(seed)
    sampler = sampler or (lambda r, level: r.standard_normal(level.dim))
    worst = 0.0
    for j_level in tower.levels:
        for _ in range(probes):
            x, a, b = (as_vector(sampler(rng, j_level)) for _ in range(3))
            value = gammas[j_level.index](x, a, b)
            for i_level in tower.levels:
                if i_level.index >= j_level.index:
                    break
                rho = tower.connecting_matrix(j_level.index, i_level.index)
                other = gammas[i_level.index](rho @ x, rho @ a, rho @ b)
                worst = max(worst, float(np.linalg.norm(rho @ value - other)))
    return worst


def _compatibility_warning(gammas, tower, probes, tol, seed) -> List[str]:
    incompatibility = check_christoffel_family(gammas, tower, probes, seed)
    if incompatibility > tol:
        message = f"Christoffel family is not compatible with the tower (residual {incompatibility:.3e})"
        logger.warning(message)
        return [message]
    return []


def tower_geodesic(gammas: Mapping[int, ChristoffelField], tower: Tower, x0, y0, t_end: float,
                   steps: int, t0: float = 0.0, probes: int = 8, tol: float = 1e-8, seed: int = 42,
                   max_workers: Optional[int] = None) -> TowerTrajectory:
    """
    Geodesics at every level from projected initial data

    An incompatible family only attaches a warning; residuals are reported regardless.
    """
    warnings = _compatibility_warning(gammas, tower, probes, tol, seed)

    def solve_level(level: Level, xi, yi) -> Trajectory:
        return geodesic(gammas[level.index], xi, yi, t_end, steps, t0=t0, level=level.index)

    result = integrate_tower(solve_level, tower, x0, y0, max_workers)
    result.warnings.extend(warnings)
    return result


def tower_parallel_transport(gammas: Mapping[int, ChristoffelField], tower: Tower, x0, y0, u0,
                             t_end: float, steps: int, t0: float = 0.0, probes: int = 8,
                             tol: float = 1e-8, seed: int = 42,
                             max_workers: Optional[int] = None) -> TowerTransport:
    """Transport projected u0 along each level's geodesic and compare projections"""
    warnings = _compatibility_warning(gammas, tower, probes, tol, seed)
    top = tower.top.index

    def task(level: Level) -> TransportPath:
        data = (project_element(v, top, level.index, tower) for v in (x0, y0, u0))
        _, path = geodesic_transport(gammas[level.index], *data, t_end, steps, t0=t0, level=level.index)
        return path

    paths = _run_levels(tower, task, max_workers)
    times = paths[top].times
    residuals = level_residuals({idx: path.vectors for idx, path in paths.items()}, times, tower)
    return TowerTransport(paths, residuals, warnings)


@dataclass
class TowerExistenceReport:
    """Level-independent existence radius and the per-level bounds behind it"""
    a: float
    per_level_M: Dict[int, float]
    growing: bool


def geodesic_existence_interval(gammas: Mapping[int, ChristoffelField], tower: Tower, x0, y0,
                                lipschitz_k: float, tau: float) -> TowerExistenceReport:
    """
    a = min(tau, 1 / (M + k)) with M = sup_i (p_i(y0_i)^2 + p_i(Gamma_i(x0_i)(y0_i, y0_i))^2)^(1/2)

    A bound that grows at every level of the tower is flagged, since the sup
    over an infinite tower could then diverge.
    """
    if tau <= 0 or lipschitz_k <= 0:
        raise ValueError("tau and lipschitz_k must be positive")
    top = tower.top.index
    per_level = {}
    for level in tower.levels:
        xi = project_element(x0, top, level.index, tower)
        yi = project_element(y0, top, level.index, tower)
        accel = gammas[level.index](xi, yi, yi)
        per_level[level.index] = float(np.hypot(seminorm(yi, level.index, tower),
                                                seminorm(accel, level.index, tower)))

    bounds = [per_level[idx] for idx in tower.indices]
    growing = len(bounds) > 1 and all(b > a for a, b in zip(bounds, bounds[1:]))
    if growing:
        logger.warning("Existence bound M grows at every level; the limit bound may diverge")
    M = max(bounds)
    return TowerExistenceReport(min(tau, 1.0 / (M + lipschitz_k)), per_level, growing)
