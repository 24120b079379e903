"""Second-order ODE engine: existence interval, Picard iteration, fixed-step RK4

Every second-order problem x'' = Phi(t, x, x') is reduced to the first-order
system z' = (y, Phi(t, x, y)) with z = (x, y).
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from frechet_geo.core.calculus import as_vector
from frechet_geo.errors import BlowUpError, ConvergenceError, DimensionMismatchError, UnboundedDataError
from frechet_geo.utils.logger import setup_logger

logger = setup_logger(__name__)

DEFAULT_SUP_GRID = 65
DEFAULT_PICARD_GRID = 128


@dataclass(frozen=True)
class SecondOrderRHS:
    """Phi(t, x, y) with a user-declared Lipschitz constant k"""
    phi: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    lipschitz_k: float
    dim: int

    def __post_init__(self):
        if self.lipschitz_k <= 0:
            raise ValueError(f"lipschitz_k must be positive, got {self.lipschitz_k}")

    def __call__(self, t: float, x, y) -> np.ndarray:
        return as_vector(self.phi(t, x, y))

    def first_order(self, t: float, z: np.ndarray) -> np.ndarray:
        """Phi~(t, z) = (y, Phi(t, x, y))"""
        x, y = z[:self.dim], z[self.dim:]
        return np.concatenate([y, self(t, x, y)])

    def spot_check_lipschitz(self, t: float = 0.0, probes: int = 16, seed: int = 42,
                             scale: float = 1.0) -> float:
        """
        Largest observed ratio |Phi(t, z1) - Phi(t, z2)| / |z1 - z2| on seeded samples

        A ratio above lipschitz_k is logged as a warning; the declared value is kept.
        """
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(probes):
            z1 = scale * rng.standard_normal(2 * self.dim)
            z2 = z1 + 1e-3 * scale * rng.standard_normal(2 * self.dim)
            num = np.linalg.norm(self(t, z1[:self.dim], z1[self.dim:]) - self(t, z2[:self.dim], z2[self.dim:]))
            worst = max(worst, float(num / np.linalg.norm(z1 - z2)))
        if worst > self.lipschitz_k:
            logger.warning(f"Declared Lipschitz constant {self.lipschitz_k} exceeded: observed {worst:.4g}")
        return worst


@dataclass
class Trajectory:
    """Time-stamped (position, velocity) states at one level or at the limit"""
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    level: Union[int, str] = "limit"
    residual: Optional[float] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).reshape(-1)
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[0] != self.times.size \
                or self.velocities.shape != self.positions.shape:
            raise DimensionMismatchError(
                f"Trajectory shapes disagree: {self.times.size} times, positions {self.positions.shape}, "
                f"velocities {self.velocities.shape}"
            )
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("Trajectory times must be strictly increasing")

    @classmethod
    def empty(cls, dim: int, level: Union[int, str] = "limit") -> "Trajectory":
        return cls(np.empty(0), np.empty((0, dim)), np.empty((0, dim)), level=level)

    def __len__(self) -> int:
        return self.times.size

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def final_position(self) -> np.ndarray:
        return self.positions[-1]

    @property
    def final_velocity(self) -> np.ndarray:
        return self.velocities[-1]


def euclidean_norm(x) -> float:
    return float(np.linalg.norm(x))


def existence_interval(rhs: SecondOrderRHS, t0: float, x0, y0, tau: float,
                       seminorms: Sequence[Callable[[np.ndarray], float]],
                       grid_points: int = DEFAULT_SUP_GRID) -> float:
    """
    Radius a = min(tau, 1 / (M + k)) of the guaranteed solution interval

    M is the sup over seminorms p and sampled t in [t0 - tau, t0 + tau] of
    (p(y0)^2 + p(Phi(t, x0, y0))^2)^(1/2).
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if not seminorms:
        raise ValueError("At least one seminorm is required")
    x0, y0 = as_vector(x0), as_vector(y0)

    M = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for t in np.linspace(t0 - tau, t0 + tau, grid_points):
            phi = rhs(t, x0, y0)
            for p in seminorms:
                value = float(np.hypot(p(y0), p(phi)))
                if not np.isfinite(value):
                    raise UnboundedDataError(f"Bound M is not finite at t={t}")
                M = max(M, value)

    a = min(tau, 1.0 / (M + rhs.lipschitz_k))
    logger.debug(f"Existence interval: M={M:.6g}, k={rhs.lipschitz_k}, a={a:.6g}")
    return a


def _picard_sweep(rhs: SecondOrderRHS, times: np.ndarray, z0: np.ndarray,
                  iters: int, tol: float) -> Tuple[np.ndarray, float]:
    """Picard iterates on one monotone grid starting at times[0]"""
    z = np.tile(z0, (times.size, 1))
    residual = np.inf
    for iteration in range(1, iters + 1):
        integrand = np.array([rhs.first_order(t, zt) for t, zt in zip(times, z)])
        updated = z0 + cumulative_trapezoid(integrand, times, axis=0, initial=0.0)
        residual = float(np.max(np.abs(updated - z)))
        z = updated
        if residual < tol:
            logger.debug(f"Picard converged after {iteration} iterations (residual {residual:.3e})")
            return z, residual
    raise ConvergenceError(
        f"Picard iteration did not converge in {iters} iterations (residual {residual:.3e})", residual
    )


def picard_solve(rhs: SecondOrderRHS, t0: float, x0, y0, a: float, iters: int = 60,
                 tol: float = 1e-12, grid: int = DEFAULT_PICARD_GRID,
                 two_sided: bool = False) -> Trajectory:
    """
    Successive approximations z_{n+1}(t) = z0 + int Phi~(s, z_n(s)) ds

    Args:
        rhs: Second-order right-hand side
        t0, x0, y0: Initial data
        a: Interval radius; the solution covers [t0, t0 + a] (and [t0 - a, t0] when two_sided)
        iters: Maximum number of iterations
        tol: Sup-distance between successive iterates that stops the iteration
        grid: Uniform nodes per side (composite trapezoid quadrature)
        two_sided: Also solve backwards to t0 - a

    Returns:
        Trajectory with the achieved residual
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if a <= 0 or grid < 2:
        raise ValueError("a must be positive and grid >= 2")
    x0, y0 = as_vector(x0), as_vector(y0)
    if x0.shape != (rhs.dim,) or y0.shape != (rhs.dim,):
        raise DimensionMismatchError(f"Initial data must have dim {rhs.dim}")

    bound = existence_interval(rhs, t0, x0, y0, a, [euclidean_norm])
    if a > bound:
        logger.warning(f"Picard interval {a:.4g} exceeds the guaranteed radius {bound:.4g}")

    z0 = np.concatenate([x0, y0])
    forward_times = np.linspace(t0, t0 + a, grid)
    forward, residual = _picard_sweep(rhs, forward_times, z0, iters, tol)
    times, states = forward_times, forward

    if two_sided:
        backward_times = np.linspace(t0, t0 - a, grid)
        backward, back_residual = _picard_sweep(rhs, backward_times, z0, iters, tol)
        times = np.concatenate([backward_times[:0:-1], forward_times])
        states = np.vstack([backward[:0:-1], forward])
        residual = max(residual, back_residual)

    return Trajectory(times, states[:, :rhs.dim], states[:, rhs.dim:], residual=residual)


def rk4_first_order(f: Callable[[float, np.ndarray], np.ndarray], t0: float, z0, t_end: float,
                    steps: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Classical fixed-step RK4 for z' = f(t, z)

    Returns:
        (times, states) with steps + 1 rows

    Raises:
        BlowUpError: first non-finite state, carrying the last finite one
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if t_end == t0:
        raise ValueError("t_end must differ from t0")
    times = np.linspace(t0, t_end, steps + 1)
    h = (t_end - t0) / steps
    z = as_vector(z0).copy()
    states = np.empty((steps + 1, z.size))
    states[0] = z

    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(steps):
            t = times[n]
            k1 = f(t, z)
            k2 = f(t + h / 2, z + h / 2 * k1)
            k3 = f(t + h / 2, z + h / 2 * k2)
            k4 = f(t + h, z + h * k3)
            candidate = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(candidate)):
                raise BlowUpError(f"Non-finite state at t={times[n + 1]:.6g}", time=float(t), state=z)
            z = candidate
            states[n + 1] = z

    logger.debug(f"RK4: {steps} steps on [{t0}, {t_end}]")
    return times, states


def rk4_integrate(rhs: SecondOrderRHS, t0: float, x0, y0, t_end: float, steps: int,
                  level: Union[int, str] = "limit") -> Trajectory:
    """RK4 on the first-order reduction of x'' = Phi(t, x, x')"""
    x0, y0 = as_vector(x0), as_vector(y0)
    if x0.shape != (rhs.dim,) or y0.shape != (rhs.dim,):
        raise DimensionMismatchError(f"Initial data must have dim {rhs.dim}")
    times, states = rk4_first_order(rhs.first_order, t0, np.concatenate([x0, y0]), t_end, steps)
    if t_end < t0:
        times, states = times[::-1], states[::-1]
    return Trajectory(times, states[:, :rhs.dim], states[:, rhs.dim:], level=level)
