"""ODE Solvers"""

from .integrators import SecondOrderRHS, Trajectory, existence_interval, picard_solve, rk4_integrate
from .geodesic import geodesic, parallel_transport, tower_geodesic

__all__ = [
    "SecondOrderRHS",
    "Trajectory",
    "existence_interval",
    "picard_solve",
    "rk4_integrate",
    "geodesic",
    "parallel_transport",
    "tower_geodesic",
]
