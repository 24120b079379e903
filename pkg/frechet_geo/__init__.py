"""Frechet Geo - Christoffel structures, geodesics and parallel transport on projective towers"""

__version__ = "0.1.0"

from .core.tower import Level, ConnectingMap, Tower, truncation_tower
from .core.calculus import SmoothMap, BilinearMap
from .core.structures import ChristoffelField, ChartTransition
from .solvers.integrators import Trajectory
from .builder import CsvBuilder, emit_csv

__all__ = [
    "Level",
    "ConnectingMap",
    "Tower",
    "truncation_tower",
    "SmoothMap",
    "BilinearMap",
    "ChristoffelField",
    "ChartTransition",
    "Trajectory",
    "CsvBuilder",
    "emit_csv",
]
