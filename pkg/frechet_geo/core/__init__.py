"""Core Modules"""

from .tower import Level, ConnectingMap, Tower, LevelFamilyMap, LevelFamilyBilinear
from .calculus import SmoothMap, BilinearMap
from .structures import ChristoffelField, ChartTransition, VectorField, ScalarField, TwoJet

__all__ = [
    "Level",
    "ConnectingMap",
    "Tower",
    "LevelFamilyMap",
    "LevelFamilyBilinear",
    "SmoothMap",
    "BilinearMap",
    "ChristoffelField",
    "ChartTransition",
    "VectorField",
    "ScalarField",
    "TwoJet",
]
