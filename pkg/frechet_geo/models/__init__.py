"""Concrete Models"""

from .connections import flat_christoffel, direct_christoffel, MatrixGroupModel
from .spectral import ChModel, SpectralState

__all__ = ["flat_christoffel", "direct_christoffel", "MatrixGroupModel", "ChModel", "SpectralState"]
