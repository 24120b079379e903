"""Exception hierarchy shared by all modules"""

from typing import Optional

import numpy as np


class FrechetGeoError(Exception):
    """Base class for every error raised by the package"""


class DimensionMismatchError(FrechetGeoError, ValueError):
    """A vector, matrix or map does not have the expected shape"""


class LevelIndexError(FrechetGeoError, IndexError):
    """A tower level index is unknown or the pair (j, i) has i > j"""


class TowerError(FrechetGeoError):
    """A tower description violates its structural invariants"""


class NotSymmetricError(FrechetGeoError):
    """A symmetric Christoffel field was required"""


class NotQuadraticError(FrechetGeoError):
    """A spray fiber part failed the homogeneity probe Q(u, 2v) = 4 Q(u, v)"""


class SingularTransitionError(FrechetGeoError):
    """DF(u) of a chart transition is singular or too ill-conditioned"""


class MissingInverseError(FrechetGeoError):
    """The operation needs the inverse chart G but none was supplied"""


class InverseMismatchError(FrechetGeoError):
    """The supplied G does not invert F: |G(F(u)) - u| exceeds the tolerance"""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class SingularPointError(FrechetGeoError):
    """A matrix-group point is not safely invertible"""


class UnboundedDataError(FrechetGeoError):
    """The bound M of the existence interval is not finite"""


class ConvergenceError(FrechetGeoError):
    """Picard iteration did not reach its tolerance"""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class BlowUpError(FrechetGeoError):
    """The integrator produced a non-finite state"""

    def __init__(self, message: str, time: float, state: Optional[np.ndarray] = None):
        super().__init__(message)
        self.time = time
        self.state = state


class ConfigError(FrechetGeoError):
    """A configuration document is malformed or violates the schema"""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field
