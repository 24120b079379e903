"""Flat connection and the direct connection on matrix groups"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from frechet_geo.core.calculus import BilinearMap, as_vector
from frechet_geo.core.structures import ChristoffelField
from frechet_geo.errors import DimensionMismatchError, SingularPointError
from frechet_geo.utils.logger import setup_logger

logger = setup_logger(__name__)


def flat_christoffel(dim: int) -> ChristoffelField:
    """Gamma = 0 in the identity chart; geodesics are straight lines"""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    zero = BilinearMap.zero(dim)
    return ChristoffelField(gamma=lambda u: zero, dim=dim, chart_id="identity", symmetric=True)


def coordinatewise_christoffel(dim: int) -> ChristoffelField:
    """Gamma(u)(a, b) = a * b componentwise; commutes with coordinate truncation"""
    form = BilinearMap(lambda a, b: a * b, dim, dim, symmetric=True)
    return ChristoffelField(gamma=lambda u: form, dim=dim, chart_id="identity", symmetric=True)


@dataclass(frozen=True)
class MatrixGroupModel:
    """GL(n) in the global chart of matrix entries, flattened row-major"""
    n: int
    condition_limit: float = 1e12

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Matrix size must be >= 1, got {self.n}")

    @property
    def dim(self) -> int:
        return self.n * self.n

    def as_matrix(self, x) -> np.ndarray:
        x = as_vector(x)
        if x.size != self.dim:
            raise DimensionMismatchError(f"Expected {self.dim} entries for a {self.n}x{self.n} matrix")
        return x.reshape(self.n, self.n)

    def inverse(self, x) -> np.ndarray:
        X = self.as_matrix(x)
        condition = np.linalg.cond(X)
        if not np.isfinite(condition) or condition > self.condition_limit:
            raise SingularPointError(f"Matrix point is singular (condition estimate {condition:.3e})")
        return np.linalg.inv(X)


def direct_christoffel(model: MatrixGroupModel) -> ChristoffelField:
    """
    Gamma(x)(a, b) = a x^-1 b on flattened matrices

    The field is bilinear but not symmetric; its geodesics are x0 exp(t x0^-1 y0).
    """
    n = model.n

    def gamma(x):
        x_inv = model.inverse(x)
        return BilinearMap(
            lambda a, b: (a.reshape(n, n) @ x_inv @ b.reshape(n, n)).ravel(),
            model.dim, model.dim, symmetric=False,
        )

    return ChristoffelField(gamma=gamma, dim=model.dim, chart_id="entries", symmetric=False)


def direct_geodesic_exact(x0, y0, t: float) -> np.ndarray:
    """Closed-form geodesic x0 expm(t x0^-1 y0) of the direct connection"""
    X0 = np.atleast_2d(np.asarray(x0, dtype=float))
    Y0 = np.atleast_2d(np.asarray(y0, dtype=float))
    return X0 @ expm(t * np.linalg.solve(X0, Y0))
