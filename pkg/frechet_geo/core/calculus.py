"""Differentiation substrate: smooth maps, central differences, bilinear maps"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from frechet_geo.errors import DimensionMismatchError
from frechet_geo.utils.logger import setup_logger

logger = setup_logger(__name__)

MACHINE_EPS = np.finfo(float).eps
FIRST_ORDER_STEP = MACHINE_EPS ** (1.0 / 3.0)
SECOND_ORDER_STEP = MACHINE_EPS ** (1.0 / 4.0)


def as_vector(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SmoothMap:
    """
    A function with optional analytic first and second directional derivatives

    Attributes:
        eval: point -> value
        d1: (point, direction) -> value, used instead of central differences
        d2: (point, dir1, dir2) -> value
        domain_dim: Dimension of the points
        codomain_dim: Dimension of the values (1 for scalar fields)
        fd_scale: Multiplier of the finite-difference step
    """
    eval: Callable
    domain_dim: int
    codomain_dim: int
    d1: Optional[Callable] = None
    d2: Optional[Callable] = None
    fd_scale: float = 1.0

    def __post_init__(self):
        if self.fd_scale <= 0:
            raise ValueError(f"fd_scale must be positive, got {self.fd_scale}")

    def __call__(self, x):
        return self.eval(x)

    @classmethod
    def linear(cls, matrix) -> "SmoothMap":
        """x -> A x with exact derivatives"""
        A = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(
            eval=lambda x: A @ as_vector(x),
            d1=lambda x, v: A @ as_vector(v),
            d2=lambda x, v, w: np.zeros(A.shape[0]),
            domain_dim=A.shape[1],
            codomain_dim=A.shape[0],
        )

    @classmethod
    def constant(cls, value, domain_dim: int) -> "SmoothMap":
        value = as_vector(value)
        return cls(
            eval=lambda x: value.copy(),
            d1=lambda x, v: np.zeros_like(value),
            d2=lambda x, v, w: np.zeros_like(value),
            domain_dim=domain_dim,
            codomain_dim=value.size,
        )


def _check_point(f: SmoothMap, x) -> np.ndarray:
    x = as_vector(x)
    if x.shape != (f.domain_dim,):
        raise DimensionMismatchError(f"Point has shape {x.shape}, map expects ({f.domain_dim},)")
    return x


def _step(f: SmoothMap, x: np.ndarray, base: float) -> float:
    return f.fd_scale * max(1.0, float(np.linalg.norm(x))) * base


def directional_derivative(f: SmoothMap, x, v):
    """
    DF(x).v, analytic when available, otherwise a central difference

    Args:
        f: Smooth map
        x: Base point
        v: Direction

    Returns:
        Value with the codomain shape of f
    """
    x = _check_point(f, x)
    v = as_vector(v)
    if v.shape != x.shape:
        raise DimensionMismatchError(f"Direction has shape {v.shape}, expected {x.shape}")
    if f.d1 is not None:
        return np.asarray(f.d1(x, v), dtype=float)

    h = _step(f, x, FIRST_ORDER_STEP)
    forward = np.asarray(f(x + h * v), dtype=float)
    backward = np.asarray(f(x - h * v), dtype=float)
    return (forward - backward) / (2.0 * h)


def _raw_second(f: SmoothMap, x: np.ndarray, v: np.ndarray, w: np.ndarray, h: float):
    pp = np.asarray(f(x + h * v + h * w), dtype=float)
    pm = np.asarray(f(x + h * v - h * w), dtype=float)
    mp = np.asarray(f(x - h * v + h * w), dtype=float)
    mm = np.asarray(f(x - h * v - h * w), dtype=float)
    return (pp - pm - mp + mm) / (4.0 * h * h)


def second_derivative(f: SmoothMap, x, v, w):
    """
    D^2F(x)(v, w), always symmetrized so that swapping v and w is exact

    Args:
        f: Smooth map
        x: Base point
        v: First direction
        w: Second direction

    Returns:
        Value with the codomain shape of f
    """
    x = _check_point(f, x)
    v, w = as_vector(v), as_vector(w)
    if v.shape != x.shape or w.shape != x.shape:
        raise DimensionMismatchError("Directions must match the point dimension")

    if f.d2 is not None:
        vw = np.asarray(f.d2(x, v, w), dtype=float)
        wv = np.asarray(f.d2(x, w, v), dtype=float)
    else:
        h = _step(f, x, SECOND_ORDER_STEP)
        vw = _raw_second(f, x, v, w, h)
        wv = _raw_second(f, x, w, v, h)
    return (vw + wv) / 2.0


def jacobian(f: SmoothMap, x) -> np.ndarray:
    """DF(x) as a (codomain_dim, domain_dim) matrix"""
    x = _check_point(f, x)
    basis = np.eye(f.domain_dim)
    columns = [np.atleast_1d(directional_derivative(f, x, e)) for e in basis]
    return np.column_stack(columns)


def second_derivative_tensor(f: SmoothMap, x) -> np.ndarray:
    """D^2F(x) as a tensor H[k, i, j] = D^2F(x)(e_i, e_j)_k"""
    x = _check_point(f, x)
    n = f.domain_dim
    basis = np.eye(n)
    H = np.zeros((f.codomain_dim, n, n))
    for i in range(n):
        for j in range(i, n):
            value = np.atleast_1d(second_derivative(f, x, basis[i], basis[j]))
            H[:, i, j] = value
            H[:, j, i] = value
    return H


def polarize(Q: Callable, v, w):
    """
    Recover B(v, w) from the diagonal Q(v) = B(v, v) of a symmetric bilinear map

    Returns:
        1/2 (Q(v + w) - (Q(v) + Q(w)))
    """
    v, w = as_vector(v), as_vector(w)
    qs = np.asarray(Q(v + w), dtype=float)
    qv = np.asarray(Q(v), dtype=float)
    qw = np.asarray(Q(w), dtype=float)
    return 0.5 * (qs - (qv + qw))


@dataclass(frozen=True)
class BilinearMap:
    """Bilinear map E x E -> F given by a callable"""
    apply: Callable
    in_dim: int
    out_dim: int
    symmetric: bool = False

    def __call__(self, v, w) -> np.ndarray:
        return np.asarray(self.apply(as_vector(v), as_vector(w)), dtype=float)

    @classmethod
    def from_tensor(cls, tensor, symmetric: Optional[bool] = None) -> "BilinearMap":
        """out_k = sum_ij T[k, i, j] v_i w_j"""
        T = np.asarray(tensor, dtype=float)
        if T.ndim != 3 or T.shape[1] != T.shape[2]:
            raise DimensionMismatchError(f"Bilinear tensor must have shape (m, n, n), got {T.shape}")
        if symmetric is None:
            symmetric = bool(np.allclose(T, T.transpose(0, 2, 1), rtol=0.0, atol=1e-14))
        return cls(
            apply=lambda v, w: np.einsum("kij,i,j->k", T, v, w),
            in_dim=T.shape[1],
            out_dim=T.shape[0],
            symmetric=symmetric,
        )

    @classmethod
    def zero(cls, in_dim: int, out_dim: Optional[int] = None) -> "BilinearMap":
        out_dim = in_dim if out_dim is None else out_dim
        return cls(lambda v, w: np.zeros(out_dim), in_dim, out_dim, symmetric=True)

    def to_tensor(self) -> np.ndarray:
        basis = np.eye(self.in_dim)
        T = np.zeros((self.out_dim, self.in_dim, self.in_dim))
        for i in range(self.in_dim):
            for j in range(self.in_dim):
                T[:, i, j] = self(basis[i], basis[j])
        return T

    def symmetrized(self) -> "BilinearMap":
        return BilinearMap(
            lambda v, w: 0.5 * (self(v, w) + self(w, v)),
            self.in_dim, self.out_dim, symmetric=True,
        )


def check_bilinearity(B: BilinearMap, probes: int = 16,
                      rng: Optional[np.random.Generator] = None) -> float:
    """
    Largest additivity/homogeneity defect of B over random probes

    Returns:
        max over probes of the residual norms, relative to 1 + |B(v, w)|
    """
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for _ in range(probes):
        v1, v2, w = (rng.standard_normal(B.in_dim) for _ in range(3))
        alpha, beta = rng.standard_normal(2)
        reference = B(alpha * v1 + beta * v2, w)
        expected = alpha * B(v1, w) + beta * B(v2, w)
        left = float(np.linalg.norm(reference - expected)) / (1.0 + float(np.linalg.norm(reference)))

        reference = B(w, alpha * v1 + beta * v2)
        expected = alpha * B(w, v1) + beta * B(w, v2)
        right = float(np.linalg.norm(reference - expected)) / (1.0 + float(np.linalg.norm(reference)))
        worst = max(worst, left, right)

    if B.symmetric:
        for _ in range(probes):
            v, w = rng.standard_normal(B.in_dim), rng.standard_normal(B.in_dim)
            worst = max(worst, float(np.linalg.norm(B(v, w) - B(w, v))))
    return worst
