"""Polynomial Christoffel fields and polynomial smooth maps

A polynomial field has degree <= 2 in the base point:

    Gamma(u)[k, i, j] = C0[k, i, j] + C1[k, i, j, l] u_l + C2[k, i, j, l, m] u_l u_m
"""

from typing import Optional

import numpy as np

from frechet_geo.core.calculus import SmoothMap, as_vector
from frechet_geo.core.structures import ChristoffelField
from frechet_geo.errors import DimensionMismatchError


def _symmetrize_ij(tensor: np.ndarray) -> np.ndarray:
    axes = list(range(tensor.ndim))
    axes[1], axes[2] = axes[2], axes[1]
    return 0.5 * (tensor + tensor.transpose(axes))


def polynomial_christoffel(c0, c1=None, c2=None, symmetric: bool = False,
                           chart_id: str = "phi") -> ChristoffelField:
    """
    Christoffel field from coefficient tables

    Args:
        c0: Constant part, shape (d, d, d)
        c1: Linear part, shape (d, d, d, d)
        c2: Quadratic part, shape (d, d, d, d, d)
        symmetric: Symmetrize in the two bilinear slots before use

    Returns:
        ChristoffelField of dimension d
    """
    c0 = np.asarray(c0, dtype=float)
    if c0.ndim != 3 or len(set(c0.shape)) != 1:
        raise DimensionMismatchError(f"c0 must have shape (d, d, d), got {c0.shape}")
    d = c0.shape[0]
    c1 = np.zeros((d,) * 4) if c1 is None else np.asarray(c1, dtype=float)
    c2 = np.zeros((d,) * 5) if c2 is None else np.asarray(c2, dtype=float)
    if c1.shape != (d,) * 4 or c2.shape != (d,) * 5:
        raise DimensionMismatchError(f"c1/c2 must have shapes {(d,) * 4} and {(d,) * 5}")
    if symmetric:
        c0, c1, c2 = (_symmetrize_ij(c) for c in (c0, c1, c2))

    def tensor(u):
        u = as_vector(u)
        return c0 + np.einsum("kijl,l->kij", c1, u) + np.einsum("kijlm,l,m->kij", c2, u, u)

    return ChristoffelField.from_tensor_function(tensor, d, chart_id=chart_id, symmetric=symmetric)


def random_polynomial_christoffel(dim: int, rng: np.random.Generator, symmetric: bool = True,
                                  scale: float = 0.5) -> ChristoffelField:
    """Seeded random polynomial field with coefficients of size ~scale"""
    c0 = scale * rng.standard_normal((dim,) * 3)
    c1 = scale * rng.standard_normal((dim,) * 4)
    c2 = scale * rng.standard_normal((dim,) * 5)
    return polynomial_christoffel(c0, c1, c2, symmetric=symmetric)


def quadratic_map(constant, linear, quadratic) -> SmoothMap:
    """
    f(x) = c + L x + 1/2 Q(x, x) with analytic derivatives

    Args:
        constant: Shape (m,)
        linear: Shape (m, n)
        quadratic: Shape (m, n, n), symmetrized in its last two axes
    """
    c = as_vector(constant)
    L = np.atleast_2d(np.asarray(linear, dtype=float))
    Q = _symmetrize_ij(np.asarray(quadratic, dtype=float))
    if L.shape[0] != c.size or Q.shape != (c.size, L.shape[1], L.shape[1]):
        raise DimensionMismatchError("Inconsistent quadratic map coefficient shapes")

    return SmoothMap(
        eval=lambda x: c + L @ x + 0.5 * np.einsum("kij,i,j->k", Q, x, x),
        d1=lambda x, v: L @ v + np.einsum("kij,i,j->k", Q, x, v),
        d2=lambda x, v, w: np.einsum("kij,i,j->k", Q, v, w),
        domain_dim=L.shape[1],
        codomain_dim=c.size,
    )


def random_quadratic_map(dim_in: int, dim_out: int, rng: np.random.Generator,
                         scale: float = 0.5, analytic: bool = True) -> SmoothMap:
    """Seeded random polynomial map of degree <= 2; analytic=False drops d1/d2"""
    f = quadratic_map(
        scale * rng.standard_normal(dim_out),
        scale * rng.standard_normal((dim_out, dim_in)),
        scale * rng.standard_normal((dim_out, dim_in, dim_in)),
    )
    if analytic:
        return f
    return SmoothMap(eval=f.eval, domain_dim=f.domain_dim, codomain_dim=f.codomain_dim)


def coefficient_table(values, dim: int, order: int) -> Optional[np.ndarray]:
    """Reshape a row-major coefficient list into a tensor with `order` axes of size dim"""
    if values is None:
        return None
    array = np.asarray(values, dtype=float)
    expected = dim ** order
    if array.size != expected:
        raise DimensionMismatchError(f"Expected {expected} coefficients for order {order}, got {array.size}")
    return array.reshape((dim,) * order)
