"""Second-order structures derived from a Christoffel field

The Christoffel field Gamma_phi: u -> L^2(E, E) is the single source of truth.
Connections, Hessians, sprays and dissections are computed from it, and the
chart-change law DF.Gamma_phi(e1, e2) + D^2F(e1, e2) = Gamma_psi(DF e1, DF e2)
is implemented both as a transform and as a verifier.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from frechet_geo.core.calculus import (
    BilinearMap,
    SmoothMap,
    as_vector,
    directional_derivative,
    jacobian,
    polarize,
    second_derivative,
    second_derivative_tensor,
)
from frechet_geo.errors import (
    DimensionMismatchError,
    InverseMismatchError,
    MissingInverseError,
    NotQuadraticError,
    NotSymmetricError,
    SingularTransitionError,
)
from frechet_geo.utils.logger import setup_logger

logger = setup_logger(__name__)

CONDITION_LIMIT = 1e12
# Outer step multiplier for X(Y(f)) when Y(f) itself comes from differences
NESTED_FD_RELAXATION = 100.0
# |G(F(u)) - u| allowed before G is rejected, scaled by max(1, |u|)
INVERSE_TOL = 1e-8


@dataclass(frozen=True)
class ChristoffelField:
    """Chart-local Christoffel map u -> Gamma_phi(u) in L^2(E, E)"""
    gamma: Callable[[np.ndarray], BilinearMap]
    dim: int
    chart_id: str = "phi"
    symmetric: bool = False

    def at(self, u) -> BilinearMap:
        u = as_vector(u)
        if u.shape != (self.dim,):
            raise DimensionMismatchError(f"Point has shape {u.shape}, field expects ({self.dim},)")
        return self.gamma(u)

    def __call__(self, u, a, b) -> np.ndarray:
        return self.at(u)(a, b)

    @classmethod
    def from_tensor_function(cls, tensor_fn: Callable[[np.ndarray], np.ndarray], dim: int,
                             chart_id: str = "phi", symmetric: bool = False) -> "ChristoffelField":
        """Field whose value at u is the tensor T(u)[k, i, j]"""
        return cls(
            gamma=lambda u: BilinearMap.from_tensor(tensor_fn(u), symmetric=symmetric),
            dim=dim,
            chart_id=chart_id,
            symmetric=symmetric,
        )

    def symmetrized(self) -> "ChristoffelField":
        """Symmetric part; it has the same geodesics and defines a spray"""
        return ChristoffelField(
            gamma=lambda u: self.gamma(u).symmetrized(),
            dim=self.dim,
            chart_id=self.chart_id,
            symmetric=True,
        )

    def require_symmetric(self, operation: str) -> None:
        if not self.symmetric:
            raise NotSymmetricError(f"{operation} needs a symmetric Christoffel field")


@dataclass(frozen=True)
class ChartTransition:
    """F = psi o phi^-1 and optionally its inverse G = phi o psi^-1"""
    F: SmoothMap
    G: Optional[SmoothMap] = None

    def inverse_residual(self, points) -> float:
        """max |G(F(u)) - u| over the given points"""
        if self.G is None:
            raise MissingInverseError("Chart transition has no inverse G")
        return max(
            float(np.linalg.norm(as_vector(self.G(self.F(u))) - as_vector(u))) for u in points
        )

    def require_inverse(self, u, operation: str) -> None:
        """Raise unless G is supplied and G(F(u)) = u to INVERSE_TOL"""
        if self.G is None:
            raise MissingInverseError(f"{operation} needs the inverse chart G")
        u = as_vector(u)
        residual = self.inverse_residual([u])
        if residual > INVERSE_TOL * max(1.0, float(np.linalg.norm(u))):
            raise InverseMismatchError(
                f"{operation}: G does not invert F at u (|G(F(u)) - u| = {residual:.3e})", residual
            )


@dataclass(frozen=True)
class VectorField:
    """Principal part X_phi of a vector field"""
    principal: SmoothMap

    def __call__(self, u) -> np.ndarray:
        return as_vector(self.principal(u))


@dataclass(frozen=True)
class ScalarField:
    f: SmoothMap

    def __call__(self, u) -> float:
        return float(np.asarray(self.f(u)).reshape(-1)[0])


@dataclass(frozen=True)
class TwoJet:
    """alpha (covector) plus a symmetric bilinear form B to R, stored as a matrix"""
    alpha: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        alpha = as_vector(self.alpha)
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if B.shape != (alpha.size, alpha.size):
            raise DimensionMismatchError(f"B has shape {B.shape}, expected {(alpha.size, alpha.size)}")
        if not np.allclose(B, B.T, rtol=1e-10, atol=1e-12):
            raise NotSymmetricError("Two-jet bilinear part must be symmetric")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "B", B)


def _scalar(value) -> float:
    return float(np.asarray(value).reshape(-1)[0])


def covariant_derivative(gamma: ChristoffelField, X: VectorField, Y: VectorField, u) -> np.ndarray:
    """(nabla_X Y)(u) = DY(u).X(u) - Gamma(u)(X(u), Y(u))"""
    u = as_vector(u)
    x_u, y_u = X(u), Y(u)
    dy = as_vector(directional_derivative(Y.principal, u, x_u))
    return dy - gamma(u, x_u, y_u)


def hessian_apply(gamma: ChristoffelField, f: ScalarField, X: VectorField, Y: VectorField, u) -> float:
    """Hf(X, Y)(u) = D^2f(u)(X, Y) + Df(u).Gamma(u)(X, Y)"""
    u = as_vector(u)
    x_u, y_u = X(u), Y(u)
    second = _scalar(second_derivative(f.f, u, x_u, y_u))
    first = _scalar(directional_derivative(f.f, u, gamma(u, x_u, y_u)))
    return second + first


def hessian_via_connection(gamma: ChristoffelField, f: ScalarField, X: VectorField,
                           Y: VectorField, u) -> float:
    """Hf(X, Y)(u) = X(Y(f))(u) - Df(u).(nabla_X Y)(u) by nested differentiation"""
    u = as_vector(u)
    relax = 1.0 if f.f.d1 is not None else NESTED_FD_RELAXATION
    yf = SmoothMap(
        eval=lambda x: _scalar(directional_derivative(f.f, x, Y(x))),
        domain_dim=f.f.domain_dim,
        codomain_dim=1,
        fd_scale=f.f.fd_scale * relax,
    )
    xyf = _scalar(directional_derivative(yf, u, X(u)))
    correction = _scalar(directional_derivative(f.f, u, covariant_derivative(gamma, X, Y, u)))
    return xyf - correction


def spray_eval(gamma: ChristoffelField, u, v) -> Tuple[np.ndarray, np.ndarray]:
    """Fiber part (v, Gamma(u)(v, v)) of the spray"""
    gamma.require_symmetric("spray_eval")
    v = as_vector(v)
    return v, gamma(u, v, v)


def spray_quadratic(gamma: ChristoffelField) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Q(u, v) = Gamma(u)(v, v)"""
    gamma.require_symmetric("spray_quadratic")
    return lambda u, v: gamma(u, v, v)


def christoffel_from_spray(Q: Callable, dim: int, probes: int = 8, seed: int = 42,
                           tol: float = 1e-8, chart_id: str = "phi") -> ChristoffelField:
    """
    Recover the symmetric Christoffel field of a spray by polarization

    Args:
        Q: Quadratic part (u, v) -> Gamma(u)(v, v)
        dim: Model space dimension
        probes: Homogeneity probes Q(u, 2v) = 4 Q(u, v)
        seed: RNG seed for the probes
        tol: Relative homogeneity tolerance

    Returns:
        Symmetric ChristoffelField
    """
    rng = np.random.default_rng(seed)
    for _ in range(probes):
        u, v = rng.standard_normal(dim), rng.standard_normal(dim)
        single = as_vector(Q(u, v))
        double = as_vector(Q(u, 2.0 * v))
        defect = float(np.linalg.norm(double - 4.0 * single))
        if defect > tol * (1.0 + float(np.linalg.norm(4.0 * single))):
            raise NotQuadraticError(f"Spray fiber part is not quadratic (defect {defect:.3e})")

    def gamma(u):
        return BilinearMap(lambda v, w: polarize(lambda z: Q(u, z), v, w), dim, dim, symmetric=True)

    return ChristoffelField(gamma=gamma, dim=dim, chart_id=chart_id, symmetric=True)


def dissection_eval(gamma: ChristoffelField, alpha, u) -> TwoJet:
    """2-jet alpha + alpha o Gamma(u) of the dissection at u"""
    gamma.require_symmetric("dissection_eval")
    alpha = as_vector(alpha)
    if alpha.shape != (gamma.dim,):
        raise DimensionMismatchError(f"Covector has shape {alpha.shape}, expected ({gamma.dim},)")
    T = gamma.at(u).to_tensor()
    B = np.einsum("k,kij->ij", alpha, T)
    return TwoJet(alpha, 0.5 * (B + B.T))


def christoffel_from_dissection(dissection: Callable[[np.ndarray, np.ndarray], TwoJet], dim: int,
                                chart_id: str = "phi") -> ChristoffelField:
    """Gamma(u)(v, w)_k = B^(k)(v, w) where B^(k) is the jet over the k-th basis covector"""
    basis = np.eye(dim)

    def tensor(u):
        return np.stack([dissection(u, basis[k]).B for k in range(dim)])

    return ChristoffelField.from_tensor_function(tensor, dim, chart_id=chart_id, symmetric=True)


def _invertible_jacobian(F: SmoothMap, u: np.ndarray) -> np.ndarray:
    J = jacobian(F, u)
    if J.shape[0] != J.shape[1]:
        raise DimensionMismatchError(f"Chart transition Jacobian is not square: {J.shape}")
    condition = np.linalg.cond(J)
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise SingularTransitionError(f"DF(u) is singular (condition estimate {condition:.3e})")
    return J


def transform_christoffel(gamma_phi: ChristoffelField, T: ChartTransition, u) -> BilinearMap:
    """
    Value of Gamma_psi at F(u) from the transformation law

    Gamma_psi(F(u))(w1, w2) = DF(u).Gamma_phi(u)(e1, e2) + D^2F(u)(e1, e2),
    with e_k = DF(u)^-1 w_k.
    """
    u = as_vector(u)
    J = _invertible_jacobian(T.F, u)
    H = second_derivative_tensor(T.F, u)
    source = gamma_phi.at(u)

    def apply(w1, w2):
        e1, e2 = np.linalg.solve(J, w1), np.linalg.solve(J, w2)
        return J @ source(e1, e2) + np.einsum("kij,i,j->k", H, e1, e2)

    return BilinearMap(apply, gamma_phi.dim, gamma_phi.dim, symmetric=gamma_phi.symmetric)


def transformed_field(gamma_phi: ChristoffelField, T: ChartTransition,
                      chart_id: str = "psi") -> ChristoffelField:
    """Gamma_psi as a field on the psi chart; needs the inverse transition G"""
    if T.G is None:
        raise MissingInverseError("transformed_field needs the inverse chart G")

    def gamma_psi(v) -> BilinearMap:
        u = as_vector(T.G(v))
        T.require_inverse(u, "transformed_field")
        return transform_christoffel(gamma_phi, T, u)

    return ChristoffelField(
        gamma=gamma_psi,
        dim=gamma_phi.dim,
        chart_id=chart_id,
        symmetric=gamma_phi.symmetric,
    )


def _unit_probe(rng: np.random.Generator, dim: int) -> np.ndarray:
    e = rng.standard_normal(dim)
    return e / np.linalg.norm(e)


def check_transformation_law(gamma_phi: ChristoffelField, gamma_psi: ChristoffelField,
                             T: ChartTransition, u, probes: int = 16, seed: int = 42) -> float:
    """
    Largest residual of the chart-change law at u over unit probe vectors

    Returns:
        max |Gamma_psi(F(u))(DF e1, DF e2) - DF.Gamma_phi(u)(e1, e2) - D^2F(u)(e1, e2)|
    """
    u = as_vector(u)
    rng = np.random.default_rng(seed)
    J = jacobian(T.F, u)
    v = as_vector(T.F(u))
    target, source = gamma_psi.at(v), gamma_phi.at(u)
    worst = 0.0
    for _ in range(probes):
        e1, e2 = _unit_probe(rng, gamma_phi.dim), _unit_probe(rng, gamma_phi.dim)
        lhs = target(J @ e1, J @ e2)
        rhs = J @ source(e1, e2) + as_vector(second_derivative(T.F, u, e1, e2))
        worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


def are_equivalent(B1: BilinearMap, B2: BilinearMap, T: ChartTransition, u,
                   tol: float = 1e-8, probes: int = 16, seed: int = 42) -> bool:
    """Whether the triples (phi, B1) and (psi, B2) are equivalent at u"""
    phi = ChristoffelField(lambda _: B1, B1.in_dim)
    psi = ChristoffelField(lambda _: B2, B2.in_dim, chart_id="psi")
    return check_transformation_law(phi, psi, T, u, probes, seed) <= tol


def check_level_transformation_laws(gammas_phi: Mapping[int, ChristoffelField],
                                    gammas_psi: Mapping[int, ChristoffelField],
                                    transitions: Mapping[int, ChartTransition],
                                    points: Mapping[int, np.ndarray],
                                    probes: int = 16, seed: int = 42) -> Dict[int, float]:
    """Projective-limit equivalence holds iff it holds at every level; residual per level"""
    residuals = {}
    for index in sorted(gammas_phi):
        residuals[index] = check_transformation_law(
            gammas_phi[index], gammas_psi[index], transitions[index], points[index], probes, seed
        )
    return residuals


def transform_twojet(s: TwoJet, T: ChartTransition, u) -> TwoJet:
    """
    Change of chart for a 2-jet of the dissection

    alpha_psi = alpha o DG(v),
    B_psi = B o (DG x DG) + alpha o DG o D^2F(u) o (DG x DG), with v = F(u).
    """
    u = as_vector(u)
    if u.shape != s.alpha.shape:
        raise DimensionMismatchError("Two-jet and point dimensions differ")
    T.require_inverse(u, "transform_twojet")
    v = as_vector(T.F(u))
    DG = jacobian(T.G, v)
    H = second_derivative_tensor(T.F, u)

    alpha_psi = DG.T @ s.alpha
    curvature_term = np.einsum("k,kij->ij", alpha_psi, H)
    B_psi = DG.T @ (s.B + curvature_term) @ DG
    return TwoJet(alpha_psi, 0.5 * (B_psi + B_psi.T))
