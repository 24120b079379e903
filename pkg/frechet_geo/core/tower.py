"""Projective towers of finite-dimensional levels

A tower is a finite sequence of levels E_i = R^{dim_i}, each carrying a
weighted Euclidean seminorm, joined by linear connecting maps
rho_{i+1,i}: E_{i+1} -> E_i. Only adjacent maps are stored; rho_{ji} for
j > i + 1 is always the composition of adjacent maps.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from frechet_geo.errors import DimensionMismatchError, LevelIndexError, TowerError
from frechet_geo.utils.logger import setup_logger

logger = setup_logger(__name__)

DEFAULT_PROBES = 32
DEFAULT_SEED = 42

Vector = np.ndarray
ProbeSampler = Callable[[np.random.Generator, "Level"], Vector]


def _frozen(values, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Level:
    """One finite-dimensional level E_i with seminorm weights"""
    index: int
    dim: int
    seminorm_weights: np.ndarray = None

    def __post_init__(self):
        if self.dim < 1:
            raise TowerError(f"Level {self.index}: dim must be >= 1, got {self.dim}")
        weights = np.ones(self.dim) if self.seminorm_weights is None else self.seminorm_weights
        weights = _frozen(weights)
        if weights.shape != (self.dim,):
            raise DimensionMismatchError(
                f"Level {self.index}: expected {self.dim} weights, got {weights.shape}"
            )
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise TowerError(f"Level {self.index}: weights must be finite and >= 0")
        object.__setattr__(self, "seminorm_weights", weights)


@dataclass(frozen=True, eq=False)
class ConnectingMap:
    """Linear map rho_{from,to} from a higher level to a lower one"""
    from_index: int
    to_index: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.to_index > self.from_index:
            raise LevelIndexError(
                f"Connecting map must go down the tower, got {self.from_index} -> {self.to_index}"
            )
        object.__setattr__(self, "matrix", _frozen(self.matrix))
        if self.matrix.ndim != 2:
            raise DimensionMismatchError("Connecting map matrix must be two-dimensional")


@dataclass(frozen=True, eq=False)
class Tower:
    """Finite projective system: levels ordered by index, adjacent maps only"""
    levels: Tuple[Level, ...]
    maps: Tuple[ConnectingMap, ...] = ()
    _positions: Dict[int, int] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        levels = tuple(self.levels)
        maps = tuple(self.maps)
        if not levels:
            raise TowerError("A tower needs at least one level")

        indices = [level.index for level in levels]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise TowerError(f"Level indices must be strictly increasing, got {indices}")

        if len(maps) != len(levels) - 1:
            raise TowerError(
                f"Expected {len(levels) - 1} adjacent maps for {len(levels)} levels, got {len(maps)}"
            )

        for lower, upper, rho in zip(levels, levels[1:], maps):
            if (rho.from_index, rho.to_index) != (upper.index, lower.index):
                raise TowerError(
                    f"Map {rho.from_index}->{rho.to_index} does not join adjacent levels "
                    f"{upper.index}->{lower.index}"
                )
            if rho.matrix.shape != (lower.dim, upper.dim):
                raise DimensionMismatchError(
                    f"Map {upper.index}->{lower.index} has shape {rho.matrix.shape}, "
                    f"expected {(lower.dim, upper.dim)}"
                )

        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "_positions", {idx: pos for pos, idx in enumerate(indices)})

    @property
    def indices(self) -> List[int]:
        return [level.index for level in self.levels]

    @property
    def top(self) -> Level:
        """Deepest (finest) level"""
        return self.levels[-1]

    def level(self, index: int) -> Level:
        return self.levels[self.position(index)]

    def position(self, index: int) -> int:
        try:
            return self._positions[index]
        except KeyError:
            raise LevelIndexError(f"Level index {index} not in tower {self.indices}") from None

    def connecting_matrix(self, j: int, i: int) -> np.ndarray:
        """rho_{ji} composed from the adjacent maps"""
        pj, pi = self.position(j), self.position(i)
        if pi > pj:
            raise LevelIndexError(f"Cannot project upwards from level {j} to level {i}")
        matrix = np.eye(self.levels[pj].dim)
        for pos in range(pj, pi, -1):
            matrix = self.maps[pos - 1].matrix @ matrix
        return matrix


def truncation_tower(dims: Sequence[int], weights: Optional[Sequence[Sequence[float]]] = None,
                     start_index: int = 0) -> Tower:
    """
    Build a tower of nested drop-last coordinate projections

    Args:
        dims: Level dimensions from coarsest to finest (non-decreasing)
        weights: Optional seminorm weights per level
        start_index: Index of the coarsest level

    Returns:
        Tower whose adjacent maps keep the leading coordinates
    """
    dims = list(dims)
    if any(b < a for a, b in zip(dims, dims[1:])):
        raise TowerError(f"Truncation tower dims must be non-decreasing, got {dims}")
    weights = weights or [None] * len(dims)
    levels = tuple(
        Level(index=start_index + pos, dim=dim, seminorm_weights=w)
        for pos, (dim, w) in enumerate(zip(dims, weights))
    )
    maps = tuple(
        ConnectingMap(upper.index, lower.index, np.eye(lower.dim, upper.dim))
        for lower, upper in zip(levels, levels[1:])
    )
    return Tower(levels, maps)


def _check_dim(x: Vector, level: Level, what: str = "vector") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (level.dim,):
        raise DimensionMismatchError(
            f"{what} has shape {x.shape}, level {level.index} expects ({level.dim},)"
        )
    return x


def project_element(x: Vector, j: int, i: int, tower: Tower) -> np.ndarray:
    """Apply rho_{ji} to a level-j vector"""
    x = _check_dim(x, tower.level(j))
    return tower.connecting_matrix(j, i) @ x


@dataclass
class CoherenceReport:
    """Residual of rho_{ji} o rho_{kj} - rho_{ki} for every triple k > j > i"""
    residuals: Dict[Tuple[int, int, int], float]
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol


def check_composition_coherence(tower: Tower, tol: float = 1e-12,
                                declared: Optional[Mapping[Tuple[int, int], np.ndarray]] = None
                                ) -> CoherenceReport:
    """
    Check the projective-system axiom over all level triples

    Args:
        tower: Tower to audit
        tol: Pass threshold on the Frobenius residual
        declared: Optional user-declared maps rho_{ki} keyed by (k, i); these
            replace the composed map on the right-hand side

    Returns:
        CoherenceReport keyed by (k, j, i)
    """
    declared = dict(declared or {})
    residuals = {}
    for i, j, k in combinations(tower.indices, 3):
        composed = tower.connecting_matrix(j, i) @ tower.connecting_matrix(k, j)
        direct = np.asarray(declared.get((k, i), tower.connecting_matrix(k, i)), dtype=float)
        if direct.shape != composed.shape:
            raise DimensionMismatchError(
                f"Declared map {k}->{i} has shape {direct.shape}, expected {composed.shape}"
            )
        residuals[(k, j, i)] = float(np.linalg.norm(composed - direct))

    report = CoherenceReport(residuals, tol)
    if not report.passed:
        logger.warning(f"Composition coherence violated: max residual {report.max_residual:.3e}")
    return report


@dataclass(frozen=True)
class LevelFamilyMap:
    """Per-level maps f_i: E_i -> E_i; compatibility is checked, not assumed"""
    maps: Mapping[int, Callable[[Vector], Vector]]

    def __call__(self, index: int, x: Vector) -> np.ndarray:
        return np.asarray(self.maps[index](np.asarray(x, dtype=float)), dtype=float)

    def compose(self, other: "LevelFamilyMap") -> "LevelFamilyMap":
        """Level-wise f o g"""
        shared = set(self.maps) & set(other.maps)
        return LevelFamilyMap({
            idx: (lambda x, f=self.maps[idx], g=other.maps[idx]: f(g(x))) for idx in shared
        })


@dataclass(frozen=True)
class LevelFamilyBilinear:
    """Per-level bilinear maps B_i: E_i x E_i -> E_i"""
    forms: Mapping[int, Callable[[Vector, Vector], Vector]]

    def __call__(self, index: int, x: Vector, y: Vector) -> np.ndarray:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return np.asarray(self.forms[index](x, y), dtype=float)


@dataclass
class CompatibilityResult:
    compatible: bool
    max_residual: float

    def __bool__(self) -> bool:
        return self.compatible


def _gaussian_probe(rng: np.random.Generator, level: Level) -> np.ndarray:
    return rng.standard_normal(level.dim)


def _output(value, level: Level, name: str) -> np.ndarray:
    value = np.asarray(value, dtype=float)
    if value.shape != (level.dim,):
        raise DimensionMismatchError(
            f"{name} at level {level.index} returned shape {value.shape}, expected ({level.dim},)"
        )
    return value


def is_compatible_map(f: LevelFamilyMap, tower: Tower, probes: int = DEFAULT_PROBES,
                      tol: float = 1e-10, seed: int = DEFAULT_SEED,
                      sampler: Optional[ProbeSampler] = None) -> CompatibilityResult:
    """
    Probe rho_{ji}(f_j(x)) = f_i(rho_{ji}(x)) for all i < j

    Args:
        f: Level family of maps
        tower: Tower supplying the connecting maps
        probes: Random points per level
        tol: Absolute residual threshold
        seed: RNG seed
        sampler: Optional probe generator (rng, level) -> vector

    Returns:
        CompatibilityResult with the largest residual seen
    """
    if probes < 1:
        raise ValueError("probes must be >= 1")
    rng = np.random.default_rng(seed)
    sampler = sampler or _gaussian_probe
    worst = 0.0

    for j_level in tower.levels:
        lower = [lvl for lvl in tower.levels if lvl.index < j_level.index]
        for _ in range(probes):
            x = _check_dim(sampler(rng, j_level), j_level, "probe")
            fx = _output(f(j_level.index, x), j_level, "f")
            for i_level in lower:
                rho = tower.connecting_matrix(j_level.index, i_level.index)
                rhs = _output(f(i_level.index, rho @ x), i_level, "f")
                worst = max(worst, float(np.linalg.norm(rho @ fx - rhs)))

    logger.debug(f"Map compatibility: max residual {worst:.3e} over {probes} probes/level")
    return CompatibilityResult(worst <= tol, worst)


def is_compatible_bilinear(B: LevelFamilyBilinear, tower: Tower, probes: int = DEFAULT_PROBES,
                           tol: float = 1e-10, seed: int = DEFAULT_SEED,
                           sampler: Optional[ProbeSampler] = None) -> CompatibilityResult:
    """Probe rho_{ji}(B_j(x, y)) = B_i(rho_{ji} x, rho_{ji} y) for all i < j"""
    if probes < 1:
        raise ValueError("probes must be >= 1")
    rng = np.random.default_rng(seed)
    sampler = sampler or _gaussian_probe
    worst = 0.0

    for j_level in tower.levels:
        lower = [lvl for lvl in tower.levels if lvl.index < j_level.index]
        for _ in range(probes):
            x = _check_dim(sampler(rng, j_level), j_level, "probe")
            y = _check_dim(sampler(rng, j_level), j_level, "probe")
            bxy = _output(B(j_level.index, x, y), j_level, "B")
            for i_level in lower:
                rho = tower.connecting_matrix(j_level.index, i_level.index)
                rhs = _output(B(i_level.index, rho @ x, rho @ y), i_level, "B")
                worst = max(worst, float(np.linalg.norm(rho @ bxy - rhs)))

    logger.debug(f"Bilinear compatibility: max residual {worst:.3e}")
    return CompatibilityResult(worst <= tol, worst)


def seminorm(x: Vector, i: int, tower: Tower) -> float:
    """Weighted Euclidean seminorm p_i(x) = sqrt(sum w_k x_k^2)"""
    level = tower.level(i)
    x = _check_dim(x, level)
    return float(np.sqrt(np.sum(level.seminorm_weights * x * x)))


def level_seminorms(tower: Tower) -> List[Callable[[Vector], float]]:
    """Seminorms p_i o rho_{top,i} acting on top-level vectors, coarsest first"""
    top = tower.top.index
    return [
        (lambda x, i=level.index: seminorm(project_element(x, top, i, tower), i, tower))
        for level in tower.levels
    ]
