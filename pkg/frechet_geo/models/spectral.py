"""Spectral model of the geodesic equation u_t = B_k(u, u) on the circle

States are real trigonometric coefficient vectors

    (a_0, a_1, b_1, ..., a_N, b_N),  u(x) = a_0 + sum_m a_m cos(mx) + b_m sin(mx).

Products are evaluated on a 4N-point collocation grid, so quadratic terms
are exact before the 2/3-rule truncation of the result.
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from frechet_geo.core.tower import ConnectingMap, Level, LevelFamilyBilinear, Tower
from frechet_geo.errors import DimensionMismatchError, TowerError
from frechet_geo.solvers.geodesic import TowerTrajectory, integrate_tower
from frechet_geo.solvers.integrators import Trajectory, rk4_first_order
from frechet_geo.utils.logger import setup_logger

logger = setup_logger(__name__)

GRID_FACTOR = 4


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Real Fourier coefficients of a function on the circle"""
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).reshape(-1)
        if c.size % 2 != 1:
            raise DimensionMismatchError(f"Coefficient vector length must be 2N+1, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise ValueError("Spectral coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def modes(self) -> int:
        return (self.coefficients.size - 1) // 2

    @property
    def a0(self) -> float:
        return float(self.coefficients[0])

    @property
    def cosine(self) -> np.ndarray:
        return self.coefficients[1::2]

    @property
    def sine(self) -> np.ndarray:
        return self.coefficients[2::2]

    @classmethod
    def from_parts(cls, a0: float, cosine: Sequence[float], sine: Sequence[float]) -> "SpectralState":
        cosine, sine = np.asarray(cosine, dtype=float), np.asarray(sine, dtype=float)
        if cosine.shape != sine.shape:
            raise DimensionMismatchError("Cosine and sine coefficient lists differ in length")
        c = np.empty(2 * cosine.size + 1)
        c[0], c[1::2], c[2::2] = a0, cosine, sine
        return cls(c)

    @classmethod
    def zeros(cls, modes: int) -> "SpectralState":
        return cls(np.zeros(2 * modes + 1))

    @classmethod
    def from_samples(cls, values: Sequence[float], modes: int) -> "SpectralState":
        """Coefficients from values on the uniform grid x_j = 2 pi j / M"""
        values = np.asarray(values, dtype=float)
        if 2 * modes >= values.size:
            raise DimensionMismatchError(f"{values.size} samples cannot resolve {modes} modes")
        return cls(_from_grid(values, modes))

    def to_samples(self, points: int) -> np.ndarray:
        return _to_grid(self.coefficients, points)

    def resized(self, modes: int) -> "SpectralState":
        """Truncate high modes or pad with zeros"""
        c = np.zeros(2 * modes + 1)
        keep = min(c.size, self.coefficients.size)
        c[:keep] = self.coefficients[:keep]
        return SpectralState(c)

    def __add__(self, other: "SpectralState") -> "SpectralState":
        return SpectralState(self.coefficients + other.coefficients)

    def __mul__(self, scalar: float) -> "SpectralState":
        return SpectralState(scalar * self.coefficients)

    __rmul__ = __mul__


def _to_grid(c: np.ndarray, points: int) -> np.ndarray:
    modes = (c.size - 1) // 2
    if 2 * modes >= points:
        raise DimensionMismatchError(f"{points} grid points cannot represent {modes} modes")
    spectrum = np.zeros(points // 2 + 1, dtype=complex)
    spectrum[0] = points * c[0]
    spectrum[1:modes + 1] = 0.5 * points * (c[1::2] - 1j * c[2::2])
    return np.fft.irfft(spectrum, n=points)


def _from_grid(values: np.ndarray, modes: int) -> np.ndarray:
    points = values.size
    spectrum = np.fft.rfft(values)
    c = np.empty(2 * modes + 1)
    c[0] = spectrum[0].real / points
    c[1::2] = 2.0 * spectrum[1:modes + 1].real / points
    c[2::2] = -2.0 * spectrum[1:modes + 1].imag / points
    return c


def _mode_numbers(modes: int) -> np.ndarray:
    """Wavenumber of every coefficient slot: 0, 1, 1, 2, 2, ..."""
    m = np.arange(2 * modes + 1)
    return (m + 1) // 2


@dataclass(frozen=True)
class ChModel:
    """Order k of A_k, number of modes N, Sobolev exponent of the level seminorm"""
    k: int = 1
    modes: int = 128
    sobolev_n: int = 1

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if self.modes < 1:
            raise ValueError(f"modes must be >= 1, got {self.modes}")
        if self.sobolev_n < 0:
            raise ValueError(f"sobolev_n must be >= 0, got {self.sobolev_n}")

    @property
    def dealias_cutoff(self) -> int:
        return (2 * self.modes) // 3

    def with_level(self, modes: int, sobolev_n: int) -> "ChModel":
        return ChModel(self.k, modes, sobolev_n)


def ak_multiplier(k: int, m):
    """Symbol of A_k = 1 - d^2/dx^2 + ... + (-1)^k d^2k/dx^2k on mode m: sum_j m^2j"""
    m = np.asarray(m, dtype=float)
    total = sum(m ** (2 * j) for j in range(k + 1))
    return float(total) if total.ndim == 0 else total


def _multipliers(k: int, modes: int) -> np.ndarray:
    return ak_multiplier(k, _mode_numbers(modes))


def ak_apply(state: SpectralState, k: int) -> SpectralState:
    return SpectralState(state.coefficients * _multipliers(k, state.modes))


def ak_inverse(state: SpectralState, k: int) -> SpectralState:
    return SpectralState(state.coefficients / _multipliers(k, state.modes))


def spectral_derivative(state: SpectralState) -> SpectralState:
    """d/dx: (a_m, b_m) -> (m b_m, -m a_m)"""
    c = state.coefficients
    m = np.arange(1, state.modes + 1)
    out = np.zeros_like(c)
    out[1::2] = m * c[2::2]
    out[2::2] = -m * c[1::2]
    return SpectralState(out)


def dealias(state: SpectralState, cutoff: int) -> SpectralState:
    """Zero every mode above the cutoff"""
    c = state.coefficients.copy()
    c[_mode_numbers(state.modes) > cutoff] = 0.0
    return SpectralState(c)


def bk_apply(u: SpectralState, v: SpectralState, model: ChModel) -> SpectralState:
    """
    B_k(u, v) = A_k^-1 (2 v_x A_k(u) + v A_k(u_x))

    Args:
        u, v: States with the same number of modes
        model: Supplies k; the dealias cutoff follows the states' mode count
    """
    if u.modes != v.modes:
        raise DimensionMismatchError(f"B_k arguments differ in modes: {u.modes} vs {v.modes}")
    modes, k = u.modes, model.k
    points = GRID_FACTOR * modes

    au = _to_grid(ak_apply(u, k).coefficients, points)
    aux = _to_grid(ak_apply(spectral_derivative(u), k).coefficients, points)
    vx = _to_grid(spectral_derivative(v).coefficients, points)
    vv = _to_grid(v.coefficients, points)

    product = SpectralState(_from_grid(2.0 * vx * au + vv * aux, modes))
    return ak_inverse(dealias(product, (2 * modes) // 3), k)


def ch_rhs(u: SpectralState, model: ChModel) -> SpectralState:
    """Right-hand side of u_t = B_k(u, u)"""
    return bk_apply(u, u, model)


def sobolev_weights(modes: int, n: int) -> np.ndarray:
    """Parseval weights of ||f||_n^2 = sum_{i<=n} int (d^i f)^2 dx per coefficient slot"""
    m = _mode_numbers(modes)
    weights = np.pi * ak_multiplier(n, m)
    weights[0] = 2.0 * np.pi
    return weights


def sobolev_seminorm(u: SpectralState, n: int) -> float:
    if n < 0:
        raise ValueError(f"Sobolev exponent must be >= 0, got {n}")
    c = u.coefficients
    return float(np.sqrt(np.sum(sobolev_weights(u.modes, n) * c * c)))


def energy(u: SpectralState, k: int) -> float:
    """E(u) = <u, A_k u> in L^2, conserved along u_t = B_k(u, u)"""
    return sobolev_seminorm(u, k) ** 2


@dataclass
class ChRun:
    """Coefficient history of one spectral run"""
    times: np.ndarray
    states: np.ndarray
    energies: np.ndarray
    model: ChModel

    @property
    def final_state(self) -> SpectralState:
        return SpectralState(self.states[-1])

    @property
    def relative_energy_drift(self) -> float:
        initial = self.energies[0]
        if initial == 0.0:
            return float(np.max(np.abs(self.energies)))
        return float(np.max(np.abs(self.energies - initial)) / abs(initial))


def integrate_ch(u0: SpectralState, model: ChModel, t_end: float, steps: int) -> ChRun:
    """RK4 on u_t = B_k(u, u) directly (first order in time)"""
    if u0.modes != model.modes:
        u0 = u0.resized(model.modes)

    def rhs(t, c):
        return ch_rhs(SpectralState(c), model).coefficients

    times, states = rk4_first_order(rhs, 0.0, u0.coefficients, t_end, steps)
    energies = np.array([energy(SpectralState(c), model.k) for c in states])
    run = ChRun(times, states, energies, model)
    logger.info(f"CH run: k={model.k}, N={model.modes}, {steps} steps, "
                f"relative energy drift {run.relative_energy_drift:.3e}")
    return run


def _check_depths(depths: Sequence[Tuple[int, int]]) -> List[Tuple[int, int]]:
    depths = [(int(N), int(n)) for N, n in depths]
    if not depths:
        raise TowerError("At least one (N, n) level is required")
    modes = [N for N, _ in depths]
    if any(b >= a for a, b in zip(modes, modes[1:])):
        raise TowerError(f"Mode counts must strictly decrease along the list, got {modes}")
    return depths


def ch_tower(model: ChModel, depths: Sequence[Tuple[int, int]]) -> Tuple[Tower, LevelFamilyBilinear]:
    """
    Tower of mode truncations with Sobolev seminorms and B_k at each resolution

    Args:
        model: Supplies k
        depths: (N, n) pairs, finest first

    Returns:
        (tower, bilinear family); level 0 is the coarsest resolution
    """
    depths = _check_depths(depths)
    coarse_first = list(reversed(depths))
    levels = tuple(
        Level(index=pos, dim=2 * N + 1, seminorm_weights=sobolev_weights(N, n))
        for pos, (N, n) in enumerate(coarse_first)
    )
    maps = tuple(
        ConnectingMap(upper.index, lower.index, np.eye(lower.dim, upper.dim))
        for lower, upper in zip(levels, levels[1:])
    )
    forms = {
        pos: (lambda x, y, m=model.with_level(N, n):
              bk_apply(SpectralState(x), SpectralState(y), m).coefficients)
        for pos, (N, n) in enumerate(coarse_first)
    }
    return Tower(levels, maps), LevelFamilyBilinear(forms)


def band_limited_sampler(max_mode: int, scale: float = 1.0):
    """Probe generator for spectral levels: random modes up to max_mode, zero above"""
    def sample(rng: np.random.Generator, level: Level) -> np.ndarray:
        c = scale * rng.standard_normal(level.dim)
        c[_mode_numbers((level.dim - 1) // 2) > max_mode] = 0.0
        return c
    return sample


def tower_ch_evolution(model: ChModel, depths: Sequence[Tuple[int, int]], u0: SpectralState,
                       t_end: float, steps: int) -> TowerTrajectory:
    """Run u_t = B_k(u, u) at every resolution and compare truncations"""
    tower, _ = ch_tower(model, depths)
    by_index: Dict[int, ChModel] = {
        pos: model.with_level(N, n) for pos, (N, n) in enumerate(reversed(_check_depths(depths)))
    }
    top = u0.resized((tower.top.dim - 1) // 2).coefficients

    def solve_level(level: Level, xi, _unused) -> Trajectory:
        level_model = by_index[level.index]
        run = integrate_ch(SpectralState(xi), level_model, t_end, steps)
        rates = np.array([ch_rhs(SpectralState(c), level_model).coefficients for c in run.states])
        return Trajectory(run.times, run.states, rates, level=level.index)

    return integrate_tower(solve_level, tower, top, np.zeros_like(top))
