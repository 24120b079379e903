"""Run configuration - flat key = value documents with dotted sections

Example:

    run.model = matrix-group
    matrix.n = 2
    initial.x0 = 1, 0, 0, 1
    initial.y0 = 0, 1, 0, 0
    time.t_end = 1.0
    time.steps = 1000
"""

import re
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from frechet_geo.core.tower import ConnectingMap, Level, Tower, truncation_tower
from frechet_geo.errors import ConfigError, FrechetGeoError
from frechet_geo.utils.logger import setup_logger

logger = setup_logger(__name__)

SUBCOMMANDS = ("geodesic", "transport", "convert-check", "tower-check", "ch")
MODELS = ("flat", "coordinatewise", "matrix-group", "ch", "custom-polynomial")


def _float_list(text: str) -> List[float]:
    return [float(item) for item in text.replace(";", ",").split(",") if item.strip()]


def _int_list(text: str) -> List[int]:
    return [int(item) for item in text.split(",") if item.strip()]


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _depths(text: str) -> List[Tuple[int, int]]:
    """'64:3, 32:2' -> [(64, 3), (32, 2)]"""
    pairs = []
    for item in text.split(","):
        if not item.strip():
            continue
        modes, _, exponent = item.partition(":")
        pairs.append((int(modes), int(exponent or 1)))
    return pairs


# key -> (attribute, parser, default)
SCHEMA: Dict[str, Tuple[str, Callable[[str], Any], Any]] = {
    "run.subcommand": ("subcommand", str, None),
    "run.model": ("model", str, "flat"),
    "run.seed": ("seed", int, 42),
    "run.tol": ("tol", float, 1e-8),
    "run.out": ("out", str, "./output"),
    "run.lipschitz_k": ("lipschitz_k", float, 1.0),
    "geometry.dim": ("dim", int, 2),
    "initial.x0": ("x0", _float_list, None),
    "initial.y0": ("y0", _float_list, None),
    "initial.t0": ("t0", float, 0.0),
    "time.t_end": ("t_end", float, 1.0),
    "time.steps": ("steps", int, 1000),
    "transport.u0": ("u0", _float_list, None),
    "matrix.n": ("matrix_n", int, 2),
    "gamma.c0": ("gamma_c0", _float_list, None),
    "gamma.c1": ("gamma_c1", _float_list, None),
    "gamma.c2": ("gamma_c2", _float_list, None),
    "gamma.symmetric": ("gamma_symmetric", _bool, True),
    "ch.k": ("ch_k", int, 1),
    "ch.modes": ("ch_modes", int, 128),
    "ch.sobolev_n": ("ch_sobolev_n", int, 1),
    "ch.coefficients": ("ch_coefficients", _float_list, None),
    "ch.samples": ("ch_samples", _float_list, None),
    "ch.depths": ("ch_depths", _depths, None),
    "ch.energy_tol": ("ch_energy_tol", float, 1e-6),
    "tower.dims": ("tower_dims", _int_list, None),
    "tower.tol": ("tower_tol", float, 1e-6),
    "check.instances": ("check_instances", int, 200),
    "check.probes": ("check_probes", int, 32),
    "check.hessian_tol": ("check_hessian_tol", float, 1e-5),
}

# Per-level tower keys: tower.weights.<index>, tower.map.<index> (map from <index> to the level below)
DYNAMIC_KEYS = re.compile(r"^tower\.(weights|map)\.(\d+)$")


@dataclass
class RunConfig:
    """Validated run configuration with defaults filled"""
    subcommand: Optional[str] = None
    model: str = "flat"
    seed: int = 42
    tol: float = 1e-8
    out: str = "./output"
    lipschitz_k: float = 1.0
    dim: int = 2
    x0: Optional[List[float]] = None
    y0: Optional[List[float]] = None
    t0: float = 0.0
    t_end: float = 1.0
    steps: int = 1000
    u0: Optional[List[float]] = None
    matrix_n: int = 2
    gamma_c0: Optional[List[float]] = None
    gamma_c1: Optional[List[float]] = None
    gamma_c2: Optional[List[float]] = None
    gamma_symmetric: bool = True
    ch_k: int = 1
    ch_modes: int = 128
    ch_sobolev_n: int = 1
    ch_coefficients: Optional[List[float]] = None
    ch_samples: Optional[List[float]] = None
    ch_depths: Optional[List[Tuple[int, int]]] = None
    ch_energy_tol: float = 1e-6
    tower_dims: Optional[List[int]] = None
    tower_tol: float = 1e-6
    tower_weights: Dict[int, List[float]] = field(default_factory=dict)
    tower_maps: Dict[int, List[float]] = field(default_factory=dict)
    check_instances: int = 200
    check_probes: int = 32
    check_hessian_tol: float = 1e-5
    lines: Dict[str, int] = field(default_factory=dict, repr=False)

    def validate(self) -> "RunConfig":
        """Check invariants; errors name the offending field"""
        def fail(key: str, message: str):
            raise ConfigError(message, line=self.lines.get(key), field=key)

        if self.subcommand is not None and self.subcommand not in SUBCOMMANDS:
            fail("run.subcommand", f"unknown subcommand {self.subcommand!r}, expected one of {SUBCOMMANDS}")
        if self.model not in MODELS:
            fail("run.model", f"unknown model {self.model!r}, expected one of {MODELS}")
        if self.steps < 1:
            fail("time.steps", f"steps must be >= 1, got {self.steps}")
        if self.t_end <= 0:
            fail("time.t_end", f"t_end must be > 0, got {self.t_end}")
        if self.t_end <= self.t0:
            fail("time.t_end", f"t_end must be > t0 = {self.t0}, got {self.t_end}")
        for key, value in (("run.tol", self.tol), ("ch.energy_tol", self.ch_energy_tol),
                           ("check.hessian_tol", self.check_hessian_tol), ("tower.tol", self.tower_tol),
                           ("run.lipschitz_k", self.lipschitz_k)):
            if value <= 0:
                fail(key, f"{key.split('.')[-1]} must be > 0, got {value}")
        if self.dim < 1:
            fail("geometry.dim", f"dim must be >= 1, got {self.dim}")
        if self.matrix_n < 1:
            fail("matrix.n", f"n must be >= 1, got {self.matrix_n}")
        if self.ch_k < 0:
            fail("ch.k", f"k must be >= 0, got {self.ch_k}")
        if self.ch_modes < 1:
            fail("ch.modes", f"modes must be >= 1, got {self.ch_modes}")
        if self.check_instances < 1 or self.check_probes < 1:
            fail("check.instances", "instances and probes must be >= 1")
        if self.seed < 0:
            fail("run.seed", f"seed must be >= 0, got {self.seed}")
        return self

    @property
    def model_dim(self) -> int:
        """Dimension of the chart the model works in"""
        if self.model == "matrix-group":
            return self.matrix_n * self.matrix_n
        return self.dim


def parse_config(text: str, subcommand: Optional[str] = None) -> RunConfig:
    """
    Parse a key = value document into a validated RunConfig

    Args:
        text: Document text
        subcommand: Subcommand chosen on the command line (overrides run.subcommand)

    Returns:
        RunConfig with defaults filled

    Raises:
        ConfigError: unknown key, type mismatch or violated invariant
    """
    config = RunConfig()
    seen: Dict[str, int] = {}

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=number)
        key, _, value = (part.strip() for part in line.partition("="))
        if key in seen:
            raise ConfigError(f"duplicate key (first set on line {seen[key]})", line=number, field=key)
        seen[key] = number

        dynamic = DYNAMIC_KEYS.match(key)
        if dynamic:
            kind, index = dynamic.group(1), int(dynamic.group(2))
            try:
                parsed = _float_list(value)
            except ValueError:
                raise ConfigError(f"expected a number list, got {value!r}", line=number, field=key) from None
            target = config.tower_weights if kind == "weights" else config.tower_maps
            target[index] = parsed
            continue

        if key not in SCHEMA:
            raise ConfigError("unknown key", line=number, field=key)
        attribute, parser, _ = SCHEMA[key]
        try:
            setattr(config, attribute, parser(value))
        except ValueError as e:
            raise ConfigError(f"type mismatch for {value!r}: {e}", line=number, field=key) from None

    config.lines = seen
    if subcommand is not None:
        config.subcommand = subcommand
    logger.debug(f"Parsed config: {len(seen)} keys")
    return config.validate()


def load_config(path: str, subcommand: Optional[str] = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read(), subcommand)


def load_tower(config: RunConfig) -> Tower:
    """
    Build a Tower from the tower.* keys

    tower.dims lists level dims coarsest first (level indices 0, 1, ...);
    tower.map.<j> is the row-major matrix from level j to level j - 1 and
    defaults to a drop-last projection.
    """
    dims = config.tower_dims
    if not dims:
        raise ConfigError("tower.dims is required", field="tower.dims")

    if not config.tower_maps:
        weights = [config.tower_weights.get(i) for i in range(len(dims))]
        try:
            return truncation_tower(dims, weights)
        except Exception as e:
            raise ConfigError(str(e), field="tower.dims") from None

    levels = []
    for i, dim in enumerate(dims):
        try:
            levels.append(Level(index=i, dim=dim, seminorm_weights=config.tower_weights.get(i)))
        except FrechetGeoError as e:
            key = f"tower.weights.{i}" if i in config.tower_weights else "tower.dims"
            raise ConfigError(str(e), line=config.lines.get(key), field=key) from None
    maps = []
    for upper in levels[1:]:
        lower = levels[upper.index - 1]
        values = config.tower_maps.get(upper.index)
        if values is None:
            matrix = np.eye(lower.dim, upper.dim)
        elif len(values) != lower.dim * upper.dim:
            raise ConfigError(
                f"expected {lower.dim * upper.dim} entries, got {len(values)}",
                field=f"tower.map.{upper.index}",
            )
        else:
            matrix = np.asarray(values).reshape(lower.dim, upper.dim)
        maps.append(ConnectingMap(upper.index, lower.index, matrix))
    return Tower(levels, tuple(maps))
