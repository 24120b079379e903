"""Main orchestrator - Runs one subcommand end to end and writes its artifacts"""

import json
import os
from typing import Callable, Dict, List, Optional

import numpy as np

from frechet_geo.builder import CsvBuilder, emit_csv, trajectory_builder, transport_builder
from frechet_geo.config import RunConfig, load_tower
from frechet_geo.core.structures import (
    ChartTransition,
    ChristoffelField,
    ScalarField,
    VectorField,
    check_transformation_law,
    christoffel_from_dissection,
    christoffel_from_spray,
    dissection_eval,
    hessian_apply,
    hessian_via_connection,
    spray_quadratic,
    transform_christoffel,
)
from frechet_geo.core.tower import Tower, check_composition_coherence, is_compatible_bilinear, truncation_tower
from frechet_geo.errors import ConfigError
from frechet_geo.models.connections import (
    MatrixGroupModel,
    coordinatewise_christoffel,
    direct_christoffel,
    direct_geodesic_exact,
    flat_christoffel,
)
from frechet_geo.models.polynomial import (
    coefficient_table,
    polynomial_christoffel,
    quadratic_map,
    random_polynomial_christoffel,
    random_quadratic_map,
)
from frechet_geo.models.spectral import (
    ChModel,
    SpectralState,
    band_limited_sampler,
    ch_tower,
    integrate_ch,
    tower_ch_evolution,
)
from frechet_geo.quality.reporter import CheckReporter
from frechet_geo.solvers.geodesic import (
    check_christoffel_family,
    geodesic,
    geodesic_existence_interval,
    geodesic_rhs,
    geodesic_transport,
    tower_geodesic,
)
from frechet_geo.solvers.integrators import euclidean_norm, existence_interval
from frechet_geo.utils.logger import setup_logger

logger = setup_logger(__name__)

CONVERT_CHECKS = ("hessian_equivalence", "spray_round_trip", "dissection_round_trip", "transformation_law")


def _relative(difference, reference) -> float:
    return float(np.linalg.norm(difference)) / (1.0 + float(np.linalg.norm(reference)))


def default_ch_profile(modes: int) -> SpectralState:
    """0.5 cos x + 0.25 sin 2x, truncated to the available modes"""
    state = SpectralState.zeros(max(modes, 2))
    c = state.coefficients.copy()
    c[1], c[4] = 0.5, 0.25
    return SpectralState(c).resized(modes)


class GeometryRunner:
    """Geometry Runner - Main orchestrator"""

    def __init__(self, config: RunConfig, output_dir: Optional[str] = None, verbose: bool = False):
        """
        Initialize runner

        Args:
            config: Validated run configuration (config.subcommand must be set)
            output_dir: Output directory (defaults to config.out)
            verbose: Whether to enable verbose output
        """
        if config.subcommand is None:
            raise ConfigError("no subcommand given", field="run.subcommand")
        self.config = config
        self.output_dir = output_dir or config.out
        self.verbose = verbose
        self.reporter = CheckReporter()
        self.artifacts: List[str] = []
        self.rng = np.random.default_rng(config.seed)
        self.logger = logger

        os.makedirs(self.output_dir, exist_ok=True)

    def run(self) -> int:
        """
        Execute the configured subcommand

        Returns:
            Exit status: 0 iff every check passed
        """
        handlers: Dict[str, Callable[[], None]] = {
            "geodesic": self._run_geodesic,
            "transport": self._run_transport,
            "convert-check": self._run_convert_check,
            "tower-check": self._run_tower_check,
            "ch": self._run_ch,
        }
        subcommand = self.config.subcommand
        self.logger.info(f"🧭 Running {subcommand} (model {self.config.model}, seed {self.config.seed})")

        try:
            handlers[subcommand]()
        except Exception as e:
            self.logger.error(f"Run failed: {e}")
            raise

        self._write_summary()
        self.reporter.print_summary()
        return 0 if self.reporter.passed else 1

    # ---- model plumbing -------------------------------------------------

    def _christoffel(self, dim: int) -> ChristoffelField:
        config = self.config
        if config.model == "flat":
            return flat_christoffel(dim)
        if config.model == "coordinatewise":
            return coordinatewise_christoffel(dim)
        if config.model == "matrix-group":
            return direct_christoffel(MatrixGroupModel(config.matrix_n))
        if config.model == "custom-polynomial":
            if config.gamma_c0 is None:
                return random_polynomial_christoffel(dim, self.rng, symmetric=config.gamma_symmetric)
            return polynomial_christoffel(
                coefficient_table(config.gamma_c0, dim, 3),
                coefficient_table(config.gamma_c1, dim, 4),
                coefficient_table(config.gamma_c2, dim, 5),
                symmetric=config.gamma_symmetric,
            )
        raise ConfigError(f"model {config.model!r} is only available through the ch subcommand",
                          field="run.model")

    def _vector(self, values, key: str, dim: int, default: np.ndarray) -> np.ndarray:
        if values is None:
            return default
        vector = np.asarray(values, dtype=float)
        if vector.shape != (dim,):
            raise ConfigError(f"expected {dim} entries, got {vector.size}",
                              line=self.config.lines.get(key), field=key)
        return vector

    def _initial_data(self, dim: int):
        config = self.config
        origin = np.eye(config.matrix_n).ravel() if config.model == "matrix-group" else np.zeros(dim)
        x0 = self._vector(config.x0, "initial.x0", dim, origin)
        y0 = self._vector(config.y0, "initial.y0", dim, np.zeros(dim))
        return x0, y0

    def _output_path(self, name: str) -> str:
        path = os.path.join(self.output_dir, name)
        self.artifacts.append(name)
        return path

    def _record_existence_interval(self, gamma: ChristoffelField, x0, y0):
        rhs = geodesic_rhs(gamma, self.config.lipschitz_k)
        a = existence_interval(rhs, self.config.t0, x0, y0, self.config.t_end, [euclidean_norm])
        self.reporter.record("existence_interval", float(a))

    # ---- subcommands ----------------------------------------------------

    def _run_geodesic(self):
        config = self.config
        dim = config.model_dim
        gamma = self._christoffel(dim)
        x0, y0 = self._initial_data(dim)

        self._record_existence_interval(gamma, x0, y0)
        if config.model in ("flat", "coordinatewise", "custom-polynomial"):
            observed = geodesic_rhs(gamma, config.lipschitz_k).spot_check_lipschitz(seed=config.seed)
            self.reporter.record("lipschitz_observed", float(observed))

        trajectory = geodesic(gamma, x0, y0, config.t_end, config.steps, t0=config.t0)
        emit_csv(trajectory, self._output_path("trajectory.csv"))
        self.reporter.record("final_position", [float(v) for v in trajectory.final_position])
        self.reporter.record("final_velocity", [float(v) for v in trajectory.final_velocity])

        if config.model == "flat":
            exact = x0 + np.outer(trajectory.times - config.t0, y0)
            residual = max(_relative(p - e, e) for p, e in zip(trajectory.positions, exact))
            self.reporter.report_check("exact_solution", residual, config.tol)
        elif config.model == "matrix-group":
            n = config.matrix_n
            exact = direct_geodesic_exact(x0.reshape(n, n), y0.reshape(n, n), config.t_end - config.t0)
            residual = _relative(trajectory.final_position - exact.ravel(), exact)
            self.reporter.report_check("exact_solution", residual, config.tol)

    def _run_transport(self):
        config = self.config
        dim = config.model_dim
        gamma = self._christoffel(dim)
        x0, y0 = self._initial_data(dim)
        u0 = self._vector(config.u0, "transport.u0", dim, np.eye(dim)[0])

        self._record_existence_interval(gamma, x0, y0)
        trajectory, path = geodesic_transport(gamma, x0, y0, u0, config.t_end, config.steps, t0=config.t0)
        emit_csv(transport_builder(path, trajectory), self._output_path("transport.csv"))
        self.reporter.record("final_vector", [float(v) for v in path.final_vector])

        _, doubled = geodesic_transport(gamma, x0, y0, 2.0 * u0, config.t_end, config.steps, t0=config.t0)
        linearity = max(_relative(d - 2.0 * v, 2.0 * v) for d, v in zip(doubled.vectors, path.vectors))
        self.reporter.report_check("transport_linearity", linearity, config.tol)

        if config.model == "flat":
            drift = max(_relative(v - u0, u0) for v in path.vectors)
            self.reporter.report_check("flat_transport_identity", drift, config.tol)

    def _convert_instance(self, instance: int) -> Dict[str, float]:
        """Run the structure identities on one seeded random instance of dim 1..4"""
        rng, config = self.rng, self.config
        dim = 1 + instance % 4
        gamma = random_polynomial_christoffel(dim, rng, symmetric=True)
        f = ScalarField(random_quadratic_map(dim, 1, rng))
        X = VectorField(random_quadratic_map(dim, dim, rng))
        Y = VectorField(random_quadratic_map(dim, dim, rng))
        u = 0.5 * rng.standard_normal(dim)

        direct = hessian_apply(gamma, f, X, Y, u)
        nested = hessian_via_connection(gamma, f, X, Y, u)
        residuals = {"hessian_equivalence": abs(direct - nested) / (1.0 + abs(direct))}

        from_spray = christoffel_from_spray(spray_quadratic(gamma), dim, seed=config.seed)
        from_dissection = christoffel_from_dissection(lambda p, alpha: dissection_eval(gamma, alpha, p), dim)
        spray_worst, dissection_worst = 0.0, 0.0
        for _ in range(4):
            a, b = rng.standard_normal(dim), rng.standard_normal(dim)
            reference = gamma(u, a, b)
            spray_worst = max(spray_worst, _relative(from_spray(u, a, b) - reference, reference))
            dissection_worst = max(dissection_worst, _relative(from_dissection(u, a, b) - reference, reference))
        residuals["spray_round_trip"] = spray_worst
        residuals["dissection_round_trip"] = dissection_worst

        F = quadratic_map(
            np.zeros(dim),
            np.eye(dim) + 0.1 * rng.standard_normal((dim, dim)),
            0.2 * rng.standard_normal((dim, dim, dim)),
        )
        T = ChartTransition(F)
        target = transform_christoffel(gamma, T, u)
        gamma_psi = ChristoffelField(lambda v: target, dim, chart_id="psi", symmetric=True)
        residuals["transformation_law"] = check_transformation_law(
            gamma, gamma_psi, T, u, probes=config.check_probes, seed=config.seed
        )
        return residuals

    def _run_convert_check(self):
        config = self.config
        builder = CsvBuilder(["instance", "dim", "check", "residual"])
        worst = {name: 0.0 for name in CONVERT_CHECKS}

        for instance in range(config.check_instances):
            residuals = self._convert_instance(instance)
            for name in CONVERT_CHECKS:
                builder.add_row([instance, 1 + instance % 4, name, residuals[name]])
                worst[name] = max(worst[name], residuals[name])

        emit_csv(builder, self._output_path("convert_check.csv"))
        self.reporter.record("instances", config.check_instances)
        for name in CONVERT_CHECKS:
            tolerance = config.check_hessian_tol if name == "hessian_equivalence" else config.tol
            self.reporter.report_check(name, worst[name], tolerance)

    def _default_tower(self) -> Tower:
        if self.config.tower_dims:
            return load_tower(self.config)
        return truncation_tower(list(range(1, self.config.dim + 1)))

    def _run_tower_check(self):
        config = self.config
        if config.model == "ch":
            self._run_spectral_tower()
            return
        if config.model not in ("flat", "coordinatewise"):
            raise ConfigError(f"tower-check supports flat, coordinatewise and ch, not {config.model!r}",
                              line=config.lines.get("run.model"), field="run.model")

        tower = self._default_tower()
        top = tower.top.dim
        x0, y0 = self._initial_data(top)
        gammas = {level.index: self._christoffel(level.dim) for level in tower.levels}

        coherence = check_composition_coherence(tower, tol=config.tol)
        self.reporter.report_check("composition_coherence", coherence.max_residual, config.tol)
        compatibility = check_christoffel_family(gammas, tower, probes=config.check_probes, seed=config.seed)
        self.reporter.report_check("christoffel_compatibility", compatibility, config.tol)

        bound = geodesic_existence_interval(gammas, tower, x0, y0, config.lipschitz_k, config.t_end)
        self.reporter.record("existence_interval", float(bound.a))
        self.reporter.record("existence_bound_growing", bool(bound.growing))

        result = tower_geodesic(gammas, tower, x0, y0, config.t_end, config.steps, t0=config.t0,
                                probes=config.check_probes, tol=config.tol, seed=config.seed)
        ordered = [result.trajectories[index] for index in tower.indices]
        emit_csv(trajectory_builder(ordered, top), self._output_path("tower_trajectory.csv"))
        emit_csv(result, self._output_path("residuals.csv"))
        self.reporter.report_check("tower_residual", result.max_residual, config.tower_tol)

    def _ch_model(self) -> ChModel:
        config = self.config
        return ChModel(k=config.ch_k, modes=config.ch_modes, sobolev_n=config.ch_sobolev_n)

    def _ch_initial(self, modes: int) -> SpectralState:
        config = self.config
        if config.ch_coefficients is not None:
            try:
                return SpectralState(config.ch_coefficients).resized(modes)
            except ValueError as e:
                raise ConfigError(str(e), line=config.lines.get("ch.coefficients"),
                                  field="ch.coefficients") from None
        if config.ch_samples is not None:
            resolvable = min(modes, (len(config.ch_samples) - 1) // 2)
            if resolvable < 1:
                raise ConfigError("need at least 3 samples", line=config.lines.get("ch.samples"),
                                  field="ch.samples")
            return SpectralState.from_samples(config.ch_samples, resolvable).resized(modes)
        return default_ch_profile(modes)

    def _ch_depths(self):
        config = self.config
        if config.ch_depths:
            return config.ch_depths
        return [(config.ch_modes, config.ch_sobolev_n), (max(config.ch_modes // 2, 1), config.ch_sobolev_n)]

    def _run_spectral_tower(self):
        config = self.config
        model = self._ch_model()
        depths = self._ch_depths()
        tower, forms = ch_tower(model, depths)
        coarsest = (tower.levels[0].dim - 1) // 2

        compatibility = is_compatible_bilinear(
            forms, tower, probes=config.check_probes, tol=config.tower_tol, seed=config.seed,
            sampler=band_limited_sampler(max(coarsest // 3, 1)),
        )
        self.reporter.report_check("bk_compatibility", compatibility.max_residual, config.tower_tol)

        u0 = self._ch_initial(depths[0][0])
        result = tower_ch_evolution(model, depths, u0, config.t_end, config.steps)
        ordered = [result.trajectories[index] for index in tower.indices]
        emit_csv(trajectory_builder(ordered, tower.top.dim), self._output_path("tower_trajectory.csv"))
        emit_csv(result, self._output_path("residuals.csv"))
        self.reporter.report_check("tower_residual", result.max_residual, config.tower_tol)

    def _run_ch(self):
        config = self.config
        model = self._ch_model()
        u0 = self._ch_initial(model.modes)

        run = integrate_ch(u0, model, config.t_end, config.steps)
        emit_csv(run, self._output_path("ch.csv"))
        self.reporter.record("initial_energy", float(run.energies[0]))
        self.reporter.record("final_energy", float(run.energies[-1]))
        self.reporter.report_check("energy_drift", run.relative_energy_drift, config.ch_energy_tol)

        if config.ch_depths:
            result = tower_ch_evolution(model, config.ch_depths, u0, config.t_end, config.steps)
            emit_csv(result, self._output_path("residuals.csv"))
            self.reporter.report_check("tower_residual", result.max_residual, config.tower_tol)

    # ---- summary --------------------------------------------------------

    def _write_summary(self) -> str:
        config = self.config
        summary = self.reporter.summary({
            "subcommand": config.subcommand,
            "model": config.model,
            "seed": config.seed,
            "tol": config.tol,
            "t_end": config.t_end,
            "steps": config.steps,
            "artifacts": sorted(self.artifacts),
        })
        path = os.path.join(self.output_dir, "summary.json")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
        self.logger.info(f"📄 Summary: {path}")
        return path
