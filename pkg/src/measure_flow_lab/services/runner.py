"""Experiment orchestration: one ExperimentConfig in, one RunReport out."""

import logging
import platform
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from measure_flow_lab.app import Catalog, create_catalog
from measure_flow_lab.core.models import CoefficientModel, EmpiricalMeasure, PathBundle, TimeGrid
from measure_flow_lab.core.reports import FormulaReport, InequalityReport, RunReport
from measure_flow_lab.services import diagnostics
from measure_flow_lab.services.formula import convergence_study, verify_extended, verify_measure_flow, verify_time_linear
from measure_flow_lab.services.functional import mollified, with_time_rate
from measure_flow_lab.services.measure import mollifier_make
from measure_flow_lab.services.process import make_sample_points, simulate_paths, validate_coefficients
from measure_flow_lab.utils.config import EnsembleSpec, ExperimentConfig, Settings
from measure_flow_lab.utils.report_io import write_outputs
from measure_flow_lab.utils.rng import SAMPLING_TAG, derived_seed, stream

logger = logging.getLogger(__name__)

PATHS_SLOPE = -0.5
PATHS_SLOPE_TOLERANCE = 0.15
CONTRACTION_ATOL = 1e-9
GRID_HALF_WIDTH = 4.0


def package_versions() -> dict[str, str]:
    versions = {"python": platform.python_version()}
    for dist in ("measure-flow-lab", "numpy", "scipy", "POT", "click"):
        try:
            versions[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            versions[dist] = "unknown"
    return versions


def random_measure(rng: np.random.Generator, dim: int, max_atoms: int) -> EmpiricalMeasure:
    """Gaussian atoms with Dirichlet weights; between 1 and ``max_atoms`` atoms."""
    size = int(rng.integers(1, max_atoms + 1))
    return EmpiricalMeasure(points=rng.standard_normal((size, dim)), weights=rng.dirichlet(np.ones(size)))


def merge_reports(name: str, reports: list[InequalityReport], atol: float = 0.0) -> InequalityReport:
    """Pool the samples of repeated checks into one report."""
    samples = np.concatenate([report.samples for report in reports])
    notes = [note for report in reports for note in report.notes]
    return InequalityReport.from_samples(
        name, samples[:, 0], samples[:, 1], atol=atol, notes=notes, details={"repeats": len(reports)}
    )


class ExperimentRunner:
    """Runs experiment configs against the registries of a catalog."""

    def __init__(self, catalog: Catalog | None = None, settings: Settings | None = None) -> None:
        self._catalog = catalog or create_catalog()
        self._settings = settings or Settings()

    @property
    def settings(self) -> Settings:
        return self._settings

    def _resamples(self, config: ExperimentConfig) -> int:
        if config.bootstrap.resamples is None:
            return self._settings.bootstrap_resamples
        return config.bootstrap.resamples

    def _simulate(self, model: CoefficientModel, ensemble: EnsembleSpec, grid: TimeGrid) -> PathBundle:
        init = self._catalog.init_law(ensemble.init, model.dim)
        logger.info("simulating %d paths of %s over %d steps", ensemble.n_paths, model.name, grid.n_steps)
        return simulate_paths(
            model,
            grid,
            ensemble.n_paths,
            init,
            ensemble.seed,
            block_size=self._settings.block_size,
            threads=self._settings.threads,
        )

    def _validate(self, model: CoefficientModel, horizon: float, failures: list[str]) -> dict:
        report = validate_coefficients(model, make_sample_points(model.dim, horizon, model.aux_dim))
        if not report.passed:
            failures.append(
                f"coefficients {model.name}: max |b|+|sigma| = {report.max_bound:.6g} (K = {report.declared_bound:g}), "
                f"min ellipticity = {report.min_ellipticity:.6g} (delta = {report.declared_ellipticity:g})"
            )
        return {
            "model": model.name,
            "max_bound": report.max_bound,
            "min_ellipticity": report.min_ellipticity,
            "declared_bound": report.declared_bound,
            "declared_ellipticity": report.declared_ellipticity,
            "n_checks": report.n_checks,
            "bound_ok": report.bound_ok,
            "ellipticity_ok": report.ellipticity_ok,
            "passed": report.passed,
        }

    def _measure_functional(self, config: ExperimentConfig):
        functional = self._catalog.functional(config.functional, config.model.dim)
        if config.mollifier.index is not None:
            functional = mollified(
                functional,
                mollifier_make(config.mollifier.index, config.model.dim),
                mc_nodes=config.mollifier.nodes_per_axis,
                atom_cap=self._settings.mollified_atom_cap,
            )
        return functional

    def _check_formula(self, report: FormulaReport, config: ExperimentConfig, failures: list[str]) -> None:
        multiplier, atol = config.tolerance.se_multiplier, config.tolerance.atol
        if not report.within(multiplier, atol):
            failures.append(
                f"{report.scenario}: max |residual| {report.max_abs_residual:.6g} exceeds "
                f"{multiplier:g} * mc_stderr + {atol:g}"
            )

    # Scenarios

    def _run_measure_flow(self, config: ExperimentConfig, run: RunReport, grid: TimeGrid) -> None:
        model = self._catalog.model(config.model)
        run.validation = self._validate(model, grid.horizon, run.failures)
        paths = self._simulate(model, config.ensemble, grid)
        run.rng_scheme = paths.rng_scheme
        run.formula = verify_measure_flow(
            self._measure_functional(config),
            paths,
            model,
            n_resamples=self._resamples(config),
            threads=self._settings.threads,
        )
        self._check_formula(run.formula, config, run.failures)

    def _run_time_linear(self, config: ExperimentConfig, run: RunReport, grid: TimeGrid) -> None:
        model = self._catalog.model(config.model)
        run.validation = self._validate(model, grid.horizon, run.failures)
        paths = self._simulate(model, config.ensemble, grid)
        run.rng_scheme = paths.rng_scheme
        run.formula = verify_time_linear(self._catalog.time_field(config.field), paths, model)
        self._check_formula(run.formula, config, run.failures)

    def _run_extended(self, config: ExperimentConfig, run: RunReport, grid: TimeGrid) -> None:
        x_model = self._catalog.model(config.model)
        xi_model = self._catalog.model(config.extended.xi_model)
        run.validation = self._validate(x_model, grid.horizon, run.failures)
        self._validate(xi_model, grid.horizon, run.failures)
        x_paths = self._simulate(x_model, config.ensemble, grid)
        xi_paths = self._simulate(xi_model, config.extended.xi_ensemble, grid)
        run.rng_scheme = x_paths.rng_scheme
        functional = self._catalog.extended_functional(config.extended.functional, config.model.dim)
        if config.extended.time_rate:
            functional = with_time_rate(functional, config.extended.time_rate)
        report = verify_extended(
            functional,
            xi_paths,
            xi_model,
            x_paths,
            x_model,
            n_resamples=self._resamples(config),
            threads=self._settings.threads,
        )
        run.formula = report
        self._check_formula(report, config, run.failures)
        martingale = report.terms["martingale_term"]
        band = config.tolerance.se_multiplier * report.term_stderr["martingale_term"] + config.tolerance.atol
        if np.any(np.abs(martingale) > band):
            run.failures.append("extended: martingale term is not centred within its band")
        run.empirical_constants["per_path_residual_sup"] = float(np.max(report.extras["per_path_residual_sup"]))

    def _krylov(self, config: ExperimentConfig, grid: TimeGrid) -> InequalityReport:
        model = self._catalog.model(config.model)
        paths = self._simulate(model, config.ensemble, grid)
        return diagnostics.krylov_check(
            paths, model, diagnostics.krylov_family(grid.horizon, model.dim), config.diagnostic.p_exp
        )

    def _contraction(self, config: ExperimentConfig) -> InequalityReport:
        spec, dim = config.diagnostic, config.model.dim
        reports = []
        for i in range(spec.n_random):
            rng = stream(config.ensemble.seed, i, SAMPLING_TAG)
            mu, nu, m = (random_measure(rng, dim, spec.max_atoms) for _ in range(3))
            reports.append(
                diagnostics.contraction_check(
                    mu,
                    nu,
                    m,
                    atol=CONTRACTION_ATOL,
                    assignment_cap=self._settings.assignment_cap,
                    quantile_cap=self._settings.quantile_cap,
                    transport_cap=max(self._settings.transport_cap, spec.max_atoms**2),
                    atom_cap=self._settings.convolution_atom_cap,
                )
            )
        return merge_reports("contraction", reports, atol=CONTRACTION_ATOL)

    def _mollify_convergence(self, config: ExperimentConfig) -> InequalityReport:
        spec, dim = config.diagnostic, config.model.dim
        reports = []
        for i in range(spec.n_random):
            rng = stream(config.ensemble.seed, spec.n_random + i, SAMPLING_TAG)
            mu = random_measure(rng, dim, spec.max_atoms)
            reports.append(
                diagnostics.mollify_convergence_check(
                    mu,
                    spec.n_list,
                    nodes_per_axis=config.mollifier.nodes_per_axis,
                    seed=config.ensemble.seed,
                    quantile_cap=self._settings.quantile_cap,
                    atom_cap=self._settings.mollified_atom_cap,
                )
            )
        return merge_reports("mollify_convergence", reports, atol=1e-12)

    def _lp_convolution(self, config: ExperimentConfig) -> InequalityReport:
        dim, points = config.model.dim, config.diagnostic.grid_points
        axis = np.linspace(-GRID_HALF_WIDTH, GRID_HALF_WIDTH, points)
        spacing = float(axis[1] - axis[0])
        mesh = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1)
        sq = np.sum(mesh**2, axis=-1)
        f = diagnostics.GriddedField(np.exp(-0.5 * sq), spacing)
        g = diagnostics.GriddedField((sq <= 1.0).astype(float), spacing)
        return diagnostics.lp_convolution_check(f, g, config.diagnostic.lp_exponent)

    def _coefficients(self, config: ExperimentConfig, grid: TimeGrid) -> InequalityReport:
        model = self._catalog.model(config.model)
        report = validate_coefficients(model, make_sample_points(model.dim, grid.horizon, model.aux_dim))
        return InequalityReport.from_samples(
            "coefficients",
            [report.max_bound, report.declared_ellipticity],
            [report.declared_bound, report.min_ellipticity],
            atol=report.tolerance,
            details={"model": model.name, "n_checks": report.n_checks},
        )

    def _run_diagnostic(self, config: ExperimentConfig, run: RunReport, grid: TimeGrid) -> None:
        spec = config.diagnostic
        checks = {
            "krylov": lambda: self._krylov(config, grid),
            "density_integrability": lambda: diagnostics.density_integrability_check(
                spec.k, config.model.dim, grid.horizon
            ),
            "joint_integrability": lambda: diagnostics.joint_integrability_check(
                spec.k,
                spec.alpha,
                config.model.dim,
                grid.horizon,
                q_offset=spec.q_offset,
                enforce_hypothesis=spec.enforce_hypothesis,
            ),
            "contraction": lambda: self._contraction(config),
            "mollify_convergence": lambda: self._mollify_convergence(config),
            "lp_convolution": lambda: self._lp_convolution(config),
            "coefficients": lambda: self._coefficients(config, grid),
        }
        for name in spec.checks:
            logger.info("running diagnostic %s", name)
            report = checks[name]()
            run.inequalities.append(report)
            if name == "krylov":
                run.empirical_constants["krylov"] = report.max_ratio
            if not report.passed:
                run.failures.append(f"{name}: inequality does not hold (max ratio {report.max_ratio:.6g})")

    def _run_convergence(self, config: ExperimentConfig, run: RunReport, grid: TimeGrid) -> None:
        model = self._catalog.model(config.model)
        run.validation = self._validate(model, grid.horizon, run.failures)
        functional = self._measure_functional(config)
        init = self._catalog.init_law(config.ensemble.init, model.dim)

        # every (replicate, step, n_paths) cell draws an ensemble of its own
        def scenario(cell_grid: TimeGrid, n_paths: int, replicate: int) -> FormulaReport:
            paths = simulate_paths(
                model,
                cell_grid,
                n_paths,
                init,
                derived_seed(config.ensemble.seed, replicate, cell_grid.n_steps, n_paths),
                block_size=self._settings.block_size,
                threads=self._settings.threads,
            )
            run.rng_scheme = paths.rng_scheme
            return verify_measure_flow(
                functional, paths, model, n_resamples=self._resamples(config), threads=self._settings.threads
            )

        spec = config.convergence
        table = convergence_study(scenario, grid.horizon, spec.steps, spec.n_paths, replicates=spec.replicates)
        run.convergence = table
        run.empirical_constants.update({"slope_step": table.slope_step, "slope_paths": table.slope_paths})
        if not table.refinement_monotone:
            run.failures.append("convergence: finest cell residual exceeds the coarsest")
        if len(table.n_paths) >= 2 and abs(table.slope_paths - PATHS_SLOPE) > PATHS_SLOPE_TOLERANCE:
            run.failures.append(
                f"convergence: n_paths slope {table.slope_paths:.3f} outside {PATHS_SLOPE} +- {PATHS_SLOPE_TOLERANCE}"
            )

    def run(self, config: ExperimentConfig) -> RunReport:
        """Run ``config`` and judge it against its tolerance rule.

        Raises:
            NumericFailureError: If any computation produces a non-finite value
            CapacityExceededError: If an exact solver would exceed its cap
            InvalidArgumentError: If a name or parameter cannot be resolved
        """
        started = time.perf_counter()
        run = RunReport(scenario=config.scenario, config=config.to_dict(), passed=False)
        grid = TimeGrid(horizon=config.grid.horizon, n_steps=config.grid.n_steps)
        dispatch = {
            "measure_flow": self._run_measure_flow,
            "time_linear": self._run_time_linear,
            "extended": self._run_extended,
            "diagnostic": self._run_diagnostic,
            "convergence": self._run_convergence,
        }
        logger.info("running %s scenario", config.scenario)
        dispatch[config.scenario](config, run, grid)
        run.passed = not run.failures
        run.wall_clock = time.perf_counter() - started
        run.versions = package_versions()
        for failure in run.failures:
            logger.warning("%s", failure)
        logger.info("%s scenario %s in %.2fs", config.scenario, "passed" if run.passed else "failed", run.wall_clock)
        return run

    def execute(self, config: ExperimentConfig, out_dir: Path) -> tuple[RunReport, dict[str, Path]]:
        """Run ``config`` and write its artifacts under ``out_dir``."""
        run = self.run(config)
        prefix = config.output.prefix or config.scenario
        written = write_outputs(run, out_dir, prefix, plot_data=config.output.plot_data)
        return run, written
