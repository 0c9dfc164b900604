"""Monte Carlo verification of Ito-Krylov formulas for flows of measures.

Every time integral is a left Riemann sum on the simulation grid, evaluated
at the same left endpoints the Euler scheme used for the coefficients.
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from measure_flow_lab.core.errors import (
    IndependenceViolationError,
    InvalidArgumentError,
    NumericFailureError,
)
from measure_flow_lab.core.interfaces import IExtendedFunctional, IMeasureFunctional, ITimeField
from measure_flow_lab.core.models import CoefficientModel, EmpiricalMeasure, PathBundle, TimeGrid
from measure_flow_lab.core.reports import ConvergenceTable, FormulaReport
from measure_flow_lab.utils.stats import (
    bootstrap_stderr,
    ideal_bootstrap_stderr,
    loglog_slope,
    resample_weight,
    weighted_mean,
)

logger = logging.getLogger(__name__)

DEFAULT_RESAMPLES = 200
P_CHUNK = 256

MEASURE_TERMS = ("drift_term", "diffusion_term")
EXTENDED_TERMS = (
    "time_term",
    "space_drift_term",
    "space_diffusion_term",
    "martingale_term",
    "drift_term",
    "diffusion_term",
)
TIME_LINEAR_TERMS = ("time_term", "drift_term", "diffusion_term")


def _finite(value, term: str, time_index: int) -> None:
    if not np.all(np.isfinite(value)):
        raise NumericFailureError("term is not finite", term=term, time_index=time_index)


def _check_compatible(dim: int, paths: PathBundle, model: CoefficientModel) -> None:
    if paths.dim != model.dim:
        raise InvalidArgumentError(f"paths have dimension {paths.dim}, model has {model.dim}")
    if dim != paths.dim:
        raise InvalidArgumentError(f"functional has dimension {dim}, paths have {paths.dim}")


def _cumulative(increments: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(increments)])


def _trace_product(hess: np.ndarray, covariance: np.ndarray) -> np.ndarray:
    """Matrix scalar product H : a per path."""
    return np.einsum("...ij,...ij->...", hess, covariance)


@dataclass
class _FlowSeries:
    values: np.ndarray
    increments: dict[str, np.ndarray]
    per_path_stderr: np.ndarray | None = None
    per_path_term_stderr: dict[str, np.ndarray] | None = None

    def terms(self) -> dict[str, np.ndarray]:
        return {name: _cumulative(inc) for name, inc in self.increments.items()}

    def stacked(self) -> np.ndarray:
        """[residual, term_1, ...] as one array for the bootstrap."""
        terms = self.terms()
        lhs = self.values - self.values[0]
        residual = lhs - sum(terms.values())
        return np.stack([residual] + list(terms.values()))


def _measure_flow_series(
    functional: IMeasureFunctional,
    paths: PathBundle,
    weights: np.ndarray,
    per_path: bool = False,
) -> _FlowSeries:
    n = paths.grid.n_steps
    widths = paths.grid.widths
    values = np.empty(n + 1)
    drift_inc = np.zeros(n)
    diffusion_inc = np.zeros(n)
    stderr = np.zeros(n + 1) if per_path else None
    term_stderr = {name: np.zeros(n + 1) for name in MEASURE_TERMS} if per_path else None
    start_values = running = running_drift = running_diffusion = None

    for i in range(n + 1):
        points = paths.states[:, i]
        measure = EmpiricalMeasure(points=points, weights=weights)
        values[i] = functional.value(measure)
        _finite(values[i], "lhs", i)
        if per_path:
            # linear in the measure: per-path contributions average to the series
            current = functional.lin_deriv(measure, points)
            if i == 0:
                start_values = current
                running = np.zeros(paths.n_paths)
                running_drift = np.zeros(paths.n_paths)
                running_diffusion = np.zeros(paths.n_paths)
            stderr[i] = ideal_bootstrap_stderr(current - start_values - running)
            term_stderr["drift_term"][i] = ideal_bootstrap_stderr(running_drift)
            term_stderr["diffusion_term"][i] = ideal_bootstrap_stderr(running_diffusion)
        if i == n:
            break
        grad = functional.lin_deriv_grad(measure, points)
        hess = functional.lin_deriv_hess(measure, points)
        drift_path = np.sum(grad * paths.drift_values[:, i], axis=1)
        diffusion_path = 0.5 * _trace_product(hess, paths.covariance_values(i))
        drift_inc[i] = widths[i] * weighted_mean(drift_path, weights)
        diffusion_inc[i] = widths[i] * weighted_mean(diffusion_path, weights)
        _finite(drift_inc[i], "drift_term", i)
        _finite(diffusion_inc[i], "diffusion_term", i)
        if per_path:
            running_drift = running_drift + widths[i] * drift_path
            running_diffusion = running_diffusion + widths[i] * diffusion_path
            running = running_drift + running_diffusion

    return _FlowSeries(
        values=values,
        increments={"drift_term": drift_inc, "diffusion_term": diffusion_inc},
        per_path_stderr=stderr,
        per_path_term_stderr=term_stderr,
    )


def _report(
    scenario: str,
    grid: TimeGrid,
    series: _FlowSeries,
    stderr: np.ndarray,
    term_stderr: dict[str, np.ndarray],
    extras: dict[str, np.ndarray] | None = None,
    config: dict | None = None,
) -> FormulaReport:
    terms = series.terms()
    lhs = series.values - series.values[0]
    residual = lhs - sum(terms.values())
    return FormulaReport(
        scenario=scenario,
        times=np.array(grid.times),
        lhs=lhs,
        terms=terms,
        residual=residual,
        mc_stderr=stderr,
        term_stderr=term_stderr,
        extras=extras or {},
        config=config or {},
    )


def verify_measure_flow(
    functional: IMeasureFunctional,
    paths: PathBundle,
    model: CoefficientModel,
    n_resamples: int = DEFAULT_RESAMPLES,
    threads: int = 1,
) -> FormulaReport:
    """Compare u(mu_t) - u(mu_0) with the drift and diffusion integrals.

    Functionals affine in the measure get the exact path-bootstrap standard
    error of their per-path residuals; others are resampled ``n_resamples``
    times.

    Raises:
        InvalidArgumentError: On dimension mismatch
        NumericFailureError: If a term is not finite, with its name and time index
    """
    _check_compatible(functional.dim, paths, model)
    uniform = np.full(paths.n_paths, 1.0 / paths.n_paths)
    linear = functional.metadata.measure_degree <= 1
    logger.debug(
        "measure-flow check of %s on %d paths x %d steps",
        functional.metadata.name,
        paths.n_paths,
        paths.grid.n_steps,
    )
    series = _measure_flow_series(functional, paths, uniform, per_path=linear)
    if linear:
        stderr = series.per_path_stderr
        term_stderr = series.per_path_term_stderr
    else:

        def replicate(b: int) -> np.ndarray:
            weights = resample_weight(paths.seed, b, paths.n_paths)
            return _measure_flow_series(functional, paths, weights).stacked()

        spread = bootstrap_stderr(replicate, n_resamples, threads)
        stderr = spread[0]
        term_stderr = dict(zip(MEASURE_TERMS, spread[1:]))
    return _report(
        "measure_flow",
        paths.grid,
        series,
        stderr,
        term_stderr,
        config={"functional": functional.metadata.name, "model": model.name},
    )


def _extended_series(
    functional: IExtendedFunctional,
    xi_paths: PathBundle,
    x_paths: PathBundle,
    xi_weights: np.ndarray,
    x_weights: np.ndarray,
) -> tuple[_FlowSeries, np.ndarray]:
    n = xi_paths.grid.n_steps
    times, widths = xi_paths.grid.times, xi_paths.grid.widths
    n_xi = xi_paths.n_paths
    values = np.empty(n + 1)
    increments = {name: np.zeros(n) for name in EXTENDED_TERMS}
    running = np.zeros(n_xi)
    start = None
    residual_sup = np.zeros(n + 1)

    for i in range(n + 1):
        t = float(times[i])
        xi = xi_paths.states[:, i]
        x = x_paths.states[:, i]
        measure = EmpiricalMeasure(points=x, weights=x_weights)
        current = np.asarray(functional.value(t, xi, measure), dtype=float)
        _finite(current, "lhs", i)
        if i == 0:
            start = current
        values[i] = weighted_mean(current, xi_weights)
        residual_sup[i] = float(np.max(np.abs(current - start - running)))
        if i == n:
            break

        dt = widths[i]
        space_grad = functional.space_grad(t, xi, measure)
        per_path = {
            "time_term": dt * functional.time_deriv(t, xi, measure),
            "space_drift_term": dt * np.sum(space_grad * xi_paths.drift_values[:, i], axis=1),
            "space_diffusion_term": dt
            * 0.5
            * _trace_product(functional.space_hess(t, xi, measure), xi_paths.covariance_values(i)),
            "martingale_term": np.sum(
                space_grad
                * np.einsum("pij,pj->pi", xi_paths.diffusion_values[:, i], xi_paths.increments[:, i]),
                axis=1,
            ),
        }
        tilde_b = x_paths.drift_values[:, i]
        tilde_a = x_paths.covariance_values(i)
        drift = np.empty(n_xi)
        diffusion = np.empty(n_xi)
        for start_row in range(0, n_xi, P_CHUNK):
            rows = slice(start_row, start_row + P_CHUNK)
            grad = functional.lin_deriv_grad(t, xi[rows], measure, x)
            hess = functional.lin_deriv_hess(t, xi[rows], measure, x)
            drift[rows] = np.einsum("pqd,qd,q->p", grad, tilde_b, x_weights)
            diffusion[rows] = 0.5 * np.einsum("pqij,qij,q->p", hess, tilde_a, x_weights)
        per_path["drift_term"] = dt * drift
        per_path["diffusion_term"] = dt * diffusion

        for name in EXTENDED_TERMS:
            _finite(per_path[name], name, i)
            increments[name][i] = weighted_mean(per_path[name], xi_weights)
            running = running + per_path[name]

    return _FlowSeries(values=values, increments=increments), residual_sup


def verify_extended(
    functional: IExtendedFunctional,
    xi_paths: PathBundle,
    xi_model: CoefficientModel,
    x_paths: PathBundle,
    x_model: CoefficientModel,
    n_resamples: int = DEFAULT_RESAMPLES,
    threads: int = 1,
) -> FormulaReport:
    """Check the time/space/measure formula along each xi path.

    The measure argument is the law of X, approximated by ``x_paths``; the
    tilde expectations average over that whole ensemble. The martingale term
    reuses the Brownian increments stored with ``xi_paths``. The standard error
    resamples both ensembles.

    Raises:
        IndependenceViolationError: If both ensembles come from one seed
        InvalidArgumentError: On grid or dimension mismatch
        NumericFailureError: If a term is not finite
    """
    if xi_paths.seed == x_paths.seed:
        raise IndependenceViolationError(
            f"xi and X ensembles share seed {xi_paths.seed}; the tilde copy must be independent"
        )
    if xi_paths.grid != x_paths.grid:
        raise InvalidArgumentError("xi and X ensembles live on different time grids")
    _check_compatible(functional.dim, xi_paths, xi_model)
    _check_compatible(functional.dim, x_paths, x_model)

    xi_uniform = np.full(xi_paths.n_paths, 1.0 / xi_paths.n_paths)
    x_uniform = np.full(x_paths.n_paths, 1.0 / x_paths.n_paths)
    series, residual_sup = _extended_series(functional, xi_paths, x_paths, xi_uniform, x_uniform)

    def replicate(b: int) -> np.ndarray:
        xi_weights = resample_weight(xi_paths.seed, b, xi_paths.n_paths)
        x_weights = resample_weight(x_paths.seed, b, x_paths.n_paths)
        replicate_series, _ = _extended_series(functional, xi_paths, x_paths, xi_weights, x_weights)
        return replicate_series.stacked()

    spread = bootstrap_stderr(replicate, n_resamples, threads)
    return _report(
        "extended",
        xi_paths.grid,
        series,
        spread[0],
        dict(zip(EXTENDED_TERMS, spread[1:])),
        extras={"per_path_residual_sup": residual_sup},
        config={
            "functional": functional.metadata.name,
            "xi_model": xi_model.name,
            "x_model": x_model.name,
        },
    )


def verify_time_linear(
    g: ITimeField, paths: PathBundle, model: CoefficientModel
) -> FormulaReport:
    """u(t, mu) = int g(t, x) dmu(x): lhs against time, drift and diffusion integrals."""
    if paths.dim != model.dim:
        raise InvalidArgumentError(f"paths have dimension {paths.dim}, model has {model.dim}")
    n = paths.grid.n_steps
    times, widths = paths.grid.times, paths.grid.widths
    weights = np.full(paths.n_paths, 1.0 / paths.n_paths)
    values = np.empty(n + 1)
    increments = {name: np.zeros(n) for name in TIME_LINEAR_TERMS}
    stderr = np.zeros(n + 1)
    term_stderr = {name: np.zeros(n + 1) for name in TIME_LINEAR_TERMS}
    running = {name: np.zeros(paths.n_paths) for name in TIME_LINEAR_TERMS}
    start = None

    for i in range(n + 1):
        t = float(times[i])
        x = paths.states[:, i]
        current = np.asarray(g.value(t, x), dtype=float)
        _finite(current, "lhs", i)
        if i == 0:
            start = current
        values[i] = weighted_mean(current, weights)
        stderr[i] = ideal_bootstrap_stderr(current - start - sum(running.values()))
        for name in TIME_LINEAR_TERMS:
            term_stderr[name][i] = ideal_bootstrap_stderr(running[name])
        if i == n:
            break
        per_path = {
            "time_term": g.time_deriv(t, x),
            "drift_term": np.sum(g.grad(t, x) * paths.drift_values[:, i], axis=1),
            "diffusion_term": 0.5 * _trace_product(g.hess(t, x), paths.covariance_values(i)),
        }
        for name in TIME_LINEAR_TERMS:
            _finite(per_path[name], name, i)
            increments[name][i] = widths[i] * weighted_mean(per_path[name], weights)
            running[name] = running[name] + widths[i] * per_path[name]

    return _report(
        "time_linear",
        paths.grid,
        _FlowSeries(values=values, increments=increments),
        stderr,
        term_stderr,
        config={"field": g.name, "model": model.name},
    )


def convergence_study(
    scenario: Callable[[TimeGrid, int, int], FormulaReport],
    horizon: float,
    steps: list[float],
    n_paths_list: list[int],
    replicates: int = 1,
) -> ConvergenceTable:
    """Run ``scenario(grid, n_paths, replicate)`` on every (step, n_paths) cell.

    ``steps`` must decrease and ``n_paths_list`` increase. Each cell is run
    ``replicates`` times on independent ensembles and reports the root mean
    square of max |residual| over the replicates. The step slope is fitted at
    the largest ensemble, the ensemble slope at the smallest step.
    """
    if not steps or not n_paths_list:
        raise InvalidArgumentError("convergence study needs nonempty step and n_paths lists")
    if any(b >= a for a, b in zip(steps, steps[1:])):
        raise InvalidArgumentError(f"steps must be strictly decreasing, got {steps}")
    if any(b <= a for a, b in zip(n_paths_list, n_paths_list[1:])):
        raise InvalidArgumentError(f"n_paths must be strictly increasing, got {n_paths_list}")
    if replicates < 1:
        raise InvalidArgumentError(f"replicates must be >= 1, got {replicates}")

    residual = np.empty((len(steps), len(n_paths_list)))
    stderr = np.empty_like(residual)
    for i, step in enumerate(steps):
        grid = TimeGrid.from_step(horizon, step)
        for j, n_paths in enumerate(n_paths_list):
            cell_residual = np.empty(replicates)
            cell_stderr = np.empty(replicates)
            for r in range(replicates):
                report = scenario(grid, n_paths, r)
                cell_residual[r] = report.max_abs_residual
                cell_stderr[r] = float(np.max(report.mc_stderr))
            residual[i, j] = float(np.sqrt(np.mean(cell_residual**2)))
            stderr[i, j] = float(np.sqrt(np.mean(cell_stderr**2)))
            logger.info(
                "convergence cell step=%g n_paths=%d: rms max residual %.3g over %d replicates",
                step,
                n_paths,
                residual[i, j],
                replicates,
            )
    monotone = bool(residual[-1, -1] <= residual[0, 0])
    if not monotone:
        logger.warning(
            "finest cell residual %.3g exceeds coarsest %.3g", residual[-1, -1], residual[0, 0]
        )
    return ConvergenceTable(
        steps=np.asarray(steps, dtype=float),
        n_paths=np.asarray(n_paths_list, dtype=float),
        max_residual=residual,
        max_stderr=stderr,
        slope_step=loglog_slope(np.asarray(steps), residual[:, -1]),
        slope_paths=loglog_slope(np.asarray(n_paths_list), residual[-1, :]),
        refinement_monotone=monotone,
        replicates=replicates,
    )
