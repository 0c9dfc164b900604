"""CSV, JSON summary and plot-data writers for run reports."""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np

from measure_flow_lab.core.errors import InvalidArgumentError
from measure_flow_lab.core.reports import ConvergenceTable, FormulaReport, InequalityReport, RunReport

logger = logging.getLogger(__name__)

PLOT_COLUMNS = ("t", "lhs", "rhs_total", "residual", "lower", "upper")


def format_number(value: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(value), ".17g")


def write_columns(path: Path, columns: dict[str, np.ndarray]) -> Path:
    """Write equal-length columns as CSV with a header row."""
    if not columns:
        raise InvalidArgumentError("nothing to write")
    lengths = {len(values) for values in columns.values()}
    if len(lengths) != 1:
        raise InvalidArgumentError(f"columns have different lengths: {sorted(lengths)}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(columns))
        for row in zip(*columns.values()):
            writer.writerow([format_number(value) for value in row])
    logger.debug("wrote %s", path)
    return path


def read_columns(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(row[i]) for row in body]) for i, name in enumerate(header)}


def plot_columns(run: RunReport, multiplier: float | None = None, atol: float | None = None) -> dict[str, np.ndarray]:
    """t, lhs, rhs_total, residual and the residual band +-(multiplier * mc_stderr + atol)."""
    report = run.formula
    if report is None:
        raise InvalidArgumentError(f"{run.scenario} run has no time series to plot")
    tolerance = run.config.get("tolerance", {})
    if multiplier is None:
        multiplier = tolerance.get("se_multiplier", 3.0)
    if atol is None:
        atol = tolerance.get("atol", 0.0)
    half_width = multiplier * report.mc_stderr + atol
    return {
        "t": report.times,
        "lhs": report.lhs,
        "rhs_total": report.rhs_total,
        "residual": report.residual,
        "lower": -half_width,
        "upper": half_width,
    }


def emit_plot_data(run: RunReport, path: Path) -> Path:
    """Write the six plot-data columns for a run with a formula report.

    Raises:
        InvalidArgumentError: If the run carries no time series
    """
    return write_columns(path, plot_columns(run))


def _clean(value: Any) -> Any:
    """JSON-safe copy: arrays to lists, non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if hasattr(value, "name"):
        return value.name
    return value


def _formula_summary(report: FormulaReport, multiplier: float, atol: float) -> dict[str, Any]:
    final = {name: values[-1] for name, values in report.terms.items()}
    final["lhs"] = report.lhs[-1]
    return {
        "terms": report.term_names,
        "max_abs_residual": report.max_abs_residual,
        "max_mc_stderr": float(np.max(report.mc_stderr)),
        "rule": f"|residual| <= {multiplier:g} * mc_stderr + {atol:g}",
        "within": report.within(multiplier, atol),
        "final": final,
        "extras_max": {name: float(np.max(np.abs(values))) for name, values in report.extras.items()},
    }


def _inequality_summary(report: InequalityReport) -> dict[str, Any]:
    return {
        "name": report.name,
        "passed": report.passed,
        "max_ratio": report.max_ratio,
        "tolerance": report.tolerance,
        "samples": report.samples,
        "notes": report.notes,
        "details": report.details,
    }


def _convergence_summary(table: ConvergenceTable) -> dict[str, Any]:
    return {
        "steps": table.steps,
        "n_paths": table.n_paths,
        "max_residual": table.max_residual,
        "max_stderr": table.max_stderr,
        "slope_step": table.slope_step,
        "slope_paths": table.slope_paths,
        "refinement_monotone": table.refinement_monotone,
        "replicates": table.replicates,
    }


def summary(run: RunReport) -> dict[str, Any]:
    """Self-describing JSON summary; ``config`` re-runs the experiment."""
    tolerance = run.config.get("tolerance", {})
    out: dict[str, Any] = {
        "scenario": run.scenario,
        "passed": run.passed,
        "failures": run.failures,
        "empirical_constants": run.empirical_constants,
        "rng_scheme": run.rng_scheme,
        "wall_clock_seconds": run.wall_clock,
        "versions": run.versions,
        "config": run.config,
    }
    if run.formula is not None:
        out["formula"] = _formula_summary(
            run.formula, tolerance.get("se_multiplier", 3.0), tolerance.get("atol", 0.0)
        )
    if run.inequalities:
        out["inequalities"] = [_inequality_summary(report) for report in run.inequalities]
    if run.convergence is not None:
        out["convergence"] = _convergence_summary(run.convergence)
    if run.validation is not None:
        out["validation"] = run.validation
    return _clean(out)


def write_summary(run: RunReport, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(summary(run), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_outputs(run: RunReport, out_dir: Path, prefix: str, plot_data: bool = True) -> dict[str, Path]:
    """Write every artifact of a run; returns the written paths by kind."""
    out_dir = Path(out_dir)
    written: dict[str, Path] = {}
    if run.formula is not None:
        written["csv"] = write_columns(out_dir / f"{prefix}.csv", run.formula.columns())
        if plot_data:
            written["plot"] = emit_plot_data(run, out_dir / f"{prefix}_plot.csv")
    if run.convergence is not None:
        table = run.convergence
        steps, sizes = np.meshgrid(table.steps, table.n_paths, indexing="ij")
        written["convergence"] = write_columns(
            out_dir / f"{prefix}_convergence.csv",
            {
                "step": steps.ravel(),
                "n_paths": sizes.ravel(),
                "max_residual": table.max_residual.ravel(),
                "max_stderr": table.max_stderr.ravel(),
            },
        )
    for report in run.inequalities:
        written[report.name] = write_columns(
            out_dir / f"{prefix}_{report.name}.csv",
            {"lhs": report.samples[:, 0], "rhs": report.samples[:, 1]},
        )
    written["summary"] = write_summary(run, out_dir / f"{prefix}_summary.json")
    logger.info("wrote %d files to %s", len(written), out_dir)
    return written
