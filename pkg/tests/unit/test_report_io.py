"""Tests for CSV, plot-data and summary writers."""

import json

import numpy as np
import pytest

from measure_flow_lab.core.errors import InvalidArgumentError
from measure_flow_lab.core.reports import ConvergenceTable, FormulaReport, InequalityReport, RunReport
from measure_flow_lab.utils.report_io import (
    PLOT_COLUMNS,
    format_number,
    plot_columns,
    read_columns,
    summary,
    write_columns,
    write_outputs,
)


@pytest.fixture
def formula() -> FormulaReport:
    return FormulaReport(
        scenario="measure_flow",
        times=np.array([0.0, 0.5, 1.0]),
        lhs=np.array([0.0, 0.6, 0.9]),
        terms={"drift_term": np.array([0.0, 0.1, 0.2]), "diffusion_term": np.array([0.0, 0.5, 1.0])},
        residual=np.array([0.0, 0.0, -0.3]),
        mc_stderr=np.array([0.0, 0.05, 0.1]),
    )


@pytest.fixture
def run(formula) -> RunReport:
    return RunReport(
        scenario="measure_flow",
        config={"tolerance": {"se_multiplier": 3.0, "atol": 0.0}},
        passed=True,
        formula=formula,
        empirical_constants={"krylov": 0.4},
    )


class TestColumns:
    """Tests for format_number, write_columns and read_columns."""

    def test_format_round_trips(self):
        """Test that 17 significant digits recover the double."""
        value = 0.1 + 0.2

        assert float(format_number(value)) == value
        assert format_number(1.0) == "1"

    def test_write_and_read(self, tmp_path):
        """Test writing columns and reading them back."""
        path = write_columns(tmp_path / "sub" / "out.csv", {"a": np.array([1.0, 2.5]), "b": np.array([0.1, -3.0])})

        lines = path.read_text().splitlines()
        columns = read_columns(path)

        assert lines[0] == "a,b"
        assert lines[1] == "1,0.10000000000000001"
        assert np.array_equal(columns["b"], [0.1, -3.0])

    def test_rejects_ragged_columns(self, tmp_path):
        """Test that unequal column lengths are rejected."""
        with pytest.raises(InvalidArgumentError):
            write_columns(tmp_path / "x.csv", {"a": np.zeros(2), "b": np.zeros(3)})

    def test_rejects_empty(self, tmp_path):
        """Test that an empty column set is rejected."""
        with pytest.raises(InvalidArgumentError):
            write_columns(tmp_path / "x.csv", {})


class TestPlotColumns:
    """Tests for plot_columns."""

    def test_six_columns(self, run):
        """Test the plot-data column set and the residual band."""
        columns = plot_columns(run)

        assert tuple(columns) == PLOT_COLUMNS
        assert np.allclose(columns["upper"], [0.0, 0.15, 0.3])
        assert np.allclose(columns["lower"], -columns["upper"])
        assert np.allclose(columns["rhs_total"], [0.0, 0.6, 1.2])

    def test_explicit_band(self, run):
        """Test overriding the multiplier and atol."""
        columns = plot_columns(run, multiplier=1.0, atol=0.01)

        assert np.allclose(columns["upper"], [0.01, 0.06, 0.11])

    def test_missing_series(self):
        """Test that runs without a formula report cannot be plotted."""
        with pytest.raises(InvalidArgumentError):
            plot_columns(RunReport(scenario="diagnostic", config={}, passed=True))


class TestSummary:
    """Tests for summary and write_outputs."""

    def test_formula_summary(self, run):
        """Test the formula section of the summary."""
        out = summary(run)

        assert out["formula"]["terms"] == ["drift_term", "diffusion_term"]
        assert out["formula"]["within"] is True
        assert out["formula"]["final"]["lhs"] == 0.9
        assert out["empirical_constants"] == {"krylov": 0.4}

    def test_non_finite_values_are_strings(self):
        """Test that nan ratios survive JSON encoding."""
        report = InequalityReport.from_samples("x", [0.0], [0.0])
        run = RunReport(scenario="diagnostic", config={}, passed=True, inequalities=[report])

        out = summary(run)

        assert out["inequalities"][0]["max_ratio"] == "nan"
        json.dumps(out, allow_nan=False)

    def test_write_outputs(self, run, tmp_path):
        """Test the files written for a formula run."""
        written = write_outputs(run, tmp_path, "demo")

        assert sorted(written) == ["csv", "plot", "summary"]
        assert (tmp_path / "demo.csv").read_text().splitlines()[0] == "t,lhs,drift_term,diffusion_term,residual,mc_stderr"
        assert len((tmp_path / "demo_plot.csv").read_text().splitlines()) == 4
        assert json.loads((tmp_path / "demo_summary.json").read_text())["passed"] is True

    def test_write_outputs_without_plot(self, run, tmp_path):
        """Test that plot data can be switched off."""
        written = write_outputs(run, tmp_path, "demo", plot_data=False)

        assert "plot" not in written

    def test_convergence_and_inequality_files(self, tmp_path):
        """Test the long-format convergence table and inequality samples."""
        table = ConvergenceTable(
            steps=np.array([0.1, 0.05]),
            n_paths=np.array([100.0, 400.0]),
            max_residual=np.array([[0.4, 0.3], [0.2, 0.1]]),
            max_stderr=np.full((2, 2), 0.05),
            slope_step=1.0,
            slope_paths=-0.5,
            refinement_monotone=True,
            replicates=4,
        )
        inequality = InequalityReport.from_samples("contraction", [0.5, 1.0], [1.0, 1.0])
        run = RunReport(scenario="convergence", config={}, passed=True, convergence=table, inequalities=[inequality])

        written = write_outputs(run, tmp_path, "sweep")
        rows = read_columns(written["convergence"])

        assert np.array_equal(rows["step"], [0.1, 0.1, 0.05, 0.05])
        assert np.array_equal(rows["n_paths"], [100.0, 400.0, 100.0, 400.0])
        assert np.array_equal(rows["max_residual"], [0.4, 0.3, 0.2, 0.1])
        assert (tmp_path / "sweep_contraction.csv").exists()
        assert json.loads(written["summary"].read_text())["convergence"]["replicates"] == 4
