"""End-to-end runs of every scenario through ExperimentRunner."""

import json

import numpy as np
import pytest

from measure_flow_lab.core.errors import CapacityExceededError, HypothesisViolationError, NumericFailureError
from measure_flow_lab.core.reports import InequalityReport
from measure_flow_lab.services import runner as runner_module
from measure_flow_lab.services.runner import ExperimentRunner, merge_reports
from measure_flow_lab.utils.config import Settings, parse_config


def _config(**sections):
    document = {
        "grid": {"horizon": 1.0, "n_steps": 10},
        "ensemble": {"n_paths": 2000, "seed": 3},
        "bootstrap": {"resamples": 20},
        "tolerance": {"se_multiplier": 4.0},
    }
    document.update(sections)
    return parse_config(json.dumps(document))


@pytest.fixture
def runner(catalog, settings) -> ExperimentRunner:
    return ExperimentRunner(catalog, settings)


class TestMeasureFlowScenario:
    """Tests for the measure_flow scenario."""

    def test_second_moment_passes(self, runner):
        """Test the default functional on Brownian motion."""
        run = runner.run(_config())

        assert run.passed
        assert run.failures == []
        assert run.validation["passed"]
        assert len(run.formula.times) == 11
        assert run.rng_scheme
        assert "numpy" in run.versions

    def test_config_is_recorded(self, runner):
        """Test that the run carries the config that reproduces it."""
        config = _config()

        run = runner.run(config)

        assert parse_config(json.dumps(run.config)) == config

    def test_failed_validation_is_reported(self, runner):
        """Test that an understated K marks the run as failed."""
        run = runner.run(_config(model={"preset": "constant_drift", "drift": [2.0], "bound": 1.0}))

        assert not run.passed
        assert any(failure.startswith("coefficients constant_drift") for failure in run.failures)

    def test_mollified_functional(self, runner):
        """Test a run with a mollifier index."""
        run = runner.run(_config(mollifier={"index": 4}))

        assert run.formula.config["functional"] == "mollified[second_moment,n=4]"
        assert run.passed


class TestOtherScenarios:
    """Tests for time_linear, extended, diagnostic and convergence."""

    def test_time_linear(self, runner):
        """Test t x_1 under a drift with atol covering the b dt t lag of the time integral."""
        config = _config(
            scenario="time_linear",
            field="time_product:g=coordinate",
            model={"preset": "constant_drift", "drift": [0.7]},
            tolerance={"se_multiplier": 4.0, "atol": 0.07},
        )

        run = runner.run(config)

        assert run.passed, run.failures
        assert run.formula.term_names == ["time_term", "drift_term", "diffusion_term"]

    def test_extended(self, runner):
        """Test the extended scenario with an independent xi ensemble."""
        config = _config(
            scenario="extended",
            ensemble={"n_paths": 300, "seed": 3},
            bootstrap={"resamples": 100},
            extended={
                "functional": "bilinear:g=dot",
                "xi_ensemble": {"n_paths": 200, "seed": 4, "init": {"kind": "point", "location": [0.5]}},
            },
        )

        run = runner.run(config)

        assert run.passed, run.failures
        assert "martingale_term" in run.formula.terms
        assert run.empirical_constants["per_path_residual_sup"] > 0

    def test_diagnostic(self, runner):
        """Test the cheap diagnostics together."""
        config = _config(
            scenario="diagnostic",
            ensemble={"n_paths": 500, "seed": 3},
            diagnostic={
                "checks": [
                    "krylov",
                    "density_integrability",
                    "joint_integrability",
                    "contraction",
                    "mollify_convergence",
                    "lp_convolution",
                    "coefficients",
                ],
                "n_random": 3,
                "max_atoms": 4,
                "n_list": [2, 4],
                "grid_points": 33,
            },
        )

        run = runner.run(config)

        assert run.passed, run.failures
        assert [report.name for report in run.inequalities][:2] == ["krylov", "density_integrability"]
        assert np.isfinite(run.empirical_constants["krylov"])
        assert run.formula is None

    def test_convergence(self, runner):
        """Test that the second-moment study recovers the n_paths^(-1/2) rate."""
        config = _config(
            scenario="convergence",
            convergence={"steps": [0.25, 0.125], "n_paths": [250, 1000, 4000, 16000], "replicates": 32},
        )

        run = runner.run(config)

        assert run.passed, run.failures
        assert run.convergence.max_residual.shape == (2, 4)
        assert run.convergence.replicates == 32
        assert abs(run.empirical_constants["slope_paths"] + 0.5) <= 0.15

    def test_convergence_replicates_are_independent(self, runner, mocker):
        """Test that every replicate and cell simulates from its own seed."""
        spy = mocker.spy(runner_module, "simulate_paths")
        config = _config(
            scenario="convergence",
            convergence={"steps": [0.5, 0.25], "n_paths": [100, 400], "replicates": 3},
        )

        runner.run(config)

        seeds = [call.args[4] for call in spy.call_args_list]
        assert len(seeds) == 12
        assert len(set(seeds)) == 12

    def test_execute_writes_outputs(self, runner, tmp_path):
        """Test that execute writes CSV, plot data and summary."""
        run, written = runner.execute(_config(output={"prefix": "demo"}), tmp_path)

        assert written["csv"] == tmp_path / "demo.csv"
        assert len(written["csv"].read_text().splitlines()) == 12
        summary = json.loads(written["summary"].read_text())
        assert summary["scenario"] == "measure_flow"
        assert summary["rng_scheme"] == run.rng_scheme

    def test_numeric_failure_propagates(self, runner, mocker):
        """Test that numeric failures are raised, not swallowed."""
        mocker.patch(
            "measure_flow_lab.services.runner.verify_measure_flow",
            side_effect=NumericFailureError("term is not finite", term="drift_term", time_index=3),
        )

        with pytest.raises(NumericFailureError):
            runner.run(_config())


class TestMergeReports:
    """Tests for merge_reports."""

    def test_pools_samples(self):
        """Test that repeated checks pool into one verdict."""
        first = InequalityReport.from_samples("c", [0.5], [1.0])
        second = InequalityReport.from_samples("c", [2.0], [1.0])

        merged = merge_reports("c", [first, second])

        assert merged.samples.shape == (2, 2)
        assert not merged.passed
        assert merged.details["repeats"] == 2


class TestSettingsWiring:
    """Tests that user settings reach the solvers."""

    @pytest.fixture
    def make_runner(self, catalog, tmp_path):
        def factory(**overrides) -> ExperimentRunner:
            return ExperimentRunner(catalog, Settings(output_directory=str(tmp_path), block_size=512, **overrides))

        return factory

    def test_bootstrap_resamples_default(self, make_runner, mocker):
        """Test that a config without resamples uses the settings value."""
        spy = mocker.spy(runner_module, "verify_measure_flow")
        config = _config(bootstrap={}, ensemble={"n_paths": 200, "seed": 3})

        make_runner(bootstrap_resamples=7).run(config)

        assert config.bootstrap.resamples is None
        assert spy.call_args.kwargs["n_resamples"] == 7

    def test_config_resamples_win(self, make_runner, mocker):
        """Test that an explicit config value overrides the settings."""
        spy = mocker.spy(runner_module, "verify_measure_flow")

        make_runner(bootstrap_resamples=7).run(_config(ensemble={"n_paths": 200, "seed": 3}))

        assert spy.call_args.kwargs["n_resamples"] == 20

    def test_convolution_atom_cap(self, make_runner):
        """Test that the contraction check honours the convolution atom cap."""
        config = _config(scenario="diagnostic", diagnostic={"checks": ["contraction"], "n_random": 1})

        with pytest.raises(CapacityExceededError):
            make_runner(convolution_atom_cap=0).run(config)

    def test_quantile_cap(self, make_runner):
        """Test that the mollifier check honours the quantile cap in one dimension."""
        config = _config(
            scenario="diagnostic", diagnostic={"checks": ["mollify_convergence"], "n_random": 1, "n_list": [2]}
        )

        with pytest.raises(CapacityExceededError):
            make_runner(quantile_cap=0).run(config)


class TestHypothesisViolations:
    """Tests for exponents outside the range of an estimate."""

    def test_joint_integrability_below_threshold(self, runner):
        """Test that k < d (alpha + 1) raises instead of reporting."""
        config = _config(
            scenario="diagnostic", diagnostic={"checks": ["joint_integrability"], "k": 1.5, "alpha": 1}
        )

        with pytest.raises(HypothesisViolationError):
            runner.run(config)

    def test_evaluated_when_not_enforced(self, runner):
        """Test that the violating pair is evaluated and fails as a finding."""
        config = _config(
            scenario="diagnostic",
            diagnostic={"checks": ["joint_integrability"], "k": 2.0, "alpha": 3, "enforce_hypothesis": False},
        )

        run = runner.run(config)

        assert not run.passed
        assert run.failures[0].startswith("joint_integrability")
