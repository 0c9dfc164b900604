"""Tests for settings and experiment configuration."""

import json
from pathlib import Path
from unittest.mock import patch

import pytest

from measure_flow_lab.core.errors import ConfigError
from measure_flow_lab.utils.config import OUTPUT_ENV_VAR, ExperimentConfig, Settings, load_config, parse_config


class TestSettings:
    """Tests for Settings class."""

    def test_default_values(self):
        """Test default settings values."""
        settings = Settings()

        assert settings.threads == 1
        assert settings.block_size == 4096
        assert settings.bootstrap_resamples == 200
        assert settings.assignment_cap == 512

    def test_get_output_dir_default(self, monkeypatch, tmp_path):
        """Test the default output directory under the working directory."""
        monkeypatch.delenv(OUTPUT_ENV_VAR, raising=False)
        monkeypatch.chdir(tmp_path)

        assert Settings().get_output_dir() == tmp_path / "runs"

    def test_get_output_dir_custom(self, monkeypatch, tmp_path):
        """Test a configured output directory."""
        monkeypatch.delenv(OUTPUT_ENV_VAR, raising=False)
        custom_path = str(tmp_path / "custom" / "path")

        assert str(Settings(output_directory=custom_path).get_output_dir()) == custom_path

    def test_environment_overrides_setting(self, monkeypatch, tmp_path):
        """Test that the environment variable wins over the stored directory."""
        monkeypatch.setenv(OUTPUT_ENV_VAR, str(tmp_path / "env"))

        assert Settings(output_directory="elsewhere").get_output_dir() == tmp_path / "env"

    def test_save_and_load(self, tmp_path):
        """Test saving and loading settings."""
        with patch.object(Settings, "get_config_path", return_value=tmp_path / "settings.json"):
            settings = Settings()
            settings.threads = 4
            settings.transport_cap = 1024
            settings.save()

            loaded = Settings.load()

            assert loaded.threads == 4
            assert loaded.transport_cap == 1024

    def test_load_missing_file(self, tmp_path):
        """Test loading when the settings file doesn't exist."""
        with patch.object(Settings, "get_config_path", return_value=tmp_path / "nonexistent.json"):
            assert Settings.load().block_size == 4096

    def test_load_invalid_json(self, tmp_path):
        """Test loading with invalid JSON."""
        config_path = tmp_path / "settings.json"
        config_path.write_text("invalid json {{{")

        with patch.object(Settings, "get_config_path", return_value=config_path):
            assert Settings.load().threads == 1

    def test_load_non_object(self, tmp_path):
        """Test loading a JSON document that is not an object."""
        config_path = tmp_path / "settings.json"
        config_path.write_text("[1, 2, 3]")

        with patch.object(Settings, "get_config_path", return_value=config_path):
            assert Settings.load().threads == 1

    def test_load_ignores_unknown_fields(self, tmp_path):
        """Test that loading ignores unknown fields."""
        config_path = tmp_path / "settings.json"
        config_path.write_text(json.dumps({"threads": 8, "unknown_field": "should be ignored"}))

        with patch.object(Settings, "get_config_path", return_value=config_path):
            settings = Settings.load()

            assert settings.threads == 8
            assert not hasattr(settings, "unknown_field")


class TestParseConfig:
    """Tests for parse_config and load_config."""

    def test_empty_document_gives_defaults(self):
        """Test that {} yields the documented defaults."""
        config = parse_config("{}")

        assert config.scenario == "measure_flow"
        assert config.functional == "second_moment"
        assert config.field == "square_norm"
        assert config.grid.n_steps == 100
        assert config.ensemble.n_paths == 10_000
        assert config.extended.xi_ensemble.seed == 1
        assert config.tolerance.se_multiplier == 3.0

    def test_nested_values(self):
        """Test that nested sections are built into their dataclasses."""
        config = parse_config(
            json.dumps(
                {
                    "model": {"preset": "constant_drift", "dim": 2, "drift": [1, -1]},
                    "ensemble": {"n_paths": 50, "seed": 7, "init": {"kind": "gaussian", "scale": 2}},
                }
            )
        )

        assert config.model.drift == [1.0, -1.0]
        assert config.ensemble.init.kind == "gaussian"
        assert config.ensemble.init.scale == 2.0

    def test_round_trip(self):
        """Test that the canonical JSON parses back to an equal config."""
        config = parse_config(json.dumps({"grid": {"n_steps": 8}, "output": {"prefix": "run"}}))

        assert parse_config(config.to_json()) == config

    def test_to_json_is_sorted(self):
        """Test that serialization sorts keys."""
        keys = list(json.loads(ExperimentConfig().to_json()))

        assert keys == sorted(keys)

    def test_unknown_key(self):
        """Test that unknown keys are reported with their location."""
        with pytest.raises(ConfigError) as exc_info:
            parse_config(json.dumps({"model": {"presett": "brownian"}}))

        assert exc_info.value.problems == ["model.presett: unknown key"]

    def test_type_mismatch(self):
        """Test that wrong types are reported."""
        with pytest.raises(ConfigError) as exc_info:
            parse_config(json.dumps({"grid": {"n_steps": "ten"}, "ensemble": {"seed": True}}))

        problems = exc_info.value.problems
        assert any(p.startswith("grid.n_steps: expected an integer") for p in problems)
        assert any(p.startswith("ensemble.seed: expected an integer") for p in problems)

    def test_invalid_json(self):
        """Test that malformed JSON is a config error."""
        with pytest.raises(ConfigError) as exc_info:
            parse_config("{not json")

        assert exc_info.value.problems[0].startswith("<root>: invalid JSON")

    @pytest.mark.parametrize(
        "document,location",
        [
            ({"ensemble": {"n_paths": 0}}, "ensemble.n_paths"),
            ({"model": {"ellipticity": 0}}, "model.ellipticity"),
            ({"model": {"bound": -1}}, "model.bound"),
            ({"model": {"preset": "rotation", "dim": 1}}, "model.dim"),
            ({"model": {"dim": 2, "drift": [1.0]}}, "model.drift"),
            ({"grid": {"horizon": 0}}, "grid.horizon"),
            ({"scenario": "other"}, "scenario"),
            ({"diagnostic": {"checks": ["krylov", "bogus"]}}, "diagnostic.checks"),
            ({"diagnostic": {"n_list": [4, 2]}}, "diagnostic.n_list"),
            ({"bootstrap": {"resamples": 1}}, "bootstrap.resamples"),
            ({"scenario": "convergence", "convergence": {"steps": [0.1, 0.2], "n_paths": [10]}}, "convergence.steps"),
            (
                {"scenario": "convergence", "convergence": {"steps": [0.5], "n_paths": [10], "replicates": 0}},
                "convergence.replicates",
            ),
            ({"scenario": "extended", "extended": {"xi_ensemble": {"seed": 0}}}, "extended.xi_ensemble.seed"),
        ],
    )
    def test_constraint_violations(self, document, location):
        """Test that each violated constraint names its key."""
        with pytest.raises(ConfigError) as exc_info:
            parse_config(json.dumps(document))

        assert any(p.startswith(f"{location}:") for p in exc_info.value.problems)

    def test_ellipticity_message(self):
        """Test the message for a zero ellipticity constant."""
        with pytest.raises(ConfigError) as exc_info:
            parse_config(json.dumps({"model": {"ellipticity": 0.0}}))

        assert "ellipticity delta must be > 0" in str(exc_info.value)

    def test_load_config(self, write_config):
        """Test reading a config from disk."""
        path: Path = write_config({"scenario": "time_linear", "field": "time_only"})

        config = load_config(path)

        assert config.scenario == "time_linear"
        assert config.field == "time_only"
