"""Tests for configuration management."""

import os
import tempfile
from pathlib import Path
from unittest.mock import patch

import pytest
from pydantic import ValidationError as PydanticValidationError

from sigcom.config import (
    DEFAULT_TARGET_DENSITY,
    Algorithm,
    FilterKind,
    Method,
    RunConfig,
    Settings,
    load_run_config,
)
from sigcom.exceptions import ConfigurationError


class TestSettings:
    """Test the Settings configuration class."""

    def test_default_values(self):
        """Test default configuration values."""
        with patch.dict(os.environ, {}, clear=True):
            settings = Settings(_env_file=False)
            assert settings.log_level == "INFO"
            assert settings.log_dir == Path(".logs")
            assert settings.output_dir == Path("./results")
            assert settings.workers == 1

    def test_env_variable_override(self):
        """Test that environment variables override defaults."""
        test_env = {
            "SIGCOM_LOG_LEVEL": "debug",
            "SIGCOM_OUTPUT_DIR": "/custom/path",
            "SIGCOM_WORKERS": "4",
        }

        with patch.dict(os.environ, test_env, clear=True):
            settings = Settings(_env_file=False)
            assert settings.log_level == "DEBUG"
            assert settings.output_dir == Path("/custom/path")
            assert settings.workers == 4

    def test_dotenv_file_loading(self):
        """Test loading configuration from .env file."""
        with tempfile.TemporaryDirectory() as temp_dir:
            env_file = Path(temp_dir) / ".env"
            env_file.write_text("SIGCOM_LOG_LEVEL=WARNING\nSIGCOM_OUTPUT_DIR=/from/file\n")

            with patch.dict(os.environ, {}, clear=True):
                settings = Settings(_env_file=env_file)
                assert settings.log_level == "WARNING"
                assert settings.output_dir == Path("/from/file")

    def test_env_variables_override_dotenv(self):
        """Test that environment variables take precedence over .env file."""
        with tempfile.TemporaryDirectory() as temp_dir:
            env_file = Path(temp_dir) / ".env"
            env_file.write_text("SIGCOM_LOG_LEVEL=WARNING\n")

            with patch.dict(os.environ, {"SIGCOM_LOG_LEVEL": "ERROR"}, clear=True):
                settings = Settings(_env_file=env_file)
                assert settings.log_level == "ERROR"

    def test_invalid_log_level(self):
        """Test that unknown log levels are rejected."""
        with patch.dict(os.environ, {"SIGCOM_LOG_LEVEL": "LOUD"}, clear=True):
            with pytest.raises(PydanticValidationError, match="Invalid log level"):
                Settings(_env_file=False)

    def test_ensure_output_dir(self):
        """Test that the output directory is created."""
        with tempfile.TemporaryDirectory() as temp_dir:
            target = Path(temp_dir) / "nested" / "results"
            with patch.dict(os.environ, {"SIGCOM_OUTPUT_DIR": str(target)}, clear=True):
                Settings(_env_file=False).ensure_output_dir()
            assert target.is_dir()


class TestRunConfig:
    """Test per-run configuration validation."""

    def test_defaults(self):
        """Test the full grid and default parameters."""
        config = RunConfig()
        assert config.methods == list(Method)
        assert config.filters == [FilterKind.THRESHOLD, FilterKind.RMT]
        assert config.algorithms == [Algorithm.LOUVAIN, Algorithm.GREEDY]
        assert config.depth == 3
        assert config.gamma == "median"
        assert config.effective_target_density == DEFAULT_TARGET_DENSITY

    def test_comma_separated_lists(self):
        """Test list parsing with duplicates removed in order."""
        config = RunConfig(methods="sig-ed, correlation,sig-ed", algorithms="greedy")
        assert config.methods == [Method.SIG_ED, Method.CORRELATION]
        assert config.algorithms == [Algorithm.GREEDY]

    def test_unknown_method(self):
        """Test that unknown methods are rejected."""
        with pytest.raises(PydanticValidationError):
            RunConfig(methods="pearson")

    def test_empty_list(self):
        """Test that an empty grid axis is rejected."""
        with pytest.raises(PydanticValidationError, match="At least one"):
            RunConfig(filters="")

    def test_gamma(self):
        """Test numeric and median bandwidths."""
        assert RunConfig(gamma="0.5").gamma == 0.5
        assert RunConfig(gamma="Median").gamma == "median"
        with pytest.raises(PydanticValidationError):
            RunConfig(gamma="-1")
        with pytest.raises(PydanticValidationError):
            RunConfig(gamma="wide")

    def test_threshold_and_density_exclusive(self):
        """Test that an explicit theta and a density target cannot both be set."""
        with pytest.raises(PydanticValidationError, match="mutually exclusive"):
            RunConfig(threshold=0.5, target_density=0.2)
        assert RunConfig(threshold=0.5).effective_target_density is None
        assert RunConfig(target_density=0.2).effective_target_density == 0.2

    def test_ranges(self):
        """Test depth, coverage and window parameter ranges."""
        for bad in (
            {"depth": 0},
            {"min_coverage": 0.0},
            {"start_frac": 1.0},
            {"step": 0},
            {"sig_window": 0},
        ):
            with pytest.raises(PydanticValidationError):
                RunConfig(**bad)

    def test_unknown_key(self):
        """Test that unknown keys are rejected."""
        with pytest.raises(PydanticValidationError):
            RunConfig(colour="blue")

    def test_resolve_out_dir(self):
        """Test that the run directory wins over settings."""
        with patch.dict(os.environ, {}, clear=True):
            settings = Settings(_env_file=False)
        assert RunConfig(out_dir=Path("/x")).resolve_out_dir(settings) == Path("/x")
        assert RunConfig().resolve_out_dir(settings) == Path("./results")


class TestLoadRunConfig:
    """Test layering of defaults, TOML and overrides."""

    def test_toml_run_table(self):
        """Test reading a [run] table with dashed keys."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "run.toml"
            path.write_text(
                '[run]\nmethods = ["correlation", "sig-rbf"]\ndepth = 4\n'
                'target-density = 0.2\ngamma = "median"\n'
            )
            config = load_run_config(path)

        assert config.methods == [Method.CORRELATION, Method.SIG_RBF]
        assert config.depth == 4
        assert config.target_density == 0.2

    def test_layer_order(self):
        """Test defaults < file < overrides, with None overrides ignored."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "run.toml"
            path.write_text("depth = 4\nseed = 3\nworkers = 2\n")
            config = load_run_config(
                path,
                overrides={"depth": 2, "seed": None},
                defaults={"workers": 8, "depth": 5},
            )

        assert config.depth == 2
        assert config.seed == 3
        assert config.workers == 2

    def test_missing_file(self):
        """Test that a missing config file is a configuration error."""
        with pytest.raises(ConfigurationError, match="not found"):
            load_run_config(Path("/nonexistent/run.toml"))

    def test_invalid_toml(self):
        """Test that malformed TOML is reported."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "run.toml"
            path.write_text("depth = = 3\n")
            with pytest.raises(ConfigurationError, match="Invalid TOML"):
                load_run_config(path)

    def test_invalid_values_name_the_field(self):
        """Test that validation problems surface as ConfigurationError."""
        with pytest.raises(ConfigurationError, match="depth"):
            load_run_config(overrides={"depth": 0})
