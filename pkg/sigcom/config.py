"""Configuration management for sigcom.

Two layers: process-wide `Settings` read from the environment (and a `.env`
file), and a per-run `RunConfig` read from a TOML file with CLI overrides.
"""

import tomllib
from enum import StrEnum
from pathlib import Path
from typing import Any, Literal, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from sigcom.exceptions import ConfigurationError

DEFAULT_TARGET_DENSITY = 0.1


class Method(StrEnum):
    """Matrix used to describe the panel."""

    CORRELATION = "correlation"
    SIG_ED = "sig-ed"
    SIG_CS = "sig-cs"
    SIG_RBF = "sig-rbf"


class FilterKind(StrEnum):
    """How the matrix is turned into a modularity objective."""

    THRESHOLD = "threshold"
    RMT = "rmt"


class Algorithm(StrEnum):
    """Modularity maximizer."""

    LOUVAIN = "louvain"
    GREEDY = "greedy"


class Settings(BaseSettings):
    """Application settings loaded from environment variables and .env file."""

    model_config = SettingsConfigDict(
        env_prefix="SIGCOM_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    log_level: str = Field(
        default="INFO",
        description="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)",
    )
    log_dir: Path = Field(default=Path(".logs"), description="Directory for the log file")
    output_dir: Path = Field(
        default=Path("./results"),
        description="Default directory for result files",
    )
    workers: int = Field(default=1, ge=1, description="Threads used to evaluate grid cells")

    def __init__(self, _env_file=None, **kwargs):
        """Initialize settings with .env file loading.

        Args:
            _env_file: Path to .env file to load (for testing).
                      If None, uses default behavior.
                      If False, disables all .env file loading.
            **kwargs: Field values to override
        """
        if _env_file is False:
            super().__init__(_env_file=None, **kwargs)
        else:
            if _env_file is not None:
                load_dotenv(dotenv_path=_env_file, override=False)
            super().__init__(**kwargs)

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level is one of the accepted values."""
        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        if v.upper() not in valid_levels:
            raise ValueError(
                f"Invalid log level '{v}'. Must be one of: {', '.join(sorted(valid_levels))}"
            )
        return v.upper()

    @field_validator("output_dir", "log_dir", mode="before")
    @classmethod
    def validate_paths(cls, v) -> Path:
        """Convert directories to Path objects."""
        return Path(v)

    def ensure_output_dir(self) -> None:
        """Create output directory if it doesn't exist."""
        self.output_dir.mkdir(parents=True, exist_ok=True)


def get_settings() -> Settings:
    """Get application settings instance."""
    return Settings()


def _split_list(v: Any) -> Any:
    if isinstance(v, str):
        return [item.strip() for item in v.split(",") if item.strip()]
    return v


class RunConfig(BaseModel):
    """Everything one `run` or `stability` invocation needs."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    prices: Optional[Path] = None
    sectors: Optional[Path] = None
    out_dir: Optional[Path] = None
    seed: int = Field(default=0, ge=0, lt=2**64)

    methods: list[Method] = Field(default_factory=lambda: list(Method))
    filters: list[FilterKind] = Field(default_factory=lambda: list(FilterKind))
    algorithms: list[Algorithm] = Field(default_factory=lambda: list(Algorithm))

    depth: int = Field(default=3, ge=1)
    threshold: Optional[float] = None
    target_density: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    gamma: Union[float, Literal["median"]] = "median"
    lead_lag_input: Literal["cumulative", "increments"] = "cumulative"
    feature_scaling: Literal["none", "standardize"] = "none"
    sig_window: Optional[int] = Field(default=None, ge=1)
    min_coverage: float = Field(default=0.99, gt=0.0, le=1.0)
    louvain_shuffle: bool = False

    start_frac: float = Field(default=1.0 / 3.0, gt=0.0, lt=1.0)
    step: Optional[int] = Field(default=None, ge=1)

    dump_matrices: bool = False
    dump_signatures: bool = False
    workers: int = Field(default=1, ge=1)

    @field_validator("methods", "filters", "algorithms", mode="before")
    @classmethod
    def parse_lists(cls, v: Any) -> Any:
        """Accept comma-separated strings for list fields."""
        return _split_list(v)

    @field_validator("methods", "filters", "algorithms")
    @classmethod
    def validate_non_empty(cls, v: list) -> list:
        """Reject empty grids and drop duplicates keeping first occurrence."""
        if not v:
            raise ValueError("At least one entry is required")
        return list(dict.fromkeys(v))

    @field_validator("gamma", mode="before")
    @classmethod
    def parse_gamma(cls, v: Any) -> Any:
        """Accept "median" or anything convertible to a positive float."""
        if isinstance(v, str) and v.strip().lower() == "median":
            return "median"
        try:
            value = float(v)
        except (TypeError, ValueError):
            raise ValueError(f"Invalid gamma '{v}'. Use a positive number or 'median'")
        if not value > 0:
            raise ValueError(f"gamma must be positive, got {value}")
        return value

    @model_validator(mode="after")
    def validate_threshold_rule(self) -> "RunConfig":
        """threshold and target_density are mutually exclusive."""
        if self.threshold is not None and self.target_density is not None:
            raise ValueError("threshold and target_density are mutually exclusive")
        return self

    @property
    def effective_target_density(self) -> Optional[float]:
        """Density target used by threshold cells when no explicit theta is set."""
        if self.threshold is not None:
            return None
        return self.target_density if self.target_density is not None else DEFAULT_TARGET_DENSITY

    def resolve_out_dir(self, settings: Optional[Settings] = None) -> Path:
        """Output directory from the run, falling back to settings."""
        if self.out_dir is not None:
            return Path(self.out_dir)
        return (settings or get_settings()).output_dir


def load_run_config(
    config_path: Optional[Path] = None,
    overrides: Optional[dict[str, Any]] = None,
    defaults: Optional[dict[str, Any]] = None,
) -> RunConfig:
    """Build a RunConfig from defaults, an optional TOML file and CLI overrides.

    Later layers win. Keys may use dashes or underscores and may sit at top
    level or under a `[run]` table. Overrides whose value is None are treated
    as not given.

    Raises:
        ConfigurationError: If the file cannot be read or the result is invalid
    """
    values: dict[str, Any] = dict(defaults or {})
    if config_path is not None:
        try:
            with open(config_path, "rb") as f:
                raw = tomllib.load(f)
        except FileNotFoundError:
            raise ConfigurationError(f"Config file not found: {config_path}")
        except tomllib.TOMLDecodeError as e:
            raise ConfigurationError(f"Invalid TOML in {config_path}: {e}") from e
        if isinstance(raw.get("run"), dict):
            raw = raw["run"]
        values.update({key.replace("-", "_"): value for key, value in raw.items()})

    for key, value in (overrides or {}).items():
        if value is not None:
            values[key.replace("-", "_")] = value

    try:
        return RunConfig(**values)
    except PydanticValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigurationError(f"Invalid run configuration: {problems}") from e
