"""
Configuration management for the squeezing metrology toolkit.

Every numeric default used by the simulation, fitting and Monte-Carlo code
lives here so that it can be overridden from the environment or a ``.env``
file. Command-line flags take precedence over both.
"""

import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv
import pydantic
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class SqueezingConfig(BaseSettings):
    """
    Main configuration for the squeezing metrology toolkit.

    Values are read from ``SQUEEZING_*`` environment variables.
    """

    model_config = SettingsConfigDict(
        env_prefix="SQUEEZING_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Numerical tolerances
    norm_tolerance: float = Field(1e-12, description="Tolerance on state norms")
    hermitian_tolerance: float = Field(
        1e-10, description="Tolerance for Hermiticity and commutator checks"
    )

    # Fisher information
    fisher_step: float = Field(1e-4, gt=0, description="Central-difference step in rad")
    fisher_eps_p: float = Field(1e-12, gt=0, description="Probability floor for 0/0 guard")
    fisher_eps_d: float = Field(
        1e-6, gt=0, description="Derivative threshold that flags ill-conditioned points"
    )
    peak_tie_tolerance: float = Field(
        1e-6, ge=0, description="Relative spread below which Fisher maxima count as tied"
    )

    # Fringe fitting
    fit_starts: int = Field(8, ge=1, description="Multi-start phase seeds over [-pi, pi)")
    fit_max_evaluations: int = Field(10000, ge=10, description="Objective evaluation cap")
    fit_tolerance: float = Field(1e-10, gt=0, description="Objective decrease tolerance")

    # Monte-Carlo
    monte_carlo_iterations: int = Field(200, ge=1, description="Monte-Carlo band iterations")
    default_seed: Optional[int] = Field(None, description="Seed used when --seed is omitted")
    max_workers: int = Field(4, ge=1, description="Worker threads for Monte-Carlo runs")

    # Output
    float_digits: int = Field(17, ge=1, le=17, description="Significant digits on the wire")
    phase_step: float = Field(math.pi / 15, gt=0, description="Default phase grid step")

    # Logging Configuration
    logging_level: str = Field("WARNING", description="Logging level")
    logging_format: str = Field(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="Logging format",
    )

    @field_validator("logging_level")
    @classmethod
    def validate_logging_level(cls, v: str) -> str:
        """Validate logging level."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"Invalid logging level: {v}. Must be one of {valid_levels}")
        return v.upper()

    def get_fisher_config(self) -> Dict[str, float]:
        """Get finite-difference Fisher information settings."""
        return {
            "h": self.fisher_step,
            "eps_p": self.fisher_eps_p,
            "eps_d": self.fisher_eps_d,
        }

    def get_fit_config(self) -> Dict[str, Any]:
        """Get fringe-fit optimizer settings."""
        return {
            "starts": self.fit_starts,
            "max_evaluations": self.fit_max_evaluations,
            "tolerance": self.fit_tolerance,
        }

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to dictionary."""
        return self.model_dump()


def setup_logging(config: Optional[SqueezingConfig] = None, level: Optional[str] = None) -> None:
    """Send logs to stderr so that data written to stdout stays clean."""
    config = config or get_config()
    logging.basicConfig(
        level=getattr(logging, (level or config.logging_level).upper()),
        format=config.logging_format,
        stream=sys.stderr,
        force=True,
    )


def _load_environment() -> None:
    """Load environment variables from the nearest .env file."""
    env_paths = [
        Path(".env"),
        Path(__file__).parent.parent.parent.parent / ".env",
    ]

    for env_path in env_paths:
        if env_path.exists():
            load_dotenv(env_path, override=False)
            break


def _build_config() -> SqueezingConfig:
    try:
        return SqueezingConfig()
    except pydantic.ValidationError as e:
        first = e.errors()[0]
        section = ".".join(str(part) for part in first["loc"])
        raise ConfigurationError(
            f"Invalid SQUEEZING_{section.upper()}: {first['msg']}",
            config_section=section,
            details={"errors": e.error_count()},
        ) from e


# Global configuration instance
_load_environment()
config = _build_config()


def get_config() -> SqueezingConfig:
    """Get the global configuration instance."""
    return config


def reload_config() -> SqueezingConfig:
    """Reload the configuration."""
    global config
    _load_environment()
    config = _build_config()
    return config
