"""
Tests for configuration loading.
"""

import logging
import math

import pydantic
import pytest

from squeezing_metrology.core.config import SqueezingConfig, get_config, setup_logging
from squeezing_metrology.core.exceptions import ConfigurationError, exit_code_for


def test_defaults():
    """Test the documented numeric defaults."""
    config = SqueezingConfig()
    assert config.fisher_step == 1e-4
    assert config.fisher_eps_p == 1e-12
    assert config.fit_starts == 8
    assert config.fit_max_evaluations == 10000
    assert config.monte_carlo_iterations == 200
    assert config.float_digits == 17
    assert config.phase_step == pytest.approx(math.pi / 15)
    assert config.default_seed is None


def test_section_helpers():
    config = SqueezingConfig()
    assert set(config.get_fisher_config()) == {"h", "eps_p", "eps_d"}
    assert config.get_fit_config() == {
        "starts": config.fit_starts,
        "max_evaluations": config.fit_max_evaluations,
        "tolerance": config.fit_tolerance,
    }
    assert config.to_dict()["logging_level"] == "WARNING"


def test_environment_override(configure):
    """Test that SQUEEZING_* variables reach the global configuration."""
    config = configure(fit_starts=3, default_seed=42, logging_level="debug")
    assert config is get_config()
    assert config.fit_starts == 3
    assert config.default_seed == 42
    assert config.logging_level == "DEBUG"


def test_invalid_values_rejected():
    with pytest.raises(pydantic.ValidationError):
        SqueezingConfig(logging_level="LOUD")
    with pytest.raises(pydantic.ValidationError):
        SqueezingConfig(fisher_step=0)
    with pytest.raises(pydantic.ValidationError):
        SqueezingConfig(float_digits=18)


def test_setup_logging_level():
    setup_logging(level="INFO")
    assert logging.getLogger().level == logging.INFO
    setup_logging()
    assert logging.getLogger().level == getattr(logging, get_config().logging_level)


def test_invalid_environment_raises_configuration_error(configure):
    before = get_config()
    with pytest.raises(ConfigurationError) as info:
        configure(logging_level="LOUD")
    assert info.value.details["config_section"] == "logging_level"
    assert "SQUEEZING_LOGGING_LEVEL" in info.value.message
    assert isinstance(info.value.__cause__, pydantic.ValidationError)
    assert exit_code_for(info.value) == 2
    assert get_config() is before
