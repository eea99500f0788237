"""
Core components: configuration and exceptions.
"""

from .config import SqueezingConfig, get_config, reload_config, setup_logging
from .exceptions import (
    SqueezingError,
    ValidationError,
    ConfigurationError,
    DataParseError,
    ConvergenceError,
    NumericalError,
)

__all__ = [
    # Configuration
    "SqueezingConfig",
    "get_config",
    "reload_config",
    "setup_logging",

    # Exceptions
    "SqueezingError",
    "ValidationError",
    "ConfigurationError",
    "DataParseError",
    "ConvergenceError",
    "NumericalError",
]
