"""
Spin-Squeezing Metrology

Simulation and analysis of few-photon two-mode interferometry with
spin-squeezed probe states.
"""

__version__ = "0.1.0"
__description__ = "Few-photon spin-squeezing interferometry toolkit"

# Core imports
from .core.config import SqueezingConfig, get_config
from .core.exceptions import (
    SqueezingError,
    ValidationError,
    ConvergenceError,
    DataParseError,
)

# States and interferometer
from .models.fock import TwoModeState, FourModeState, build_stokes
from .models.states import (
    uncorrelated_state,
    yurke_state,
    holland_burnett_state,
    pdc_state,
    subtract_one_photon_diagonal,
)
from .processors.interferometer import PhaseGrid, outcome_distribution, fringe_table
from .processors.distinguishability import probability_with_mismatch, MismatchFringeModel
from .processors.detector import EfficiencyTable, CoincidenceRecord

# Analysis
from .tools.metrology import fisher_information, fisher_curve, sensitivity_report
from .tools.estimation import fit_fringe, monte_carlo_fisher, mle_phase

__all__ = [
    # Core
    "SqueezingConfig",
    "get_config",

    # Exceptions
    "SqueezingError",
    "ValidationError",
    "ConvergenceError",
    "DataParseError",

    # States
    "TwoModeState",
    "FourModeState",
    "build_stokes",
    "uncorrelated_state",
    "yurke_state",
    "holland_burnett_state",
    "pdc_state",
    "subtract_one_photon_diagonal",

    # Processors
    "PhaseGrid",
    "outcome_distribution",
    "fringe_table",
    "probability_with_mismatch",
    "MismatchFringeModel",
    "EfficiencyTable",
    "CoincidenceRecord",

    # Tools
    "fisher_information",
    "fisher_curve",
    "sensitivity_report",
    "fit_fringe",
    "monte_carlo_fisher",
    "mle_phase",
]


def get_version() -> str:
    """Get the current version of the package."""
    return __version__
