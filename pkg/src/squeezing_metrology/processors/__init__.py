"""
Physical processing stages between the probe state and the detector counts.

This module provides:
- The polarization interferometer and outcome distributions
- The partial-distinguishability and background-noise model
- The multiplexed detector efficiency model
"""

from .interferometer import PhaseGrid, TrigSeries, outcome_distribution
from .distinguishability import MismatchFringeModel, probability_with_mismatch
from .detector import CoincidenceRecord, EfficiencyTable, coincidence_efficiency

__all__ = [
    "PhaseGrid",
    "TrigSeries",
    "outcome_distribution",
    "MismatchFringeModel",
    "probability_with_mismatch",
    "CoincidenceRecord",
    "EfficiencyTable",
    "coincidence_efficiency",
]
