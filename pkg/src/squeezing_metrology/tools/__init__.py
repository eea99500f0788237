"""Sensitivity metrics and inference tools."""

from .metrology import FisherCurve, SensitivityReport, fisher_curve, sensitivity_report
from .estimation import FitResult, MonteCarloBand, fit_fringe, monte_carlo_fisher

__all__ = [
    "FisherCurve",
    "SensitivityReport",
    "fisher_curve",
    "sensitivity_report",
    "FitResult",
    "MonteCarloBand",
    "fit_fringe",
    "monte_carlo_fisher",
]
