"""
Fock-space models for two- and four-mode photon states.

This module provides:
- Fixed-photon-number two-mode states and Stokes operators
- Sparse four-mode states for partially distinguishable photons
- Constructors for the uncorrelated, Holland-Burnett, PDC and Yurke states
"""

from .fock import FourModeState, Mode, StokesOperators, TwoModeState, build_stokes
from .states import PdcState, holland_burnett_state, pdc_state, uncorrelated_state, yurke_state

__all__ = [
    "FourModeState",
    "Mode",
    "StokesOperators",
    "TwoModeState",
    "build_stokes",
    "PdcState",
    "holland_burnett_state",
    "pdc_state",
    "uncorrelated_state",
    "yurke_state",
]
