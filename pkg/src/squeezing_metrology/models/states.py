"""
Constructors for the probe states: uncorrelated photons, Holland-Burnett,
truncated down-conversion and the Yurke state obtained by subtracting one
photon in the diagonal basis.
"""

import logging
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Dict, Mapping, Tuple, Union

import numpy as np
from scipy.special import comb

from ..core.exceptions import ValidationError, ZeroStateError
from .fock import (
    FourModeState,
    Mode,
    TwoModeBasis,
    TwoModeState,
    check_photon_number,
    apply_annihilation,
)

logger = logging.getLogger(__name__)


def uncorrelated_state(n_photons: int) -> TwoModeState:
    """N photons each in (|H> + |V>)/sqrt2; H-counts are Binomial(N, 1/2)."""
    n_photons = check_photon_number(n_photons, minimum=1)
    k = np.arange(n_photons + 1)
    amplitudes = np.sqrt(comb(n_photons, k, exact=False)) / 2.0 ** (n_photons / 2.0)
    return TwoModeState(TwoModeBasis(n_photons), amplitudes)


def yurke_state(n_photons: int) -> TwoModeState:
    """(|(N-1)/2, (N+1)/2> + |(N+1)/2, (N-1)/2>)/sqrt2 for odd N >= 3."""
    n_photons = check_photon_number(n_photons, minimum=3)
    if n_photons % 2 == 0:
        raise ValidationError(
            "Yurke states are defined for odd N only",
            field="N",
            value=n_photons,
            expected="odd N >= 3",
        )
    amplitudes = np.zeros(n_photons + 1, dtype=complex)
    amplitudes[(n_photons - 1) // 2] = 1.0 / math.sqrt(2.0)
    amplitudes[(n_photons + 1) // 2] = 1.0 / math.sqrt(2.0)
    return TwoModeState(TwoModeBasis(n_photons), amplitudes)


def holland_burnett_state(n_photons: int) -> TwoModeState:
    """Twin-Fock state |N/2, N/2> for even N >= 2."""
    n_photons = check_photon_number(n_photons, minimum=2)
    if n_photons % 2:
        raise ValidationError(
            "Holland-Burnett states are defined for even N only",
            field="N",
            value=n_photons,
            expected="even N >= 2",
        )
    amplitudes = np.zeros(n_photons + 1, dtype=complex)
    amplitudes[n_photons // 2] = 1.0
    return TwoModeState(TwoModeBasis(n_photons), amplitudes)


@dataclass(frozen=True, eq=False)
class PdcState:
    """
    Down-conversion output truncated at ``n_max`` photons.

    ``amplitudes`` maps the total photon number N (even) to the amplitude of
    |N/2, N/2>_HV, renormalized over the truncated support.
    """

    squeezing: float
    n_max: int
    amplitudes: Mapping[int, float]

    @property
    def pair_ratio(self) -> float:
        """Relative weight |amp_{N+2}/amp_N|^2 = tanh^2 r."""
        return math.tanh(self.squeezing) ** 2

    def photon_number_distribution(self) -> Dict[int, float]:
        return {n: a**2 for n, a in self.amplitudes.items()}

    def postselect(self, n_photons: int) -> TwoModeState:
        """Condition on N detected photons: the Holland-Burnett state."""
        if self.amplitudes.get(n_photons, 0.0) == 0.0:
            raise ZeroStateError(
                f"PDC state has no {n_photons}-photon component",
                details={"n_max": self.n_max, "squeezing": self.squeezing},
            )
        return holland_burnett_state(n_photons)


def pdc_state(squeezing: float, n_max: int = 6) -> PdcState:
    """Two-mode squeezed vacuum sum_N (tanh r)^(N/2) |N/2, N/2>, truncated and renormalised."""
    if not math.isfinite(squeezing) or squeezing < 0:
        raise ValidationError(
            "Squeezing parameter must be a finite nonnegative number",
            field="r",
            value=squeezing,
        )
    n_max = check_photon_number(n_max, field_name="N_max")
    if n_max % 2:
        raise ValidationError("Truncation N_max must be even", field="N_max", value=n_max)

    tanh_r = math.tanh(squeezing)
    raw = {n: tanh_r ** (n // 2) for n in range(0, n_max + 1, 2)}
    raw = {n: a for n, a in raw.items() if a != 0.0}
    norm = math.sqrt(sum(a**2 for a in raw.values()))
    amplitudes = {n: a / norm for n, a in raw.items()}

    logger.debug("PDC state r=%s truncated at %d photons: %s", squeezing, n_max, amplitudes)
    return PdcState(float(squeezing), n_max, MappingProxyType(amplitudes))


@dataclass(frozen=True, eq=False)
class SubtractionBranch:
    """One heralding outcome of the diagonal photon subtraction."""

    mode: Mode
    weight: float
    state: FourModeState

    @property
    def is_empty(self) -> bool:
        return self.weight == 0.0


@dataclass(frozen=True, eq=False)
class SubtractionResult:
    """Both branches of a_D rho a_D^dag + a_Dperp rho a_Dperp^dag."""

    diagonal: SubtractionBranch
    perpendicular: SubtractionBranch
    heralding_norm: float

    @property
    def branches(self) -> Tuple[SubtractionBranch, SubtractionBranch]:
        return self.diagonal, self.perpendicular


def subtract_one_photon_diagonal(
    state: Union[FourModeState, TwoModeState],
) -> SubtractionResult:
    """
    Remove one photon in the D/A basis from a pure state.

    Branch weights are proportional to the squared norms of a_D|psi> and
    a_Dperp|psi> and sum to one. Empty branches carry weight 0 and the zero
    vector.
    """
    if isinstance(state, TwoModeState):
        state = FourModeState.from_two_mode(state)
    if state.is_zero:
        raise ZeroStateError("Cannot subtract a photon from the zero vector")
    if state.n_total < 1:
        raise ValidationError("Photon subtraction needs at least one photon", field="state")

    state = state.normalize()
    raw: Dict[Mode, FourModeState] = {
        Mode.D: apply_annihilation(state, Mode.D),
        Mode.D_PERP: apply_annihilation(state, Mode.D_PERP),
    }
    norms = {mode: branch.norm_squared() for mode, branch in raw.items()}
    total = sum(norms.values())
    if total == 0.0:
        raise ZeroStateError("Both subtraction branches vanish")

    branches = {}
    for mode, branch in raw.items():
        normalized = branch.normalize() if norms[mode] > 0 else branch
        branches[mode] = SubtractionBranch(mode, norms[mode] / total, normalized)

    return SubtractionResult(branches[Mode.D], branches[Mode.D_PERP], total)


__all__ = [
    "uncorrelated_state",
    "yurke_state",
    "holland_burnett_state",
    "PdcState",
    "pdc_state",
    "SubtractionBranch",
    "SubtractionResult",
    "subtract_one_photon_diagonal",
]
