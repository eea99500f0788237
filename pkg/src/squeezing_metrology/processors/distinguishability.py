"""
Partial distinguishability between the H and V down-conversion photons and
phase-insensitive background noise.

The V photons of the source overlap with the H photons with probability I;
the rest occupy the orthogonal temporal mode V_perp. After the diagonal
photon subtraction the (H, V) and (H_perp, V_perp) pairs evolve identically
and the H detector counts photons from both.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, List, Optional, Tuple, Union

import numpy as np
from scipy.special import comb

from ..core.exceptions import ValidationError
from ..models.fock import FourModeState, Mode, check_photon_number
from ..models.states import subtract_one_photon_diagonal
from .interferometer import TrigSeries, four_mode_outcome_distribution

logger = logging.getLogger(__name__)

_WEIGHT_TOLERANCE = 1e-12


def _check_unit_interval(value: float, field_name: str) -> float:
    value = float(value)
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise ValidationError(
            f"{field_name} must lie in [0, 1]", field=field_name, value=value, expected="[0, 1]"
        )
    return value


def _check_odd_photon_number(n_photons: int) -> int:
    n_photons = check_photon_number(n_photons, minimum=3)
    if n_photons % 2 == 0:
        raise ValidationError(
            "The mismatched source is defined for odd N only",
            field="N",
            value=n_photons,
            expected="odd N >= 3",
        )
    return n_photons


@dataclass(frozen=True)
class NoiseParameter:
    """Weight s of the uniform background in (1 - s) P + s / (N + 1)."""

    value: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", _check_unit_interval(self.value, "s"))

    def compose(self, other: "NoiseParameter") -> "NoiseParameter":
        """Two successive mixtures equal one with s1 + s2 - s1 s2."""
        return NoiseParameter(self.value + other.value - self.value * other.value)

    def __float__(self) -> float:
        return self.value


NoiseLike = Union[NoiseParameter, float]


@dataclass(frozen=True, eq=False)
class MixtureComponent:
    """One incoherent branch of a mixture."""

    weight: float
    state: FourModeState
    distinguishable: int
    herald: Optional[Mode] = None


@dataclass(frozen=True, eq=False)
class BranchMixture:
    """Incoherent mixture of four-mode pure states."""

    indistinguishability: float
    components: Tuple[MixtureComponent, ...]

    def __post_init__(self) -> None:
        _check_unit_interval(self.indistinguishability, "I")
        if not self.components:
            raise ValidationError("Mixture has no components", field="components")
        weights = np.array([c.weight for c in self.components])
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > _WEIGHT_TOLERANCE:
            raise ValidationError(
                "Mixture weights must be nonnegative and sum to one",
                field="weights",
                value=float(weights.sum()),
            )
        for component in self.components:
            if abs(component.state.norm_squared() - 1.0) > _WEIGHT_TOLERANCE:
                raise ValidationError("Mixture states must be normalized", field="state")
        totals = {c.state.n_total for c in self.components}
        if len(totals) != 1:
            raise ValidationError("Mixture states hold different photon numbers", value=totals)

    @property
    def n_total(self) -> int:
        return self.components[0].state.n_total

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    def __iter__(self) -> Iterator[Tuple[float, FourModeState]]:
        return iter((c.weight, c.state) for c in self.components)

    def __len__(self) -> int:
        return len(self.components)


def overlap_weights(n_pairs: int, indistinguishability: float) -> np.ndarray:
    """C_d = C(n, d) I^(n-d) (1-I)^d for d = 0..n."""
    indistinguishability = _check_unit_interval(indistinguishability, "I")
    d = np.arange(n_pairs + 1)
    return (
        comb(n_pairs, d)
        * np.power(indistinguishability, n_pairs - d)
        * np.power(1.0 - indistinguishability, d)
    )


def mismatched_source(n_photons: int, indistinguishability: float) -> BranchMixture:
    """
    Source state before subtraction for N detected photons.

    Each arm carries n = (N + 1)/2 photons; branch d has d of the V photons in
    V_perp. Coherences between different d are dropped.
    """
    n_photons = _check_odd_photon_number(n_photons)
    n_pairs = (n_photons + 1) // 2
    weights = overlap_weights(n_pairs, indistinguishability)

    components = [
        MixtureComponent(
            float(weight),
            FourModeState.basis_state((n_pairs, n_pairs - d, 0, d)),
            distinguishable=d,
        )
        for d, weight in enumerate(weights)
        if weight > 0
    ]
    logger.debug(
        "Mismatched source N=%d I=%s: %d branches",
        n_photons,
        indistinguishability,
        len(components),
    )
    return BranchMixture(float(indistinguishability), tuple(components))


def subtract_from_mixture(mixture: BranchMixture) -> BranchMixture:
    """
    Herald one photon in D or D_perp on every branch.

    Each outcome is weighted by C_d times the squared norm of a_X |psi_d>,
    then the whole mixture is renormalized.
    """
    raw: List[MixtureComponent] = []
    for component in mixture.components:
        result = subtract_one_photon_diagonal(component.state)
        for branch in result.branches:
            if branch.is_empty:
                continue
            raw.append(
                MixtureComponent(
                    component.weight * result.heralding_norm * branch.weight,
                    branch.state,
                    component.distinguishable,
                    branch.mode,
                )
            )
    total = sum(c.weight for c in raw)
    components = tuple(
        MixtureComponent(c.weight / total, c.state, c.distinguishable, c.herald) for c in raw
    )
    return BranchMixture(mixture.indistinguishability, components)


def mixture_outcome_distribution(mixture: BranchMixture, phi: float) -> np.ndarray:
    """Weighted sum of H-detector distributions over the mixture."""
    probabilities = np.zeros(mixture.n_total + 1)
    for weight, state in mixture:
        probabilities += weight * four_mode_outcome_distribution(state, phi)
    return probabilities


def probability_with_mismatch(
    n_photons: int, indistinguishability: float, phi: float
) -> np.ndarray:
    """P(m | phi) for the subtracted state with overlap I."""
    source = mismatched_source(n_photons, indistinguishability)
    return mixture_outcome_distribution(subtract_from_mixture(source), phi)


def add_phase_insensitive_noise(
    probabilities: np.ndarray, noise: NoiseLike, n_photons: Optional[int] = 5
) -> np.ndarray:
    """
    Mix a distribution with the uniform one: (1 - s) P + s / (N + 1).

    ``n_photons`` fixes the expected length N + 1; pass None to accept any
    length.
    """
    s = noise.value if isinstance(noise, NoiseParameter) else NoiseParameter(noise).value
    probabilities = np.asarray(probabilities, dtype=float)
    if probabilities.ndim != 1 or probabilities.size == 0:
        raise ValidationError("Probabilities must be a nonempty vector", field="P")
    if n_photons is not None and probabilities.size != n_photons + 1:
        raise ValidationError(
            "Probability vector has the wrong length",
            field="P",
            value=probabilities.size,
            expected=str(n_photons + 1),
        )
    if abs(probabilities.sum() - 1.0) > 1e-10:
        raise ValidationError("Probabilities must sum to one", field="P", value=probabilities.sum())
    return (1.0 - s) * probabilities + s / probabilities.size


class MismatchFringeModel:
    """
    Fast evaluation of (1 - s) sum_d w_d(I) Q_d(phi) + s / (N + 1).

    Q_d is the subtracted, rotated distribution of source branch d; it does not
    depend on I, so it is cached once per N as an exact trigonometric series.
    w_d(I) is proportional to C_d(I) times the heralding norm of branch d.
    """

    def __init__(self, n_photons: int):
        self.n_photons = _check_odd_photon_number(n_photons)
        self.n_pairs = (self.n_photons + 1) // 2
        self._series: List[TrigSeries] = []
        heralding = []
        for d in range(self.n_pairs + 1):
            source = BranchMixture(
                1.0,
                (
                    MixtureComponent(
                        1.0, FourModeState.basis_state((self.n_pairs, self.n_pairs - d, 0, d)), d
                    ),
                ),
            )
            heralding.append(subtract_one_photon_diagonal(source.components[0].state).heralding_norm)
            subtracted = subtract_from_mixture(source)
            self._series.append(
                TrigSeries.fit(
                    lambda phi, m=subtracted: mixture_outcome_distribution(m, phi), self.n_photons
                )
            )
        self._heralding = np.array(heralding)
        logger.info("Cached %d branch fringes for N=%d", len(self._series), self.n_photons)

    def branch_weights(self, indistinguishability: float) -> np.ndarray:
        weights = overlap_weights(self.n_pairs, indistinguishability) * self._heralding
        return weights / weights.sum()

    def probabilities(
        self,
        phi: Union[float, np.ndarray],
        indistinguishability: float,
        noise: NoiseLike = 0.0,
    ) -> np.ndarray:
        """Shape (n_outcomes,) for scalar phi, (len(phi), n_outcomes) for arrays."""
        s = noise.value if isinstance(noise, NoiseParameter) else NoiseParameter(noise).value
        weights = self.branch_weights(indistinguishability)
        branch_values = np.stack([series(phi) for series in self._series])
        ideal = np.tensordot(weights, branch_values, axes=1)
        return (1.0 - s) * ideal + s / (self.n_photons + 1)

    def distribution_fn(
        self, indistinguishability: float, noise: NoiseLike = 0.0
    ) -> Callable[[float], np.ndarray]:
        indistinguishability = _check_unit_interval(indistinguishability, "I")
        s = float(noise) if isinstance(noise, NoiseParameter) else NoiseParameter(noise).value
        return lambda phi: self.probabilities(phi, indistinguishability, s)


@lru_cache(maxsize=8)
def mismatch_model(n_photons: int) -> MismatchFringeModel:
    """Shared model per photon number."""
    return MismatchFringeModel(n_photons)


__all__ = [
    "NoiseParameter",
    "MixtureComponent",
    "BranchMixture",
    "overlap_weights",
    "mismatched_source",
    "subtract_from_mixture",
    "mixture_outcome_distribution",
    "probability_with_mismatch",
    "add_phase_insensitive_noise",
    "MismatchFringeModel",
    "mismatch_model",
]
