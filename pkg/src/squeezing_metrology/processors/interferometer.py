"""
Polarization interferometer: the phase rotation exp(-i S3 phi / 2) and the
outcome statistics it produces at the H/V photon-number detectors.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.linalg import expm
from scipy.special import factorial

from ..core.config import get_config
from ..core.exceptions import DataParseError, ValidationError
from ..models.fock import (
    FourModeState,
    TwoModeState,
    build_stokes,
    check_photon_number,
    expectation,
)

logger = logging.getLogger(__name__)

DistributionFn = Callable[[float], np.ndarray]

# Tolerance on the sum of a probability row
_ROW_SUM_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    """Strictly increasing, finite phase settings in radians."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size == 0:
            raise ValidationError("Phase grid is empty", field="phi")
        if not np.all(np.isfinite(values)):
            raise ValidationError("Phase grid holds non-finite values", field="phi")
        if values.size > 1 and np.any(np.diff(values) <= 0):
            raise ValidationError(
                "Phase grid must be strictly increasing", field="phi", expected="increasing"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_range(cls, start: float, stop: float, step: float) -> "PhaseGrid":
        """Points ``start, start + step, ...`` strictly below ``stop``."""
        if not step > 0 or not math.isfinite(step):
            raise ValidationError("Phase step must be positive", field="phi_step", value=step)
        if not stop > start:
            raise ValidationError(
                "Phase range is empty", field="phi_stop", value=stop, expected=f"> {start}"
            )
        count = int(math.ceil((stop - start) / step - 1e-9))
        return cls(start + step * np.arange(count))

    @classmethod
    def default(cls) -> "PhaseGrid":
        """One full period sampled with the configured step."""
        return cls.from_range(0.0, 2.0 * math.pi, get_config().phase_step)

    def __len__(self) -> int:
        return int(self.values.size)

    def __iter__(self) -> Iterator[float]:
        return iter(float(v) for v in self.values)

    @property
    def is_periodic(self) -> bool:
        """True for a uniform grid covering exactly one 2*pi period."""
        if self.values.size < 3:
            return False
        steps = np.diff(self.values)
        step = steps[0]
        uniform = np.allclose(steps, step, rtol=1e-9, atol=1e-12)
        return bool(uniform and abs(self.values[-1] + step - self.values[0] - 2 * math.pi) < 1e-9)


@dataclass(frozen=True)
class PhaseMapping:
    """Linear map from recorded wave-plate settings to interferometer phase."""

    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.scale) or self.scale == 0.0:
            raise ValidationError("Phase scale must be finite and nonzero", field="phase_scale")
        if not math.isfinite(self.offset):
            raise ValidationError("Phase offset must be finite", field="phase_offset")

    def apply(self, settings: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return self.scale * np.asarray(settings, dtype=float) + self.offset


def _polynomial_power(coefficients: np.ndarray, power: int) -> np.ndarray:
    result = np.array([1.0])
    for _ in range(power):
        result = np.convolve(result, coefficients)
    return result


def phase_unitary(n_photons: int, phi: float) -> np.ndarray:
    """
    exp(-i S3 phi / 2) on the N-photon basis, built from the mode transform
    a_H^dag -> c a_H^dag + s a_V^dag, a_V^dag -> -s a_H^dag + c a_V^dag with
    c = cos(phi/2), s = sin(phi/2).

    Column k holds the image of |k, N-k>; the matrix is real orthogonal.
    """
    n_photons = check_photon_number(n_photons)
    if not math.isfinite(phi):
        raise ValidationError("Phase must be finite", field="phi", value=phi)

    c, s = math.cos(phi / 2.0), math.sin(phi / 2.0)
    # sqrt(j! (N-j)!) for every basis index
    j = np.arange(n_photons + 1)
    weights = np.sqrt(factorial(j) * factorial(n_photons - j))

    unitary = np.empty((n_photons + 1, n_photons + 1))
    for k in range(n_photons + 1):
        column = np.convolve(
            _polynomial_power(np.array([s, c]), k),
            _polynomial_power(np.array([c, -s]), n_photons - k),
        )
        unitary[:, k] = column * weights / weights[k]
    return unitary.astype(complex)


def phase_unitary_expm(n_photons: int, phi: float) -> np.ndarray:
    """Same rotation by direct matrix exponential of the generator."""
    stokes = build_stokes(n_photons)
    return expm(-0.5j * phi * stokes.s3)


def evolve(state: TwoModeState, phi: float) -> TwoModeState:
    return state.evolve(phase_unitary(state.n_photons, phi))


def evolve_four_mode(state: FourModeState, phi: float) -> FourModeState:
    """
    Apply the rotation to both the (H, V) and (H_perp, V_perp) pairs.

    The generator S3 + S3_perp conserves the photon number of each pair, so
    every sector (Na, Nb) evolves as U_Na psi U_Nb^T.
    """
    evolved: Dict[tuple, complex] = {}
    for (n_a, n_b), amplitudes in state.sectors().items():
        block = np.zeros((n_a + 1, n_b + 1), dtype=complex)
        for (n_h, _, n_hp, _), amplitude in amplitudes.items():
            block[n_h, n_hp] = amplitude
        block = phase_unitary(n_a, phi) @ block @ phase_unitary(n_b, phi).T
        for k_a in range(n_a + 1):
            for k_b in range(n_b + 1):
                if block[k_a, k_b] != 0:
                    evolved[(k_a, n_a - k_a, k_b, n_b - k_b)] = block[k_a, k_b]
    return FourModeState(state.n_total, evolved)


def four_mode_outcome_distribution(state: FourModeState, phi: float) -> np.ndarray:
    """P(m) with m = n_H + n_Hperp, the photon count at the H detector."""
    evolved = evolve_four_mode(state, phi)
    probabilities = np.zeros(state.n_total + 1)
    for (n_h, _, n_hp, _), amplitude in evolved.items():
        probabilities[n_h + n_hp] += abs(amplitude) ** 2
    norm = probabilities.sum()
    if norm == 0.0:
        raise ValidationError("Four-mode state has zero norm", field="state")
    return probabilities / norm


def outcome_distribution(state: TwoModeState, phi: float) -> np.ndarray:
    """Probabilities of m photons at the H detector after the rotation."""
    return np.abs(phase_unitary(state.n_photons, phi) @ state.amplitudes) ** 2


def fringe_mean(state: TwoModeState, grid: Union[PhaseGrid, Sequence[float]]) -> np.ndarray:
    """<S1>(phi) = <psi| U^dag S1 U |psi> on every grid point."""
    if not isinstance(grid, PhaseGrid):
        grid = PhaseGrid(np.asarray(grid, dtype=float))
    s1 = build_stokes(state.n_photons).s1
    return np.array([expectation(evolve(state, phi), s1) for phi in grid])


@dataclass(frozen=True, eq=False)
class FringeTable:
    """Outcome probabilities P(m | phi) on a phase grid, one row per phase."""

    grid: PhaseGrid
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        table = np.array(self.probabilities, dtype=float)
        if table.ndim != 2 or table.shape[0] != len(self.grid):
            raise ValidationError(
                "Probability table must have one row per phase",
                field="probabilities",
                value=table.shape,
            )
        if np.any(table < -1e-14) or np.any(table > 1.0 + 1e-12):
            raise ValidationError("Probabilities must lie in [0, 1]", field="probabilities")
        sums = table.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > _ROW_SUM_TOLERANCE):
            raise ValidationError(
                "Probability rows must sum to one",
                field="probabilities",
                value=float(np.max(np.abs(sums - 1.0))),
            )
        table = np.clip(table, 0.0, 1.0)
        table.setflags(write=False)
        object.__setattr__(self, "probabilities", table)

    @property
    def n_photons(self) -> int:
        return self.probabilities.shape[1] - 1

    def columns(self) -> List[str]:
        return ["phi"] + [f"p{m}" for m in range(self.n_photons + 1)]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.probabilities, columns=self.columns()[1:])
        frame.insert(0, "phi", self.grid.values)
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, source: Optional[str] = None) -> "FringeTable":
        outcome_columns = [c for c in frame.columns if c != "phi"]
        expected = [f"p{m}" for m in range(len(outcome_columns))]
        if "phi" not in frame.columns or outcome_columns != expected:
            raise DataParseError(
                f"Fringe table columns must be phi,{','.join(expected)}",
                file_path=source,
                line=1,
            )
        return cls(PhaseGrid(frame["phi"].to_numpy(float)), frame[expected].to_numpy(float))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_photons": self.n_photons,
            "phi": self.grid.values.tolist(),
            "probabilities": self.probabilities.tolist(),
        }


def fringe_table(
    distribution_fn: DistributionFn, grid: Optional[PhaseGrid] = None
) -> FringeTable:
    """Tabulate a distribution function over a grid (default: one period)."""
    grid = grid or PhaseGrid.default()
    rows = [np.asarray(distribution_fn(phi), dtype=float) for phi in grid]
    logger.debug("Tabulated %d phases, %d outcomes", len(rows), rows[0].size)
    return FringeTable(grid, np.vstack(rows))


@dataclass(frozen=True, eq=False)
class FringeStatistics:
    """Mean and variance of S1 = 2m - N per phase."""

    grid: PhaseGrid
    mean: np.ndarray
    variance: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"phi": self.grid.values, "mean_s1": self.mean, "variance_s1": self.variance}
        )


def fringe_statistics(table: FringeTable) -> FringeStatistics:
    s1_values = 2.0 * np.arange(table.n_photons + 1) - table.n_photons
    mean = table.probabilities @ s1_values
    variance = table.probabilities @ s1_values**2 - mean**2
    return FringeStatistics(table.grid, mean, np.maximum(variance, 0.0))


@dataclass(frozen=True, eq=False)
class TrigSeries:
    """
    Outcome probabilities as trigonometric polynomials in phi.

    For N photons every P(m | phi) is a polynomial of degree N in cos(phi)
    and sin(phi), so 2N + 1 equally spaced samples determine it exactly.
    """

    constant: np.ndarray
    cosine: np.ndarray
    sine: np.ndarray

    @property
    def degree(self) -> int:
        return int(self.cosine.shape[0])

    @property
    def n_outcomes(self) -> int:
        return int(self.constant.size)

    @classmethod
    def fit(cls, distribution_fn: DistributionFn, degree: int) -> "TrigSeries":
        degree = check_photon_number(degree, field_name="degree")
        n_samples = 2 * degree + 1
        phases = 2.0 * math.pi * np.arange(n_samples) / n_samples
        samples = np.vstack([np.asarray(distribution_fn(phi), dtype=float) for phi in phases])

        spectrum = np.fft.rfft(samples, axis=0) / n_samples
        return cls(
            constant=spectrum[0].real,
            cosine=2.0 * spectrum[1:].real,
            sine=-2.0 * spectrum[1:].imag,
        )

    @classmethod
    def from_state(cls, state: TwoModeState) -> "TrigSeries":
        return cls.fit(lambda phi: outcome_distribution(state, phi), state.n_photons)

    def __call__(self, phi: Union[float, np.ndarray]) -> np.ndarray:
        """
        Shape (n_outcomes,) for a scalar phase, (len(phi), n_outcomes) otherwise.

        Rounding leaves values of order -1e-19 where a probability vanishes;
        they are clipped to zero and each row renormalised.
        """
        phi = np.asarray(phi, dtype=float)
        angles = np.multiply.outer(phi, np.arange(1, self.degree + 1))
        values = self.constant + np.cos(angles) @ self.cosine + np.sin(angles) @ self.sine
        values = np.maximum(values, 0.0)
        return values / values.sum(axis=-1, keepdims=True)

    def derivative(self, phi: Union[float, np.ndarray]) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        orders = np.arange(1, self.degree + 1)
        angles = np.multiply.outer(phi, orders)
        return (np.cos(angles) * orders) @ self.sine - (np.sin(angles) * orders) @ self.cosine


__all__ = [
    "DistributionFn",
    "PhaseGrid",
    "PhaseMapping",
    "phase_unitary",
    "phase_unitary_expm",
    "evolve",
    "evolve_four_mode",
    "four_mode_outcome_distribution",
    "outcome_distribution",
    "fringe_mean",
    "FringeTable",
    "fringe_table",
    "FringeStatistics",
    "fringe_statistics",
    "TrigSeries",
]
