"""
Figures of merit for phase sensitivity.

Fisher information of the photon-number measurement, the spin squeezing
parameters xi_S and xi_R, and the phase error read from the S1 fringe.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import null_space

from ..core.config import get_config
from ..core.exceptions import IllConditionedError, ValidationError
from ..models.fock import TwoModeState, build_stokes, covariance, expectation, variance
from ..processors.interferometer import DistributionFn, PhaseGrid, outcome_distribution

logger = logging.getLogger(__name__)


def _probabilities(distribution_fn: DistributionFn, phi: float) -> np.ndarray:
    values = np.asarray(distribution_fn(phi), dtype=float)
    if values.ndim != 1 or not np.all(np.isfinite(values)):
        raise ValidationError("Distribution must be a finite probability vector", field="p")
    return values


def _fisher_terms(
    distribution_fn: DistributionFn, phi: float, h: float, eps_p: float, eps_d: float
) -> Tuple[float, bool]:
    """Return (F, ill_conditioned) from one central-difference stencil."""
    p_center = _probabilities(distribution_fn, phi)
    p_plus = _probabilities(distribution_fn, phi + h)
    p_minus = _probabilities(distribution_fn, phi - h)
    for values, at in ((p_center, phi), (p_plus, phi + h), (p_minus, phi - h)):
        if abs(values.sum() - 1.0) > 1e-8:
            raise ValidationError(
                "Distribution is not normalized", field="p", value=values.sum(), details={"phi": at}
            )

    first = (p_plus - p_minus) / (2.0 * h)
    second = (p_plus - 2.0 * p_center + p_minus) / h**2

    regular = p_center >= eps_p
    fisher = float(np.sum(first[regular] ** 2 / p_center[regular]))

    # p = 0 with p' = 0: the term tends to 2 p''
    vanishing = ~regular
    fisher += float(np.sum(2.0 * np.maximum(second[vanishing], 0.0)))
    ill_conditioned = bool(np.any(vanishing & (np.abs(first) >= eps_d)))
    return max(fisher, 0.0), ill_conditioned


def fisher_information(
    distribution_fn: DistributionFn,
    phi: float,
    h: Optional[float] = None,
    eps_p: Optional[float] = None,
    eps_d: Optional[float] = None,
    strict: bool = False,
) -> float:
    """
    F(phi) = sum_m p_m'(phi)^2 / p_m(phi) by central differences.

    Outcomes with p_m < eps_p contribute their limit 2 p_m''. If such an
    outcome also has |p_m'| >= eps_d the point is ill-conditioned: logged, or
    raised when ``strict``.
    """
    settings = get_config().get_fisher_config()
    h = settings["h"] if h is None else h
    if not h > 0:
        raise ValidationError("Derivative step must be positive", field="h", value=h)
    value, ill_conditioned = _fisher_terms(
        distribution_fn,
        phi,
        h,
        settings["eps_p"] if eps_p is None else eps_p,
        settings["eps_d"] if eps_d is None else eps_d,
    )
    if ill_conditioned:
        if strict:
            raise IllConditionedError(
                "Vanishing probability with nonzero slope", phi=phi, details={"h": h}
            )
        logger.warning("Ill-conditioned Fisher information at phi=%.6g", phi)
    return value


def locate_peak(
    grid: PhaseGrid, values: np.ndarray, tie_tolerance: Optional[float] = None
) -> Tuple[float, float]:
    """
    Maximum through the parabola on the discrete argmax and its neighbours.

    A grid spanning one full period wraps around at its ends. Points within
    ``tie_tolerance * |max|`` of the maximum form a plateau; the plateau point
    nearest phi = 0 (mod 2pi) is returned without interpolation.
    """
    if tie_tolerance is None:
        tie_tolerance = get_config().peak_tie_tolerance
    values = np.asarray(values, dtype=float)
    phases = grid.values
    top = float(np.max(values))
    tied = np.flatnonzero(values >= top - tie_tolerance * abs(top))
    if len(tied) > 1:
        wrapped = np.abs(np.angle(np.exp(1j * phases[tied])))
        choice = int(tied[np.argmin(wrapped)])
        return float(phases[choice]), top

    best = int(tied[0])
    n = len(phases)

    if 0 < best < n - 1:
        x = phases[best - 1 : best + 2]
        y = values[best - 1 : best + 2]
    elif grid.is_periodic:
        left, right = (best - 1) % n, (best + 1) % n
        x = np.array(
            [
                phases[left] - (2 * math.pi if best == 0 else 0.0),
                phases[best],
                phases[right] + (2 * math.pi if best == n - 1 else 0.0),
            ]
        )
        y = values[[left, best, right]]
    else:
        return float(phases[best]), float(values[best])

    curvature, slope, intercept = np.polyfit(x - x[1], y, 2)
    if curvature >= 0:
        return float(phases[best]), float(values[best])
    offset = -slope / (2.0 * curvature)
    offset = float(np.clip(offset, x[0] - x[1], x[2] - x[1]))
    peak = float(intercept + slope * offset + curvature * offset**2)
    return float(phases[best] + offset), max(peak, float(values[best]))


@dataclass(frozen=True, eq=False)
class FisherCurve:
    """F(phi) on a grid with its interpolated maximum."""

    grid: PhaseGrid
    values: np.ndarray
    step: float
    flagged: Tuple[float, ...] = ()
    f_max: float = field(init=False)
    phi_at_f_max: float = field(init=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.grid),) or not np.all(np.isfinite(values)):
            raise ValidationError("Fisher values must be finite, one per phase", field="F")
        if np.any(values < 0):
            raise ValidationError("Fisher information must be nonnegative", field="F")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        phi_peak, f_peak = locate_peak(self.grid, values)
        object.__setattr__(self, "f_max", f_peak)
        object.__setattr__(self, "phi_at_f_max", phi_peak)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"phi": self.grid.values, "F": self.values})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "phi": self.grid.values.tolist(),
            "F": self.values.tolist(),
            "h": self.step,
            "F_max": self.f_max,
            "phi_at_F_max": self.phi_at_f_max,
            "ill_conditioned_phi": list(self.flagged),
        }


def fisher_curve(
    distribution_fn: DistributionFn, grid: Optional[PhaseGrid] = None, h: Optional[float] = None
) -> FisherCurve:
    """Apply fisher_information at every grid point."""
    grid = grid or PhaseGrid.default()
    settings = get_config().get_fisher_config()
    h = settings["h"] if h is None else h

    values: List[float] = []
    flagged: List[float] = []
    for phi in grid:
        value, ill_conditioned = _fisher_terms(
            distribution_fn, phi, h, settings["eps_p"], settings["eps_d"]
        )
        values.append(value)
        if ill_conditioned:
            flagged.append(phi)
    if flagged:
        logger.warning("Fisher information ill-conditioned at %d phases", len(flagged))
    return FisherCurve(grid, np.array(values), h, tuple(flagged))


def mean_spin_vector(state: TwoModeState) -> np.ndarray:
    stokes = build_stokes(state.n_photons)
    return np.array([expectation(state, s) for s in stokes.components()])


def squeezing_parameter_xi_s(state: TwoModeState) -> float:
    """
    Minimum of Delta S_n / sqrt(N) over unit n orthogonal to <S>.

    The minimum is the smaller eigenvalue of the symmetrised 2x2 covariance
    of two Stokes components spanning that plane.
    """
    mean = mean_spin_vector(state)
    if np.linalg.norm(mean) <= get_config().hermitian_tolerance:
        raise ValidationError(
            "Mean spin vector vanishes; orthogonal plane undefined", field="state"
        )
    stokes = build_stokes(state.n_photons)
    plane = null_space(mean[np.newaxis, :])
    operators = [stokes.along(plane[:, i]) for i in range(2)]
    matrix = np.array([[covariance(state, a, b) for b in operators] for a in operators])
    smallest = max(float(np.linalg.eigvalsh(matrix)[0]), 0.0)
    return math.sqrt(smallest / state.n_photons)


def squeezing_phase_error(state: TwoModeState) -> float:
    """Delta S1 / |d<S1>/dphi| at phi = 0, where the slope is -<S2>."""
    stokes = build_stokes(state.n_photons)
    slope = expectation(state, stokes.s2)
    if abs(slope) <= get_config().hermitian_tolerance:
        raise ValidationError("Fringe slope <S2> vanishes at phi = 0", field="state")
    return math.sqrt(variance(state, stokes.s1)) / abs(slope)


def squeezing_parameter_xi_r(state: TwoModeState) -> float:
    """Phase error relative to the shot-noise limit."""
    return squeezing_phase_error(state) * math.sqrt(state.n_photons)


def shot_noise_limit(n_photons: int) -> float:
    return 1.0 / math.sqrt(n_photons)


def _s1_moments(probabilities: np.ndarray) -> Tuple[float, float]:
    n_photons = probabilities.size - 1
    s1 = 2.0 * np.arange(n_photons + 1) - n_photons
    mean = float(probabilities @ s1)
    return mean, max(float(probabilities @ s1**2) - mean**2, 0.0)


def squeezing_phase_error_from_fringe(
    distribution_fn: DistributionFn, phi: float = 0.0, h: Optional[float] = None
) -> float:
    """Delta S1 / |d<S1>/dphi| read from outcome statistics alone."""
    h = get_config().fisher_step if h is None else h
    _, spread = _s1_moments(_probabilities(distribution_fn, phi))
    upper, _ = _s1_moments(_probabilities(distribution_fn, phi + h))
    lower, _ = _s1_moments(_probabilities(distribution_fn, phi - h))
    slope = (upper - lower) / (2.0 * h)
    if abs(slope) <= 1e-12:
        raise ValidationError("Fringe slope vanishes", field="phi", value=phi)
    return math.sqrt(spread) / abs(slope)


@dataclass
class SensitivityReport:
    """Phase-sensitivity summary; None marks a quantity undefined for the state."""

    n_photons: int
    xi_s: Optional[float]
    xi_r: Optional[float]
    phase_error_squeezing: Optional[float]
    phase_error_snl: float
    phase_error_optimal: Optional[float]
    f_max: float
    phi_at_f_max: float
    phase_error_fringe: Optional[float] = None
    noise_suppression: Optional[float] = None
    xi_s_fringe: Optional[float] = None
    xi_r_fringe: Optional[float] = None
    ill_conditioned_phi: List[float] = field(default_factory=list)

    @property
    def fisher_advantage(self) -> float:
        """F_max / N; above one beats the shot-noise limit."""
        return self.f_max / self.n_photons

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.n_photons,
            "xi_S": self.xi_s,
            "xi_R": self.xi_r,
            "delta_phi_sq": self.phase_error_squeezing,
            "delta_phi_SNL": self.phase_error_snl,
            "delta_phi_opt": self.phase_error_optimal,
            "F_max": self.f_max,
            "phi_at_F_max": self.phi_at_f_max,
            "fisher_advantage": self.fisher_advantage,
            "delta_phi_fringe": self.phase_error_fringe,
            "noise_suppression": self.noise_suppression,
            "xi_S_fringe": self.xi_s_fringe,
            "xi_R_fringe": self.xi_r_fringe,
            "ill_conditioned_phi": self.ill_conditioned_phi,
        }


def _undefined_for(state: TwoModeState, quantity: Any, name: str) -> Optional[float]:
    try:
        return quantity(state)
    except ValidationError as e:
        logger.info("%s undefined for this state: %s", name, e.message)
        return None


def sensitivity_report(
    state: TwoModeState,
    grid: Optional[PhaseGrid] = None,
    distribution_fn: Optional[DistributionFn] = None,
) -> Tuple[SensitivityReport, FisherCurve]:
    """
    Summarise a probe state.

    Squeezing quantities come from the pure state; Fisher information, the
    fringe readout and the fringe-derived xi_S and xi_R from ``distribution_fn``
    (default: the ideal interferometer).
    """
    if distribution_fn is None:

        def distribution_fn(phi: float) -> np.ndarray:
            return outcome_distribution(state, phi)

    curve = fisher_curve(distribution_fn, grid)
    n_photons = state.n_photons

    _, spread = _s1_moments(_probabilities(distribution_fn, 0.0))
    fringe_error: Optional[float]
    try:
        fringe_error = squeezing_phase_error_from_fringe(distribution_fn)
    except ValidationError:
        fringe_error = None

    report = SensitivityReport(
        n_photons=n_photons,
        xi_s=_undefined_for(state, squeezing_parameter_xi_s, "xi_S"),
        xi_r=_undefined_for(state, squeezing_parameter_xi_r, "xi_R"),
        phase_error_squeezing=_undefined_for(state, squeezing_phase_error, "delta_phi_sq"),
        phase_error_snl=shot_noise_limit(n_photons),
        phase_error_optimal=1.0 / math.sqrt(curve.f_max) if curve.f_max > 0 else None,
        f_max=curve.f_max,
        phi_at_f_max=curve.phi_at_f_max,
        phase_error_fringe=fringe_error,
        noise_suppression=n_photons / spread if spread > 1e-12 else None,
        xi_s_fringe=math.sqrt(spread / n_photons),
        xi_r_fringe=None if fringe_error is None else fringe_error * math.sqrt(n_photons),
        ill_conditioned_phi=list(curve.flagged),
    )
    return report, curve


__all__ = [
    "fisher_information",
    "locate_peak",
    "FisherCurve",
    "fisher_curve",
    "mean_spin_vector",
    "squeezing_parameter_xi_s",
    "squeezing_phase_error",
    "squeezing_parameter_xi_r",
    "shot_noise_limit",
    "squeezing_phase_error_from_fringe",
    "SensitivityReport",
    "sensitivity_report",
]
