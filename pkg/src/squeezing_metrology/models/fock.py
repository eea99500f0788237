"""
Fixed-photon-number Fock spaces for two and four polarization modes.

The two-mode basis is ordered by the horizontal occupation ``k = n_H`` so
that ``S1`` is ``diag(2k - N)`` and the detector outcome index coincides with
``k``. Four-mode states (H, V, H_perp, V_perp) are kept sparse, keyed by the
occupation tuple.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from types import MappingProxyType
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from ..core.config import get_config
from ..core.exceptions import (
    DimensionMismatchError,
    NumericalError,
    ValidationError,
    ZeroStateError,
)

logger = logging.getLogger(__name__)

Occupation = Tuple[int, int, int, int]

_SQRT_HALF = 1.0 / math.sqrt(2.0)


class Mode(str, Enum):
    """Optical modes addressable by ladder operators."""

    H = "H"
    V = "V"
    H_PERP = "H_perp"
    V_PERP = "V_perp"
    D = "D"
    D_PERP = "D_perp"



# a_D = (a_H + a_V)/sqrt2, a_Dperp = (a_Hperp + a_Vperp)/sqrt2
_MODE_EXPANSION: Dict[Mode, List[Tuple[int, float]]] = {
    Mode.H: [(0, 1.0)],
    Mode.V: [(1, 1.0)],
    Mode.H_PERP: [(2, 1.0)],
    Mode.V_PERP: [(3, 1.0)],
    Mode.D: [(0, _SQRT_HALF), (1, _SQRT_HALF)],
    Mode.D_PERP: [(2, _SQRT_HALF), (3, _SQRT_HALF)],
}


def check_photon_number(n_photons: int, minimum: int = 0, field_name: str = "N") -> int:
    if isinstance(n_photons, bool) or int(n_photons) != n_photons:
        raise ValidationError(
            f"{field_name} must be an integer", field=field_name, value=n_photons
        )
    n_photons = int(n_photons)
    if n_photons < minimum:
        raise ValidationError(
            f"{field_name} must be >= {minimum}",
            field=field_name,
            value=n_photons,
            expected=f">= {minimum}",
        )
    return n_photons


@dataclass(frozen=True)
class TwoModeBasis:
    """Basis |k, N-k> of a two-mode N-photon system, k = n_H."""

    n_photons: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_photons", check_photon_number(self.n_photons))

    @property
    def dimension(self) -> int:
        return self.n_photons + 1

    def occupation(self, k: int) -> Tuple[int, int]:
        """Return (n_H, n_V) of basis index ``k``."""
        if not 0 <= k <= self.n_photons:
            raise ValidationError("Basis index out of range", field="k", value=k)
        return k, self.n_photons - k

    def index(self, n_h: int, n_v: int) -> int:
        """Return the basis index of |n_H, n_V>."""
        if n_h < 0 or n_v < 0 or n_h + n_v != self.n_photons:
            raise ValidationError(
                f"Occupation ({n_h}, {n_v}) is not in the {self.n_photons}-photon basis"
            )
        return n_h


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Pure state of a two-mode N-photon system."""

    basis: TwoModeBasis
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.size != self.basis.dimension:
            raise DimensionMismatchError(self.basis.dimension, amplitudes.size)
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def from_amplitudes(cls, amplitudes: "np.ndarray | List[complex]") -> "TwoModeState":
        """Build a state, inferring N from the vector length."""
        amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amplitudes.size == 0:
            raise ValidationError("Amplitude vector is empty")
        return cls(TwoModeBasis(amplitudes.size - 1), amplitudes)

    @property
    def n_photons(self) -> int:
        return self.basis.n_photons

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "TwoModeState":
        norm = self.norm()
        if norm == 0.0:
            raise ZeroStateError("Cannot normalize the zero vector")
        return TwoModeState(self.basis, self.amplitudes / norm)

    def is_normalized(self, tolerance: Optional[float] = None) -> bool:
        tolerance = get_config().norm_tolerance if tolerance is None else tolerance
        return abs(self.norm() ** 2 - 1.0) <= tolerance

    def probabilities(self) -> np.ndarray:
        """Probabilities of n_H = k in the HV basis."""
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "TwoModeState") -> complex:
        if other.basis != self.basis:
            raise DimensionMismatchError(self.basis.dimension, other.basis.dimension)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "TwoModeState") -> float:
        return abs(self.overlap(other)) ** 2

    def evolve(self, unitary: np.ndarray) -> "TwoModeState":
        unitary = np.asarray(unitary)
        if unitary.shape != (self.basis.dimension, self.basis.dimension):
            raise DimensionMismatchError(self.basis.dimension, unitary.shape[0])
        return TwoModeState(self.basis, unitary @ self.amplitudes)


@dataclass(frozen=True, eq=False)
class StokesOperators:
    """S1, S2, S3 as dense Hermitian matrices on the N-photon two-mode basis."""

    n_photons: int
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray

    def components(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.s1, self.s2, self.s3

    def along(self, direction: "np.ndarray | List[float]") -> np.ndarray:
        """Stokes operator n . S for a unit direction n."""
        direction = np.asarray(direction, dtype=float)
        norm = np.linalg.norm(direction)
        if direction.shape != (3,) or norm == 0.0:
            raise ValidationError("Direction must be a nonzero 3-vector", field="direction")
        direction = direction / norm
        return direction[0] * self.s1 + direction[1] * self.s2 + direction[2] * self.s3


@lru_cache(maxsize=64)
def _stokes_matrices(n_photons: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    k = np.arange(n_photons + 1)
    s1 = np.diag(2.0 * k - n_photons).astype(complex)

    # a_H^dag a_V |k, N-k> = sqrt((k+1)(N-k)) |k+1, N-k-1>
    raising = np.diag(np.sqrt((k[:-1] + 1.0) * (n_photons - k[:-1])), -1).astype(complex)
    lowering = raising.conj().T
    s2 = raising + lowering
    s3 = -1j * (raising - lowering)

    for matrix in (s1, s2, s3):
        matrix.setflags(write=False)
    return s1, s2, s3


def build_stokes(n_photons: int) -> StokesOperators:
    """Build the Stokes operators for N photons in two modes."""
    n_photons = check_photon_number(n_photons, minimum=1)
    s1, s2, s3 = _stokes_matrices(n_photons)
    return StokesOperators(n_photons, s1, s2, s3)


def _check_operator(state: TwoModeState, operator: np.ndarray) -> np.ndarray:
    operator = np.asarray(operator)
    dim = state.basis.dimension
    if operator.shape != (dim, dim):
        raise DimensionMismatchError(dim, operator.shape[0] if operator.ndim else 0)
    return operator


def expectation(state: TwoModeState, operator: np.ndarray) -> float:
    """Return <psi|A|psi> for a Hermitian operator A."""
    operator = _check_operator(state, operator)
    value = complex(np.vdot(state.amplitudes, operator @ state.amplitudes))
    tolerance = get_config().hermitian_tolerance
    if abs(value.imag) > tolerance:
        raise ValidationError(
            "Operator is not Hermitian: expectation has an imaginary part",
            field="operator",
            value=value.imag,
        )
    return value.real


def variance(state: TwoModeState, operator: np.ndarray) -> float:
    """Return <A^2> - <A>^2, clamped at zero."""
    operator = _check_operator(state, operator)
    mean = expectation(state, operator)
    second = expectation(state, operator @ operator)
    value = second - mean**2
    if value < -get_config().hermitian_tolerance:
        raise NumericalError(f"Negative variance {value} beyond tolerance")
    return max(value, 0.0)


def covariance(state: TwoModeState, first: np.ndarray, second: np.ndarray) -> float:
    """Symmetrised covariance <{A,B}>/2 - <A><B>."""
    first = _check_operator(state, first)
    second = _check_operator(state, second)
    anticommutator = (first @ second + second @ first) / 2.0
    return expectation(state, anticommutator) - expectation(state, first) * expectation(
        state, second
    )


@dataclass(frozen=True, eq=False)
class FourModeState:
    """Sparse state over the occupation tuples (n_H, n_V, n_Hperp, n_Vperp)."""

    n_total: int
    amplitudes: Mapping[Occupation, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n_total = check_photon_number(self.n_total, field_name="n_total")
        cleaned: Dict[Occupation, complex] = {}
        for occupation, amplitude in self.amplitudes.items():
            occupation = tuple(int(n) for n in occupation)
            if len(occupation) != 4 or min(occupation) < 0:
                raise ValidationError(
                    "Occupation must be four nonnegative integers", value=occupation
                )
            if sum(occupation) != n_total:
                raise ValidationError(
                    f"Occupation {occupation} does not hold {n_total} photons",
                    field="amplitudes",
                )
            amplitude = complex(amplitude)
            if amplitude != 0:
                cleaned[occupation] = cleaned.get(occupation, 0j) + amplitude
        object.__setattr__(self, "n_total", n_total)
        object.__setattr__(self, "amplitudes", MappingProxyType(cleaned))

    @classmethod
    def basis_state(cls, occupation: Occupation, amplitude: complex = 1.0) -> "FourModeState":
        return cls(sum(occupation), {tuple(occupation): amplitude})

    @classmethod
    def from_two_mode(cls, state: TwoModeState) -> "FourModeState":
        """Embed a two-mode state with empty perpendicular modes."""
        n = state.n_photons
        return cls(n, {(k, n - k, 0, 0): a for k, a in enumerate(state.amplitudes)})

    def to_two_mode(self) -> TwoModeState:
        """Project back onto (H, V); requires empty perpendicular modes."""
        amplitudes = np.zeros(self.n_total + 1, dtype=complex)
        for (n_h, n_v, n_hp, n_vp), amplitude in self.amplitudes.items():
            if n_hp or n_vp:
                raise ValidationError(
                    "State occupies perpendicular modes and has no two-mode form"
                )
            amplitudes[n_h] = amplitude
        return TwoModeState(TwoModeBasis(self.n_total), amplitudes)

    def items(self) -> Iterator[Tuple[Occupation, complex]]:
        return iter(self.amplitudes.items())

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    @property
    def is_zero(self) -> bool:
        return self.norm_squared() == 0.0

    def normalize(self) -> "FourModeState":
        norm = math.sqrt(self.norm_squared())
        if norm == 0.0:
            raise ZeroStateError("Cannot normalize the zero four-mode vector")
        return FourModeState(self.n_total, {o: a / norm for o, a in self.amplitudes.items()})

    def inner(self, other: "FourModeState") -> complex:
        return complex(
            sum(a.conjugate() * other.amplitudes.get(o, 0j) for o, a in self.amplitudes.items())
        )

    def sectors(self) -> Dict[Tuple[int, int], Dict[Occupation, complex]]:
        """Group amplitudes by (n_H + n_V, n_Hperp + n_Vperp)."""
        grouped: Dict[Tuple[int, int], Dict[Occupation, complex]] = {}
        for occupation, amplitude in self.amplitudes.items():
            key = (occupation[0] + occupation[1], occupation[2] + occupation[3])
            grouped.setdefault(key, {})[occupation] = amplitude
        return grouped


def apply_annihilation(state: FourModeState, mode: "Mode | str") -> FourModeState:
    """
    Apply an annihilation operator to a four-mode state.

    The result is not renormalized; its squared norm is <n_mode> of the
    input. On the vacuum (or on empty modes) the zero vector is returned.
    """
    mode = Mode(mode)
    if state.n_total == 0:
        logger.debug("Annihilation on the vacuum gives the zero vector")
        return FourModeState(0, {})

    result: Dict[Occupation, complex] = {}
    for occupation, amplitude in state.items():
        for index, weight in _MODE_EXPANSION[mode]:
            n = occupation[index]
            if n == 0:
                continue
            lowered = list(occupation)
            lowered[index] -= 1
            key = tuple(lowered)
            result[key] = result.get(key, 0j) + weight * math.sqrt(n) * amplitude

    output = FourModeState(state.n_total - 1, result)
    if output.is_zero:
        logger.debug("Annihilation in mode %s left the zero vector", mode.value)
    return output


def apply_creation(state: FourModeState, mode: "Mode | str") -> FourModeState:
    """Apply a creation operator (adjoint expansion of ``apply_annihilation``)."""
    mode = Mode(mode)
    result: Dict[Occupation, complex] = {}
    for occupation, amplitude in state.items():
        for index, weight in _MODE_EXPANSION[mode]:
            raised = list(occupation)
            raised[index] += 1
            key = tuple(raised)
            result[key] = result.get(key, 0j) + weight * math.sqrt(raised[index]) * amplitude
    return FourModeState(state.n_total + 1, result)


def mean_occupation(state: FourModeState, mode: "Mode | str") -> float:
    """<n_mode> of a normalized state, via the norm of a_mode|psi>."""
    if state.is_zero:
        raise ZeroStateError()
    return apply_annihilation(state, mode).norm_squared() / state.norm_squared()


__all__ = [
    "Mode",
    "Occupation",
    "TwoModeBasis",
    "TwoModeState",
    "StokesOperators",
    "FourModeState",
    "build_stokes",
    "expectation",
    "variance",
    "covariance",
    "apply_annihilation",
    "apply_creation",
    "mean_occupation",
]
