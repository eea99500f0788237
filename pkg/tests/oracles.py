"""
Brute-force reference computations used to cross-check the fast paths.

Everything here works on dense matrices over the full four-mode space or on
exhaustive enumerations, sharing no code with the package beyond its
conventions (basis order, mode transform sign).
"""

import itertools
import math
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.special import comb

Occupation = Tuple[int, int, int, int]

H, V, H_PERP, V_PERP = range(4)


def occupations(n_total: int) -> List[Occupation]:
    return [
        occ
        for occ in itertools.product(range(n_total + 1), repeat=4)
        if sum(occ) == n_total
    ]


def _index(basis: List[Occupation]) -> Dict[Occupation, int]:
    return {occ: i for i, occ in enumerate(basis)}


def annihilator(n_total: int, mode: int) -> np.ndarray:
    """a_mode from the n_total-photon space to the (n_total - 1)-photon space."""
    source, target = occupations(n_total), occupations(n_total - 1)
    rows = _index(target)
    matrix = np.zeros((len(target), len(source)))
    for col, occ in enumerate(source):
        if occ[mode]:
            lowered = list(occ)
            lowered[mode] -= 1
            matrix[rows[tuple(lowered)], col] = math.sqrt(occ[mode])
    return matrix


def hop(n_total: int, to_mode: int, from_mode: int) -> np.ndarray:
    """a_to^dag a_from on the n_total-photon space."""
    basis = occupations(n_total)
    rows = _index(basis)
    matrix = np.zeros((len(basis), len(basis)))
    for col, occ in enumerate(basis):
        if occ[from_mode] == 0:
            continue
        moved = list(occ)
        moved[from_mode] -= 1
        moved[to_mode] += 1
        matrix[rows[tuple(moved)], col] += math.sqrt(occ[from_mode]) * math.sqrt(
            moved[to_mode]
        )
    return matrix


def rotation_generator(n_total: int) -> np.ndarray:
    """S3 + S3_perp with S3 = -i (a_H^dag a_V - a_V^dag a_H)."""
    s3 = -1j * (hop(n_total, H, V) - hop(n_total, V, H))
    s3_perp = -1j * (hop(n_total, H_PERP, V_PERP) - hop(n_total, V_PERP, H_PERP))
    return s3 + s3_perp


def mismatch_distribution(n_photons: int, indistinguishability: float, phi: float) -> np.ndarray:
    """
    H-detector distribution after diagonal subtraction from the mismatched
    source, by density matrices over the whole four-mode space.
    """
    n_pairs = (n_photons + 1) // 2
    source_basis = occupations(n_photons + 1)
    source_index = _index(source_basis)

    rho = np.zeros((len(source_basis), len(source_basis)))
    for d in range(n_pairs + 1):
        weight = (
            comb(n_pairs, d)
            * indistinguishability ** (n_pairs - d)
            * (1.0 - indistinguishability) ** d
        )
        i = source_index[(n_pairs, n_pairs - d, 0, d)]
        rho[i, i] += weight

    a_d = (annihilator(n_photons + 1, H) + annihilator(n_photons + 1, V)) / math.sqrt(2)
    a_dp = (
        annihilator(n_photons + 1, H_PERP) + annihilator(n_photons + 1, V_PERP)
    ) / math.sqrt(2)
    subtracted = a_d @ rho @ a_d.T + a_dp @ rho @ a_dp.T
    subtracted = subtracted / np.trace(subtracted)

    unitary = expm(-0.5j * phi * rotation_generator(n_photons))
    evolved = unitary @ subtracted @ unitary.conj().T

    probabilities = np.zeros(n_photons + 1)
    for occ, population in zip(occupations(n_photons), np.real(np.diag(evolved))):
        probabilities[occ[H] + occ[H_PERP]] += population
    return probabilities


def coincidence_efficiency_by_enumeration(
    sigma_a: Sequence[float], sigma_b: Sequence[float], m: int, n_photons: int = 5
) -> float:
    """Sum over every 0/1 click pattern on the seven a- and seven b-detectors."""

    def arm(sigmas: Sequence[float], clicks: int) -> float:
        total = 0.0
        for pattern in itertools.product((0, 1), repeat=len(sigmas)):
            if sum(pattern) != clicks:
                continue
            total += math.prod(s for s, x in zip(sigmas, pattern) if x)
        return math.factorial(clicks) * total

    return arm(sigma_a, m) * arm(sigma_b, n_photons - m)
