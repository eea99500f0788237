"""
Tests for the phase rotation, outcome distributions and fringe tables.
"""

import io
import math

import numpy as np
import pandas as pd
import pytest
from scipy.linalg import expm
from scipy.stats import binom

from squeezing_metrology.core.exceptions import DataParseError, ValidationError
from squeezing_metrology.models.fock import FourModeState, build_stokes
from squeezing_metrology.models.states import (
    holland_burnett_state,
    uncorrelated_state,
    yurke_state,
)
from squeezing_metrology.processors.interferometer import (
    FringeTable,
    PhaseGrid,
    PhaseMapping,
    TrigSeries,
    evolve,
    evolve_four_mode,
    fringe_mean,
    fringe_statistics,
    fringe_table,
    outcome_distribution,
    phase_unitary,
    phase_unitary_expm,
)


def test_identity_at_zero_phase():
    for n_photons in range(8):
        assert np.allclose(phase_unitary(n_photons, 0.0), np.eye(n_photons + 1), atol=1e-15)


@pytest.mark.parametrize("n_photons", range(1, 8))
def test_mode_transform_matches_matrix_exponential(n_photons):
    """Test the mode-transform construction against expm(-i S3 phi / 2) at 100 phases."""
    s3 = build_stokes(n_photons).s3
    rng = np.random.default_rng(n_photons)
    for phi in rng.uniform(-2 * math.pi, 2 * math.pi, 100):
        unitary = phase_unitary(n_photons, phi)
        assert np.allclose(unitary, expm(-0.5j * phi * s3), atol=1e-12, rtol=0)
        assert np.allclose(unitary.conj().T @ unitary, np.eye(n_photons + 1), atol=1e-12)
    assert np.allclose(phase_unitary(n_photons, 0.7), phase_unitary_expm(n_photons, 0.7), atol=1e-12)


@pytest.mark.parametrize("n_photons", range(1, 8))
def test_heisenberg_rotation_of_s1(n_photons):
    """Test U^dag S1 U = cos(phi) S1 - sin(phi) S2."""
    s1, s2, _ = build_stokes(n_photons).components()
    for phi in (-2.1, -0.4, 0.3, 1.2, 3.0):
        unitary = phase_unitary(n_photons, phi)
        rotated = unitary.conj().T @ s1 @ unitary
        assert np.allclose(rotated, math.cos(phi) * s1 - math.sin(phi) * s2, atol=1e-10)


def test_one_parameter_group():
    for a, b in ((0.3, 0.9), (-1.1, 2.5), (3.0, 3.5)):
        assert np.allclose(
            phase_unitary(5, a) @ phase_unitary(5, b), phase_unitary(5, a + b), atol=1e-12
        )


def test_non_finite_phase_rejected():
    with pytest.raises(ValidationError):
        phase_unitary(3, math.nan)


@pytest.mark.parametrize("state, slope", [(yurke_state(5), 3.0), (uncorrelated_state(5), 5.0)])
def test_fringe_law(state, slope):
    """Test <S1>(phi) = -<S2> sin(phi) on a 100-point grid."""
    phases = np.linspace(-math.pi, math.pi, 100)
    means = fringe_mean(state, phases)
    assert np.max(np.abs(means + slope * np.sin(phases))) < 1e-10


def test_fringe_mean_at_origin_is_unchanged():
    state = holland_burnett_state(4)
    s1 = build_stokes(4).s1
    assert fringe_mean(state, [0.0])[0] == pytest.approx(float(np.real(np.vdot(
        state.amplitudes, s1 @ state.amplitudes))))


def test_yurke_distributions():
    assert outcome_distribution(yurke_state(5), 0.0) == pytest.approx(
        [0, 0, 0.5, 0.5, 0, 0], abs=1e-12
    )
    # Peaks at S1 = -3, +1, +5
    assert outcome_distribution(yurke_state(5), -math.pi / 2) == pytest.approx(
        [0, 0.125, 0, 0.25, 0, 0.625], abs=1e-12
    )


def test_uncorrelated_distribution_is_binomial():
    state = uncorrelated_state(5)
    m = np.arange(6)
    assert outcome_distribution(state, 0.0) == pytest.approx(binom.pmf(m, 5, 0.5), abs=1e-12)
    for phi in np.linspace(-math.pi, math.pi, 25):
        expected = binom.pmf(m, 5, (1 - math.sin(phi)) / 2)
        assert outcome_distribution(state, phi) == pytest.approx(expected, abs=1e-12)


def test_periodicity_and_normalization():
    state = yurke_state(7)
    for phi in np.linspace(-3, 3, 13):
        p = outcome_distribution(state, phi)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert outcome_distribution(state, phi + 2 * math.pi) == pytest.approx(p, abs=1e-12)


@pytest.mark.parametrize("state", [yurke_state(3), yurke_state(5), yurke_state(7),
                                   holland_burnett_state(4), holland_burnett_state(6)])
def test_mirror_symmetry(state):
    """For H/V-symmetric real states p_m(-phi) = p_{N-m}(phi)."""
    for phi in (0.2, 0.9, 1.7, 2.6):
        forward = outcome_distribution(state, phi)
        backward = outcome_distribution(state, -phi)
        assert backward == pytest.approx(forward[::-1], abs=1e-12)

        stokes = build_stokes(state.n_photons)
        oracle = np.abs(expm(0.5j * phi * stokes.s3) @ state.amplitudes) ** 2
        assert backward == pytest.approx(oracle, abs=1e-12)


def test_four_mode_evolution_matches_two_mode():
    state = yurke_state(5)
    evolved = evolve_four_mode(FourModeState.from_two_mode(state), 0.8)
    assert np.allclose(evolved.to_two_mode().amplitudes, evolve(state, 0.8).amplitudes)


def test_phase_grid_validation():
    with pytest.raises(ValidationError):
        PhaseGrid([0.0, 0.0, 1.0])
    with pytest.raises(ValidationError):
        PhaseGrid([0.0, math.inf])
    with pytest.raises(ValidationError):
        PhaseGrid([])
    with pytest.raises(ValidationError):
        PhaseGrid.from_range(0.0, 1.0, 0.0)
    with pytest.raises(ValidationError):
        PhaseGrid.from_range(1.0, 1.0, 0.1)


def test_default_grid_spans_one_period():
    grid = PhaseGrid.default()
    assert len(grid) == 30
    assert grid.values[1] - grid.values[0] == pytest.approx(math.pi / 15)
    assert grid.is_periodic
    assert not PhaseGrid.from_range(-math.pi / 2, math.pi / 2, math.pi / 30).is_periodic


def test_phase_mapping():
    mapping = PhaseMapping(scale=2.0, offset=0.1)
    assert mapping.apply(0.25) == pytest.approx(0.6)
    assert mapping.apply(np.array([0.0, 1.0])) == pytest.approx([0.1, 2.1])
    with pytest.raises(ValidationError):
        PhaseMapping(scale=0.0)


def test_fringe_table_rows_and_frame():
    state = yurke_state(5)
    table = fringe_table(lambda phi: outcome_distribution(state, phi))
    assert table.probabilities.shape == (30, 6)
    assert np.allclose(table.probabilities.sum(axis=1), 1.0, atol=1e-10)

    frame = table.to_frame()
    assert list(frame.columns) == ["phi", "p0", "p1", "p2", "p3", "p4", "p5"]
    restored = FringeTable.from_frame(pd.read_csv(io.StringIO(frame.to_csv(
        index=False, float_format="%.17g"))))
    assert np.allclose(restored.probabilities, table.probabilities, atol=1e-12)
    assert np.allclose(restored.grid.values, table.grid.values, atol=1e-12)

    data = table.to_dict()
    assert data["n_photons"] == 5
    assert len(data["phi"]) == 30


def test_fringe_table_validation():
    grid = PhaseGrid([0.0, 1.0])
    with pytest.raises(ValidationError):
        FringeTable(grid, [[0.5, 0.4], [0.5, 0.5]])
    with pytest.raises(ValidationError):
        FringeTable(grid, [[1.0, 0.0]])
    with pytest.raises(DataParseError):
        FringeTable.from_frame(pd.DataFrame({"phi": [0.0], "q0": [1.0]}))


def test_fringe_statistics_match_stokes_mean():
    state = yurke_state(5)
    grid = PhaseGrid(np.linspace(-1.5, 1.5, 11))
    stats = fringe_statistics(fringe_table(lambda phi: outcome_distribution(state, phi), grid))
    assert np.allclose(stats.mean, fringe_mean(state, grid), atol=1e-10)
    assert stats.variance[5] == pytest.approx(1.0, abs=1e-10)
    assert list(stats.to_frame().columns) == ["phi", "mean_s1", "variance_s1"]


def test_trig_series_reproduces_distribution():
    state = yurke_state(5)
    series = TrigSeries.from_state(state)
    phases = np.random.default_rng(0).uniform(-math.pi, math.pi, 20)
    expected = np.vstack([outcome_distribution(state, phi) for phi in phases])
    assert np.allclose(series(phases), expected, atol=1e-12)
    assert series(0.4) == pytest.approx(outcome_distribution(state, 0.4), abs=1e-12)

    h = 1e-5
    numeric = (series(0.4 + h) - series(0.4 - h)) / (2 * h)
    assert np.allclose(series.derivative(0.4), numeric, atol=1e-8)


def test_trig_series_never_returns_negative_probabilities():
    series = TrigSeries.from_state(yurke_state(5))
    phases = np.concatenate([[0.0, math.pi, -math.pi], np.linspace(-math.pi, math.pi, 61)])
    values = series(phases)
    assert np.all(values >= 0.0)
    assert np.allclose(values.sum(axis=1), 1.0, atol=1e-15)
    assert series(0.0)[[0, 1, 4, 5]] == pytest.approx(0.0, abs=1e-15)
