"""
Tests for fringe fitting, the Monte-Carlo Fisher band and phase estimation.
"""

import itertools
import math
import threading

import numpy as np
import pytest

from squeezing_metrology.core.exceptions import ConvergenceError, ValidationError
from squeezing_metrology.models.states import yurke_state
from squeezing_metrology.processors.detector import CoincidenceRecord, expected_counts
from squeezing_metrology.processors.distinguishability import mismatch_model
from squeezing_metrology.processors.interferometer import (
    PhaseGrid,
    TrigSeries,
    outcome_distribution,
)
from squeezing_metrology.tools import estimation
from squeezing_metrology.tools.estimation import (
    FitMode,
    MonteCarloBand,
    fit_fringe,
    mle_phase,
    monte_carlo_fisher,
    simulate_records,
    wrap_phase,
)
from squeezing_metrology.tools.metrology import fisher_information

TRUE = {"phi0": 0.3, "I": 0.9, "M": 500.0, "s": 0.05}


@pytest.fixture
def noiseless_records(measured_table, full_period_grid):
    return simulate_records(
        full_period_grid,
        measured_table,
        TRUE["M"],
        TRUE["I"],
        TRUE["s"],
        phase_offset=TRUE["phi0"],
        noiseless=True,
    )


@pytest.fixture
def noiseless_fit(noiseless_records, measured_table):
    return fit_fringe(noiseless_records, measured_table)


def shifted(records, delta=0.0, factor=1.0):
    return [CoincidenceRecord(r.phi + delta, r.counts * factor) for r in records]


def test_wrap_phase():
    assert wrap_phase(math.pi) == pytest.approx(-math.pi)
    assert wrap_phase(0.3 + 4 * math.pi) == pytest.approx(0.3)
    assert wrap_phase(np.array([-3.5, 3.5])) == pytest.approx([-3.5 + 2 * math.pi, 3.5 - 2 * math.pi])


def test_noiseless_recovery(noiseless_fit):
    fit = noiseless_fit
    assert fit.converged
    assert fit.phase_offset == pytest.approx(TRUE["phi0"], abs=1e-6)
    assert fit.indistinguishability == pytest.approx(TRUE["I"], abs=1e-6)
    assert fit.scale == pytest.approx(TRUE["M"], abs=1e-6 * TRUE["M"])
    assert fit.noise == pytest.approx(TRUE["s"], abs=1e-6)
    assert 0.0 <= fit.residual_sum_of_squares < 1e-10
    assert fit.evaluations > 0
    assert fit.parameters() == {
        "I": fit.indistinguishability,
        "M": fit.scale,
        "s": fit.noise,
        "phi0": fit.phase_offset,
    }


def test_fit_serialization(noiseless_fit):
    data = noiseless_fit.to_dict()
    assert data["mode"] == "global"
    assert data["N"] == 5
    assert len(data["phi"]) == 30
    assert set(data["standard_errors"]) == {"phi0", "I", "M", "s"}
    assert data["s_fixed"] is False


def test_label_shift_moves_offset(noiseless_records, noiseless_fit, measured_table):
    """Model phases are labels + phi0, so shifting labels by delta moves phi0 by -delta."""
    delta = 0.2
    fit = fit_fringe(shifted(noiseless_records, delta=delta), measured_table)
    assert fit.phase_offset == pytest.approx(noiseless_fit.phase_offset - delta, abs=1e-6)
    assert fit.indistinguishability == pytest.approx(noiseless_fit.indistinguishability, abs=1e-6)
    assert fit.scale == pytest.approx(noiseless_fit.scale, rel=1e-6)
    assert fit.noise == pytest.approx(noiseless_fit.noise, abs=1e-6)


def test_count_scaling_scales_m(noiseless_records, noiseless_fit, measured_table):
    fit = fit_fringe(shifted(noiseless_records, factor=3.0), measured_table)
    assert fit.scale == pytest.approx(3.0 * noiseless_fit.scale, rel=1e-6)
    assert fit.phase_offset == pytest.approx(noiseless_fit.phase_offset, abs=1e-6)
    assert fit.indistinguishability == pytest.approx(noiseless_fit.indistinguishability, abs=1e-6)
    assert fit.noise == pytest.approx(noiseless_fit.noise, abs=1e-6)


def test_boundary_parameters(measured_table, full_period_grid):
    records = simulate_records(full_period_grid, measured_table, 500.0, 1.0, 0.0, noiseless=True)
    fit = fit_fringe(records, measured_table)
    assert fit.indistinguishability == pytest.approx(1.0, abs=1e-3)
    assert fit.noise == pytest.approx(0.0, abs=1e-3)
    assert fit.phase_offset == pytest.approx(0.0, abs=1e-3)


def test_perfect_overlap_without_noise_gives_valid_counts(measured_table, full_period_grid):
    model = mismatch_model(5).distribution_fn(1.0, 0.0)
    assert np.all(model(0.0) >= 0.0)
    assert model(0.0) == pytest.approx([0, 0, 0.5, 0.5, 0, 0], abs=1e-12)
    assert np.all(model(full_period_grid.values) >= 0.0)

    exact = simulate_records(full_period_grid, measured_table, 500.0, 1.0, 0.0, noiseless=True)
    sampled = simulate_records(full_period_grid, measured_table, 500.0, 1.0, 0.0, seed=1)
    for records in (exact, sampled):
        assert len(records) == len(full_period_grid)
        assert all(np.all(r.counts >= 0.0) for r in records)
    assert exact[15].phi == pytest.approx(0.0, abs=1e-12)
    assert exact[15].counts[[0, 1, 4, 5]] == pytest.approx(0.0, abs=1e-12)


def test_fit_improves_on_every_start(bright_table, full_period_grid):
    records = simulate_records(
        full_period_grid,
        bright_table,
        1e4,
        TRUE["I"],
        TRUE["s"],
        phase_offset=TRUE["phi0"],
        seed=7,
    )
    fit = fit_fringe(records, bright_table, starts=5)
    assert len(fit.start_objectives) == 5
    assert all(fit.residual_sum_of_squares <= value for value in fit.start_objectives)

    refit = fit_fringe(records, bright_table, initial=fit)
    assert len(refit.start_objectives) == 1
    assert refit.residual_sum_of_squares <= refit.start_objectives[0]


def test_fixed_noise(noiseless_records, measured_table):
    fit = fit_fringe(noiseless_records, measured_table, fixed_noise=TRUE["s"])
    assert fit.noise == TRUE["s"]
    assert fit.noise_fixed
    assert "s" not in fit.standard_errors
    assert fit.indistinguishability == pytest.approx(TRUE["I"], abs=1e-6)
    assert fit.phase_offset == pytest.approx(TRUE["phi0"], abs=1e-6)


def test_per_point_mode(noiseless_records, measured_table):
    fit = fit_fringe(noiseless_records, measured_table, mode=FitMode.PER_POINT)
    assert fit.mode == FitMode.PER_POINT
    assert fit.phase_offset is None
    labels = np.array([r.phi for r in noiseless_records])
    residual = wrap_phase(fit.phases - labels - TRUE["phi0"])
    assert np.max(np.abs(residual)) < 1e-5
    assert fit.indistinguishability == pytest.approx(TRUE["I"], abs=1e-5)


def test_degenerate_inputs(measured_table):
    with pytest.raises(ValidationError):
        fit_fringe([], measured_table)
    with pytest.raises(ValidationError):
        fit_fringe([CoincidenceRecord(phi, np.zeros(6)) for phi in (0.0, 1.0)], measured_table)
    with pytest.raises(ValidationError):
        fit_fringe([CoincidenceRecord(0.0, np.ones(6)), CoincidenceRecord(1.0, np.ones(4))], measured_table)
    with pytest.raises(ValidationError):
        fit_fringe([CoincidenceRecord(0.0, np.ones(5))], measured_table)


def test_simulate_records(measured_table, full_period_grid):
    exact = simulate_records(full_period_grid, measured_table, 1e6, 0.8, 0.1, noiseless=True)
    model = mismatch_model(5).distribution_fn(0.8, 0.1)
    for record in exact:
        assert record.counts == pytest.approx(expected_counts(model(record.phi), 1e6, measured_table))

    first = simulate_records(full_period_grid, measured_table, 1e8, seed=5)
    second = simulate_records(full_period_grid, measured_table, 1e8, seed=5)
    assert all(np.array_equal(a.counts, b.counts) for a, b in zip(first, second))
    assert all(float(c).is_integer() for r in first for c in r.counts)

    zero = simulate_records(full_period_grid, measured_table, 0.0, seed=1)
    assert all(r.total == 0 for r in zero)


@pytest.mark.slow
def test_poisson_recovery_within_standard_errors(bright_table, full_period_grid):
    """Over many seeds the truth lies within three standard errors nearly always."""
    seeds = range(40)
    expected = {**TRUE, "M": 1e4}
    hits = {name: 0 for name in expected}
    for seed in seeds:
        records = simulate_records(
            full_period_grid,
            bright_table,
            expected["M"],
            expected["I"],
            expected["s"],
            phase_offset=expected["phi0"],
            seed=seed,
        )
        fit = fit_fringe(records, bright_table)
        assert fit.converged
        estimates = fit.parameters()
        for name, truth in expected.items():
            if abs(estimates[name] - truth) <= 3 * fit.standard_errors[name]:
                hits[name] += 1
    for name, count in hits.items():
        assert count / len(seeds) >= 0.85, name


def test_monte_carlo_band_is_seeded(bright_table, full_period_grid, centred_grid):
    records = simulate_records(
        full_period_grid,
        bright_table,
        1e4,
        TRUE["I"],
        TRUE["s"],
        phase_offset=TRUE["phi0"],
        noiseless=True,
    )
    first = monte_carlo_fisher(records, bright_table, iterations=6, seed=11, grid=centred_grid)
    second = monte_carlo_fisher(records, bright_table, iterations=6, seed=11, grid=centred_grid)
    assert np.array_equal(first.samples, second.samples)
    assert first.iterations == 6
    assert first.samples.shape == (6 - first.failed, 30)
    assert np.all(first.lower <= first.median)
    assert np.all(first.median <= first.upper)
    assert list(first.to_frame().columns) == ["phi", "q025", "q50", "q975"]
    assert first.to_dict()["seed"] == 11


def test_monte_carlo_validation(noiseless_records, measured_table, centred_grid):
    with pytest.raises(ValidationError):
        monte_carlo_fisher(noiseless_records, measured_table, iterations=0)
    with pytest.raises(ConvergenceError):
        MonteCarloBand(centred_grid, np.empty((0, 30)), 10, 10, 1)


def test_monte_carlo_counts_refit_errors_as_failures(
    monkeypatch, noiseless_records, noiseless_fit, measured_table, centred_grid
):
    calls = itertools.count()
    lock = threading.Lock()

    def flaky(*args, **kwargs):
        with lock:
            call = next(calls)
        if call % 2:
            raise np.linalg.LinAlgError("singular matrix")
        return noiseless_fit

    monkeypatch.setattr(estimation, "fit_fringe", flaky)
    band = monte_carlo_fisher(
        noiseless_records,
        measured_table,
        iterations=4,
        seed=3,
        grid=centred_grid,
        base_fit=noiseless_fit,
    )
    assert band.failed == 2
    assert band.samples.shape == (2, 30)

    def broken(*args, **kwargs):
        raise ValueError("bad bounds")

    monkeypatch.setattr(estimation, "fit_fringe", broken)
    with pytest.raises(ConvergenceError):
        monte_carlo_fisher(
            noiseless_records,
            measured_table,
            iterations=3,
            seed=3,
            grid=centred_grid,
            base_fit=noiseless_fit,
        )


@pytest.mark.slow
def test_band_narrows_with_brightness(bright_table, full_period_grid, centred_grid):
    widths = {}
    for scale in (1e3, 1e5):
        records = simulate_records(
            full_period_grid,
            bright_table,
            scale,
            TRUE["I"],
            TRUE["s"],
            phase_offset=TRUE["phi0"],
            noiseless=True,
        )
        band = monte_carlo_fisher(records, bright_table, iterations=200, seed=2, grid=centred_grid)
        assert band.iterations == 200
        widths[scale] = band.width()
    resolved = (widths[1e3] > 1e-12) | (widths[1e5] > 1e-12)
    assert resolved.sum() >= len(centred_grid) - 2
    assert np.all(widths[1e5][resolved] < widths[1e3][resolved])


def yurke_samples(rng, phi, shots):
    p = np.clip(outcome_distribution(yurke_state(5), phi), 0.0, None)
    return rng.multinomial(shots, p / p.sum())


@pytest.mark.slow
def test_mle_saturates_cramer_rao_bound():
    phi, shots, trials = 0.1, 10_000, 1000
    model = TrigSeries.from_state(yurke_state(5))
    fisher = fisher_information(lambda x: outcome_distribution(yurke_state(5), x), phi)

    rng = np.random.default_rng(12)
    estimates = np.array(
        [mle_phase(yurke_samples(rng, phi, shots), model).phi for _ in range(trials)]
    )
    ratio = np.var(estimates, ddof=1) * shots * fisher
    assert 0.85 <= ratio <= 1.15
    assert ratio >= 1 - 3 * math.sqrt(2 / (trials - 1))


@pytest.mark.slow
def test_mle_is_consistent():
    phi, trials = 0.1, 200
    model = TrigSeries.from_state(yurke_state(5))
    rng = np.random.default_rng(3)
    rms = []
    for shots in (100, 1000, 10_000):
        estimates = np.array(
            [mle_phase(yurke_samples(rng, phi, shots), model).phi for _ in range(trials)]
        )
        rms.append(math.sqrt(np.mean((estimates - phi) ** 2)))
        spread = np.std(estimates, ddof=1)
    assert rms[0] > rms[1] > rms[2]
    assert abs(np.mean(estimates) - phi) < 4 * spread / math.sqrt(trials)


def test_mle_observed_information():
    phi, shots = 0.1, 1_000_000
    model = TrigSeries.from_state(yurke_state(5))
    result = mle_phase(yurke_samples(np.random.default_rng(8), phi, shots), model)
    fisher = fisher_information(lambda x: outcome_distribution(yurke_state(5), x), phi)
    assert not result.at_boundary
    assert not result.degenerate
    assert result.phi == pytest.approx(phi, abs=5 / math.sqrt(shots * fisher))
    assert result.observed_information == pytest.approx(shots * fisher, rel=0.1)
    assert result.standard_error == pytest.approx(1 / math.sqrt(shots * fisher), rel=0.1)


def test_mle_flags_degenerate_samples():
    model = TrigSeries.from_state(yurke_state(5))
    result = mle_phase([0, 0, 10, 0, 0, 0], model)
    assert result.degenerate
    assert result.at_boundary


def test_mle_boundary_flag():
    model = TrigSeries.from_state(yurke_state(5))
    counts = yurke_samples(np.random.default_rng(1), 0.1, 100_000)
    result = mle_phase(counts, model, interval=(0.2, 0.4))
    assert result.at_boundary
    assert not result.degenerate


def test_mle_rejects_bad_input():
    model = TrigSeries.from_state(yurke_state(5))
    with pytest.raises(ValidationError):
        mle_phase([0, 0, 0, 0, 0, 0], model)
    with pytest.raises(ValidationError):
        mle_phase([1, -1, 0, 0, 0, 0], model)
    with pytest.raises(ValidationError):
        mle_phase([1, 1, 0, 0, 0, 0], model, interval=(1.0, -1.0))
