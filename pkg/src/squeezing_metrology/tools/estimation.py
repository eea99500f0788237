"""
Inference on coincidence data.

Least-squares fit of M * P(m | phi, I, s) to efficiency-corrected counts,
Monte-Carlo propagation of Poisson noise into the Fisher information, and a
maximum-likelihood phase estimator.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import OptimizeResult, least_squares, minimize, minimize_scalar

from ..core.config import get_config
from ..core.exceptions import ConvergenceError, SqueezingError, ValidationError
from ..processors.detector import (
    CoincidenceRecord,
    EfficiencyTable,
    expected_counts,
    rescale_counts,
)
from ..processors.distinguishability import NoiseParameter, mismatch_model
from ..processors.interferometer import DistributionFn, PhaseGrid
from .metrology import fisher_curve

logger = logging.getLogger(__name__)

QUANTILES = (0.025, 0.5, 0.975)


class FitMode(str, Enum):
    GLOBAL = "global"
    PER_POINT = "per-point"


def wrap_phase(phi: Any) -> Any:
    """Map onto [-pi, pi)."""
    return (np.asarray(phi) + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True, eq=False)
class FitResult:
    """Best fit of the fringe model; ``phases`` are the model phases per record."""

    mode: FitMode
    n_photons: int
    phases: np.ndarray
    indistinguishability: float
    scale: float
    noise: float
    residual_sum_of_squares: float
    converged: bool
    evaluations: int
    phase_offset: Optional[float] = None
    standard_errors: Dict[str, float] = field(default_factory=dict)
    noise_fixed: bool = False
    start_objectives: Tuple[float, ...] = ()

    def distribution_fn(self) -> DistributionFn:
        return mismatch_model(self.n_photons).distribution_fn(
            self.indistinguishability, self.noise
        )

    def parameters(self) -> Dict[str, float]:
        values = {"I": self.indistinguishability, "M": self.scale, "s": self.noise}
        if self.phase_offset is not None:
            values["phi0"] = self.phase_offset
        return values

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode.value,
            "N": self.n_photons,
            "phi0": self.phase_offset,
            "phi": self.phases.tolist(),
            "I": self.indistinguishability,
            "M": self.scale,
            "s": self.noise,
            "s_fixed": self.noise_fixed,
            "residual_sum_of_squares": self.residual_sum_of_squares,
            "converged": self.converged,
            "evaluations": self.evaluations,
            "standard_errors": self.standard_errors,
        }


class _FringeObjective:
    """Residual vector M P(phi_i) - D'_i for a packed parameter vector."""

    def __init__(
        self,
        labels: np.ndarray,
        rescaled: np.ndarray,
        mode: FitMode,
        fixed_noise: Optional[float],
    ):
        self.labels = labels
        self.rescaled = rescaled
        self.mode = mode
        self.fixed_noise = fixed_noise
        self.model = mismatch_model(rescaled.shape[1] - 1)
        n_phases = 1 if mode == FitMode.GLOBAL else labels.size
        self.names = (
            ["phi0"] if mode == FitMode.GLOBAL else [f"phi_{i}" for i in range(labels.size)]
        ) + ["I", "M"]
        if fixed_noise is None:
            self.names.append("s")
        self.n_phases = n_phases

    def unpack(self, x: np.ndarray) -> Tuple[np.ndarray, float, float, float]:
        if self.mode == FitMode.GLOBAL:
            phases = self.labels + x[0]
        else:
            phases = x[: self.n_phases]
        i, m = x[self.n_phases], x[self.n_phases + 1]
        s = self.fixed_noise if self.fixed_noise is not None else x[self.n_phases + 2]
        return phases, float(i), float(m), float(s)

    def pack(self, phases: np.ndarray, i: float, m: float, s: float) -> np.ndarray:
        values = list(np.atleast_1d(phases)) + [i, m]
        if self.fixed_noise is None:
            values.append(s)
        return np.array(values, dtype=float)

    def bounds(self) -> List[Tuple[float, float]]:
        phase_bound = (-4.0 * math.pi, 4.0 * math.pi)
        bounds = [phase_bound] * self.n_phases + [(0.0, 1.0), (0.0, np.inf)]
        if self.fixed_noise is None:
            bounds.append((0.0, 1.0))
        return bounds

    def residuals(self, x: np.ndarray) -> np.ndarray:
        phases, i, m, s = self.unpack(x)
        i = min(max(i, 0.0), 1.0)
        s = min(max(s, 0.0), 1.0)
        return (m * self.model.probabilities(phases, i, s) - self.rescaled).ravel()

    def objective(self, x: np.ndarray) -> float:
        return float(np.sum(self.residuals(x) ** 2))


def _prepare(
    records: Sequence[CoincidenceRecord], table: EfficiencyTable
) -> Tuple[np.ndarray, np.ndarray]:
    if not records:
        raise ValidationError("At least one coincidence record is required", field="records")
    sizes = {r.counts.size for r in records}
    if len(sizes) != 1:
        raise ValidationError("Records disagree on the number of outcomes", value=sorted(sizes))
    rescaled = np.vstack([rescale_counts(r, table) for r in records])
    if not np.all(np.isfinite(rescaled)):
        raise ValidationError("Rescaled counts are not finite", field="counts")
    if not np.any(rescaled > 0):
        raise ValidationError("All counts are zero; nothing to fit", field="counts")
    return np.array([r.phi for r in records]), rescaled


def _standard_errors(solution: OptimizeResult, names: List[str]) -> Dict[str, float]:
    """sqrt(diag(sigma^2 (J^T J)^-1)) with sigma^2 = RSS / dof."""
    jacobian = np.asarray(solution.jac, dtype=float)
    dof = jacobian.shape[0] - jacobian.shape[1]
    if dof <= 0:
        return {}
    sigma2 = 2.0 * float(solution.cost) / dof
    covariance = sigma2 * np.linalg.pinv(jacobian.T @ jacobian)
    errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    return {name: float(e) for name, e in zip(names, errors)}


def _polish(
    objective: _FringeObjective, x0: np.ndarray, max_evaluations: int
) -> OptimizeResult:
    lower, upper = np.array(objective.bounds()).T
    x0 = np.clip(x0, lower, upper)
    return least_squares(
        objective.residuals,
        x0,
        bounds=(lower, upper),
        method="trf",
        x_scale="jac",
        ftol=1e-12,
        xtol=1e-12,
        gtol=1e-12,
        max_nfev=max_evaluations,
    )


def fit_fringe(
    records: Sequence[CoincidenceRecord],
    table: EfficiencyTable,
    mode: FitMode = FitMode.GLOBAL,
    fixed_noise: Optional[float] = None,
    initial: Optional[FitResult] = None,
    starts: Optional[int] = None,
    max_evaluations: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> FitResult:
    """
    Minimise sum_{i,m} (M P(m | phi_i, I, s) - D'_m(phi_i))^2.

    Global mode fits one offset phi0 added to the record labels; per-point
    mode fits every phi_i, starting from the global solution. Without
    ``initial`` the offset is seeded from ``starts`` values over [-pi, pi)
    and refined by bounded Nelder-Mead; the best simplex result is polished
    by trust-region least squares.
    """
    settings = get_config().get_fit_config()
    starts = settings["starts"] if starts is None else starts
    max_evaluations = settings["max_evaluations"] if max_evaluations is None else max_evaluations
    tolerance = settings["tolerance"] if tolerance is None else tolerance
    if fixed_noise is not None:
        fixed_noise = NoiseParameter(fixed_noise).value
    mode = FitMode(mode)

    labels, rescaled = _prepare(records, table)
    n_photons = rescaled.shape[1] - 1

    if mode == FitMode.PER_POINT and (initial is None or initial.mode != FitMode.PER_POINT):
        seed_fit = initial or fit_fringe(
            records, table, FitMode.GLOBAL, fixed_noise, None, starts, max_evaluations, tolerance
        )
        initial = FitResult(
            mode=FitMode.PER_POINT,
            n_photons=n_photons,
            phases=seed_fit.phases,
            indistinguishability=seed_fit.indistinguishability,
            scale=seed_fit.scale,
            noise=seed_fit.noise,
            residual_sum_of_squares=seed_fit.residual_sum_of_squares,
            converged=seed_fit.converged,
            evaluations=seed_fit.evaluations,
        )

    objective = _FringeObjective(labels, rescaled, mode, fixed_noise)
    evaluations = 0
    simplex_converged = False
    start_objectives: List[float] = []

    if initial is not None:
        phases = initial.phase_offset if mode == FitMode.GLOBAL else initial.phases
        best_x = objective.pack(
            np.array([phases]) if mode == FitMode.GLOBAL else phases,
            initial.indistinguishability,
            initial.scale,
            initial.noise,
        )
        start_objectives.append(objective.objective(best_x))
    else:
        scale0 = float(np.mean(rescaled.sum(axis=1)))
        candidates = []
        for phi0 in -math.pi + 2.0 * math.pi * np.arange(starts) / starts:
            x0 = objective.pack(np.array([phi0]), 0.8, scale0, 0.1)
            start_objectives.append(objective.objective(x0))
            fatol = tolerance * max(1.0, start_objectives[-1])
            result = minimize(
                objective.objective,
                x0,
                method="Nelder-Mead",
                bounds=objective.bounds(),
                options={
                    "maxfev": max_evaluations,
                    "xatol": 1e-8,
                    "fatol": fatol,
                    "adaptive": True,
                },
            )
            evaluations += int(result.nfev)
            logger.debug("Start phi0=%.4f: objective %.6g (%s)", phi0, result.fun, result.message)
            candidates.append(result)
        best = min(candidates, key=lambda r: r.fun)
        best_x, simplex_converged = best.x, bool(best.success)

    polished = _polish(objective, best_x, max_evaluations)
    evaluations += int(polished.nfev)
    if objective.objective(polished.x) <= objective.objective(best_x):
        best_x = polished.x
    converged = simplex_converged or polished.status > 0

    phases, i, m, s = objective.unpack(best_x)
    offset = float(wrap_phase(best_x[0])) if mode == FitMode.GLOBAL else None
    if offset is not None:
        phases = labels + offset
    fit = FitResult(
        mode=mode,
        n_photons=n_photons,
        phases=np.asarray(wrap_phase(phases), dtype=float),
        indistinguishability=float(np.clip(i, 0.0, 1.0)),
        scale=float(m),
        noise=float(np.clip(s, 0.0, 1.0)),
        residual_sum_of_squares=objective.objective(best_x),
        converged=converged,
        evaluations=evaluations,
        phase_offset=offset,
        standard_errors=_standard_errors(polished, objective.names),
        noise_fixed=fixed_noise is not None,
        start_objectives=tuple(start_objectives),
    )
    if converged:
        logger.info(
            "Fit converged: I=%.6g M=%.6g s=%.6g RSS=%.6g",
            fit.indistinguishability,
            fit.scale,
            fit.noise,
            fit.residual_sum_of_squares,
        )
    else:
        logger.warning("Fit did not converge within %d evaluations", max_evaluations)
    return fit


def simulate_records(
    grid: PhaseGrid,
    table: EfficiencyTable,
    scale: float,
    indistinguishability: float = 1.0,
    noise: float = 0.0,
    n_photons: int = 5,
    phase_offset: float = 0.0,
    seed: Optional[int] = None,
    noiseless: bool = False,
    distribution_fn: Optional[DistributionFn] = None,
) -> List[CoincidenceRecord]:
    """
    Synthetic coincidence records labelled by the grid phases.

    Counts are M P(phi + offset) Sigma_m, exactly when ``noiseless`` and
    Poisson-distributed otherwise (one generator, drawn in grid order).
    """
    distribution_fn = distribution_fn or mismatch_model(n_photons).distribution_fn(
        indistinguishability, noise
    )
    rng = np.random.default_rng(seed)
    records = []
    for phi in grid:
        rates = expected_counts(distribution_fn(phi + phase_offset), scale, table)
        counts = rates if noiseless else rng.poisson(rates).astype(float)
        records.append(CoincidenceRecord(phi, counts))
    return records


@dataclass(frozen=True, eq=False)
class MonteCarloBand:
    """Per-phase quantiles of the Fisher information over noisy refits."""

    grid: PhaseGrid
    samples: np.ndarray
    iterations: int
    failed: int
    seed: Optional[int]
    quantiles: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float).reshape(-1, len(self.grid))
        if samples.shape[0] == 0:
            raise ConvergenceError("Every Monte-Carlo iteration failed", evaluations=self.iterations)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "quantiles", np.quantile(samples, QUANTILES, axis=0))

    @property
    def lower(self) -> np.ndarray:
        return self.quantiles[0]

    @property
    def median(self) -> np.ndarray:
        return self.quantiles[1]

    @property
    def upper(self) -> np.ndarray:
        return self.quantiles[2]

    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"phi": self.grid.values, "q025": self.lower, "q50": self.median, "q975": self.upper}
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "phi": self.grid.values.tolist(),
            "q025": self.lower.tolist(),
            "q50": self.median.tolist(),
            "q975": self.upper.tolist(),
            "iterations": self.iterations,
            "failed": self.failed,
            "seed": self.seed,
        }


def monte_carlo_fisher(
    records: Sequence[CoincidenceRecord],
    table: EfficiencyTable,
    iterations: Optional[int] = None,
    seed: Optional[int] = None,
    grid: Optional[PhaseGrid] = None,
    base_fit: Optional[FitResult] = None,
    mode: FitMode = FitMode.GLOBAL,
    fixed_noise: Optional[float] = None,
    max_workers: Optional[int] = None,
) -> MonteCarloBand:
    """
    Resample every D_m as Poisson(D_m), refit and recompute F(phi).

    Iteration k draws from the k-th child of SeedSequence(seed) and refits
    from the unperturbed solution, so the band depends only on the seed.
    Failed refits are counted and excluded.
    """
    config = get_config()
    iterations = config.monte_carlo_iterations if iterations is None else iterations
    if iterations < 1:
        raise ValidationError("Iterations must be positive", field="iterations", value=iterations)
    grid = grid or PhaseGrid.default()
    base_fit = base_fit or fit_fringe(records, table, mode, fixed_noise)
    if not base_fit.converged:
        raise ConvergenceError(
            "Fit of the unperturbed data did not converge",
            evaluations=base_fit.evaluations,
            best_so_far=base_fit,
        )

    children = np.random.SeedSequence(seed).spawn(iterations)

    def run(index: int) -> Optional[np.ndarray]:
        rng = np.random.default_rng(children[index])
        resampled = [
            CoincidenceRecord(r.phi, rng.poisson(r.counts).astype(float), r.integration_time)
            for r in records
        ]
        try:
            fit = fit_fringe(resampled, table, base_fit.mode, fixed_noise, initial=base_fit)
            if not fit.converged:
                logger.warning("Monte-Carlo iteration %d did not converge", index)
                return None
            return fisher_curve(fit.distribution_fn(), grid).values
        except SqueezingError as e:
            logger.warning("Monte-Carlo iteration %d rejected: %s", index, e.message)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
            logger.warning("Monte-Carlo iteration %d failed: %s", index, e)
        return None

    logger.info("Running %d Monte-Carlo iterations", iterations)
    with ThreadPoolExecutor(max_workers=max_workers or config.max_workers) as executor:
        results = list(executor.map(run, range(iterations)))

    successful = [r for r in results if r is not None]
    failed = iterations - len(successful)
    if failed:
        logger.warning("%d of %d Monte-Carlo iterations failed", failed, iterations)
    return MonteCarloBand(
        grid,
        np.array(successful).reshape(-1, len(grid)),
        iterations,
        failed,
        seed,
    )


@dataclass(frozen=True)
class MleResult:
    """Maximum-likelihood phase with its observed information."""

    phi: float
    observed_information: float
    log_likelihood: float
    at_boundary: bool
    degenerate: bool
    evaluations: int

    @property
    def standard_error(self) -> float:
        if self.observed_information <= 0:
            return math.inf
        return 1.0 / math.sqrt(self.observed_information)


def mle_phase(
    counts: Sequence[float],
    model: Callable[[float], np.ndarray],
    interval: Tuple[float, float] = (-math.pi / 2, math.pi / 2),
    grid_points: int = 201,
) -> MleResult:
    """
    Maximise sum_m n_m log p_m(phi) over ``interval``.

    A grid scan brackets the maximum, golden-section search refines it and a
    bounded Brent step polishes it. Maxima at the interval ends, and samples
    with a single observed outcome, are flagged.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 1 or np.any(counts < 0) or counts.sum() <= 0:
        raise ValidationError("Counts must be nonnegative with a positive total", field="counts")
    low, high = map(float, interval)
    if not high > low:
        raise ValidationError("Search interval is empty", field="interval", value=interval)

    observed = counts > 0
    evaluations = 0

    def negative_log_likelihood(phi: float) -> float:
        nonlocal evaluations
        evaluations += 1
        p = np.asarray(model(phi), dtype=float)
        return -float(np.sum(counts[observed] * np.log(np.maximum(p[observed], 1e-300))))

    phases = np.linspace(low, high, grid_points)
    values = np.array([negative_log_likelihood(phi) for phi in phases])
    best = int(np.argmin(values))
    at_boundary = best in (0, grid_points - 1)

    if at_boundary:
        phi_hat = float(phases[best])
    else:
        bracket = (phases[best - 1], phases[best], phases[best + 1])
        golden = minimize_scalar(negative_log_likelihood, bracket=bracket, method="golden")
        polished = minimize_scalar(
            negative_log_likelihood,
            bounds=(bracket[0], bracket[2]),
            method="bounded",
            options={"xatol": 1e-12},
        )
        phi_hat = float(min((golden, polished), key=lambda r: r.fun).x)
        phi_hat = min(max(phi_hat, low), high)

    h = get_config().fisher_step
    centre = negative_log_likelihood(phi_hat)
    curvature = (
        negative_log_likelihood(phi_hat + h) - 2.0 * centre + negative_log_likelihood(phi_hat - h)
    ) / h**2

    degenerate = int(observed.sum()) <= 1
    if at_boundary or degenerate:
        logger.warning(
            "Likelihood maximum not identifiable (boundary=%s, single outcome=%s)",
            at_boundary,
            degenerate,
        )
    return MleResult(
        phi=phi_hat,
        observed_information=float(curvature),
        log_likelihood=-centre,
        at_boundary=at_boundary or degenerate,
        degenerate=degenerate,
        evaluations=evaluations,
    )


__all__ = [
    "FitMode",
    "wrap_phase",
    "FitResult",
    "fit_fringe",
    "simulate_records",
    "MonteCarloBand",
    "monte_carlo_fisher",
    "MleResult",
    "mle_phase",
]
