"""
Command-line interface.

Subcommands simulate fringes, summarise phase sensitivity, generate
synthetic coincidence counts and fit measured counts. Data goes to stdout or
the --output path; logs and errors go to stderr.
"""

import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import numpy as np
import pydantic
import typer
from pydantic import BaseModel, ConfigDict, Field, model_validator
from rich.console import Console

from .core.config import get_config, setup_logging
from .core.exceptions import (
    ConvergenceError,
    DataParseError,
    ValidationError,
    exit_code_for,
    format_error_for_user,
)
from .infrastructure.output_writer import OutputWriter
from .models.fock import TwoModeState
from .models.states import holland_burnett_state, uncorrelated_state, yurke_state
from .processors.detector import (
    CoincidenceRecord,
    EfficiencyTable,
    read_records,
    records_to_frame,
)
from .processors.distinguishability import add_phase_insensitive_noise, mismatch_model
from .processors.interferometer import (
    DistributionFn,
    PhaseGrid,
    PhaseMapping,
    fringe_table,
    outcome_distribution,
)
from .tools.estimation import FitMode, fit_fringe, monte_carlo_fisher, simulate_records
from .tools.metrology import fisher_curve, sensitivity_report

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="squeezing-metrology",
    help="Few-photon spin-squeezing interferometry: fringes, sensitivity, fits.",
    no_args_is_help=True,
    add_completion=False,
)
err_console = Console(stderr=True)


class StateKind(str, Enum):
    YURKE = "yurke"
    UNCORRELATED = "uncorrelated"
    HOLLAND_BURNETT = "holland-burnett"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class RunConfig(BaseModel):
    """Validated options of one CLI invocation."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    subcommand: str
    state: StateKind = StateKind.YURKE
    n_photons: int = Field(5, ge=1)
    indistinguishability: float = Field(1.0, ge=0.0, le=1.0)
    noise: float = Field(0.0, ge=0.0, le=1.0)
    phase_start: float = 0.0
    phase_stop: float = 2.0 * math.pi
    phase_step: float = Field(default_factory=lambda: get_config().phase_step, gt=0.0)
    phase_scale: float = 1.0
    phase_offset: float = 0.0
    efficiency: Optional[Path] = None
    counts: Optional[Path] = None
    scale: float = Field(500.0, ge=0.0)
    true_offset: float = 0.0
    iterations: int = Field(default_factory=lambda: get_config().monte_carlo_iterations, ge=0)
    seed: Optional[int] = None
    output_format: OutputFormat = OutputFormat.CSV
    output: Optional[Path] = None
    fit_mode: FitMode = FitMode.GLOBAL
    fixed_noise: Optional[float] = Field(None, ge=0.0, le=1.0)
    noiseless: bool = False

    @model_validator(mode="after")
    def check_ranges(self) -> "RunConfig":
        if not self.phase_stop > self.phase_start:
            raise ValueError("--phase-stop must exceed --phase-start")
        if self.phase_scale == 0.0:
            raise ValueError("--phase-scale must be nonzero")
        return self

    @classmethod
    def build(cls, **options: Any) -> "RunConfig":
        """Construct from CLI options; pydantic failures become usage errors."""
        options = {k: v for k, v in options.items() if v is not None}
        options.setdefault("seed", get_config().default_seed)
        try:
            return cls(**options)
        except pydantic.ValidationError as e:
            first = e.errors()[0]
            raise ValidationError(
                first["msg"], field=".".join(str(p) for p in first["loc"]) or None
            ) from e

    def check_files(self) -> None:
        for path in (self.efficiency, self.counts):
            if path is not None and not path.is_file():
                raise DataParseError(f"File not found: {path}", file_path=str(path))

    @property
    def mapping(self) -> PhaseMapping:
        return PhaseMapping(self.phase_scale, self.phase_offset)

    def grid(self) -> PhaseGrid:
        settings = PhaseGrid.from_range(self.phase_start, self.phase_stop, self.phase_step)
        return PhaseGrid(np.sort(self.mapping.apply(settings.values)))

    def efficiency_table(self) -> EfficiencyTable:
        if self.efficiency is None:
            return EfficiencyTable.measured_table()
        return EfficiencyTable.from_csv(self.efficiency)

    def build_state(self) -> TwoModeState:
        constructors: Dict[StateKind, Callable[[int], TwoModeState]] = {
            StateKind.YURKE: yurke_state,
            StateKind.UNCORRELATED: uncorrelated_state,
            StateKind.HOLLAND_BURNETT: holland_burnett_state,
        }
        return constructors[self.state](self.n_photons)

    def distribution_fn(self, state: TwoModeState) -> DistributionFn:
        """Outcome model with overlap I (Yurke only) and background s."""
        if self.state == StateKind.YURKE:
            return mismatch_model(self.n_photons).distribution_fn(
                self.indistinguishability, self.noise
            )
        if self.indistinguishability != 1.0:
            logger.warning("Indistinguishability applies to the Yurke model only; ignored")
        noise = self.noise

        def distribution(phi: float) -> np.ndarray:
            return add_phase_insensitive_noise(
                outcome_distribution(state, phi), noise, n_photons=state.n_photons
            )

        return distribution

    def writer(self) -> OutputWriter:
        return OutputWriter(self.output_format.value)


def _run(action: Callable[[], None]) -> None:
    """Execute a command, mapping failures onto the exit-code contract."""
    try:
        action()
    except typer.Exit:
        raise
    except Exception as e:
        code = exit_code_for(e)
        info = format_error_for_user(e)
        if code == 1:
            logger.debug("Unexpected failure", exc_info=True)
        err_console.print(f"[bold red]Error:[/bold red] {info['message']}")
        if info.get("details"):
            err_console.print(info["details"])
        raise typer.Exit(code) from e


def _directory_outputs(
    config: RunConfig, documents: Dict[str, str], bundle: Dict[str, Any]
) -> None:
    """Write named documents into --output, or one JSON bundle to stdout."""
    writer = config.writer()
    if config.output is None:
        writer.emit(writer.render_json(bundle))
        return
    writer.emit_all({config.output / name: text for name, text in documents.items()})


@app.callback()
def main_callback(
    log_level: Optional[str] = typer.Option(
        None, "--log-level", help="Override SQUEEZING_LOGGING_LEVEL for this run"
    ),
) -> None:
    setup_logging(level=log_level)


@app.command("fringe")
def cmd_fringe(
    state: StateKind = typer.Option(StateKind.YURKE, "--state", help="Probe state"),
    n_photons: int = typer.Option(5, "--n", help="Photon number N"),
    indistinguishability: float = typer.Option(1.0, "--i", help="Photon overlap I"),
    noise: float = typer.Option(0.0, "--s", help="Uniform background weight s"),
    phase_start: float = typer.Option(0.0, "--phase-start"),
    phase_stop: float = typer.Option(2.0 * math.pi, "--phase-stop"),
    phase_step: Optional[float] = typer.Option(None, "--phase-step", help="Default pi/15"),
    phase_scale: float = typer.Option(1.0, "--phase-scale", help="phi = scale * setting + offset"),
    phase_offset: float = typer.Option(0.0, "--phase-offset"),
    output_format: OutputFormat = typer.Option(OutputFormat.CSV, "--format"),
    output: Optional[Path] = typer.Option(None, "--output", help="File; stdout if omitted"),
) -> None:
    """Tabulate P(m | phi) on a phase grid."""

    def action() -> None:
        config = RunConfig.build(
            subcommand="fringe",
            state=state,
            n_photons=n_photons,
            indistinguishability=indistinguishability,
            noise=noise,
            phase_start=phase_start,
            phase_stop=phase_stop,
            phase_step=phase_step,
            phase_scale=phase_scale,
            phase_offset=phase_offset,
            output_format=output_format,
            output=output,
        )
        table = fringe_table(config.distribution_fn(config.build_state()), config.grid())
        writer = config.writer()
        writer.emit(writer.render(table.to_frame(), table.to_dict()), config.output)

    _run(action)


@app.command("report")
def cmd_report(
    state: StateKind = typer.Option(StateKind.YURKE, "--state"),
    n_photons: int = typer.Option(5, "--n"),
    indistinguishability: float = typer.Option(1.0, "--i"),
    noise: float = typer.Option(0.0, "--s"),
    phase_start: float = typer.Option(0.0, "--phase-start"),
    phase_stop: float = typer.Option(2.0 * math.pi, "--phase-stop"),
    phase_step: Optional[float] = typer.Option(None, "--phase-step"),
    phase_scale: float = typer.Option(1.0, "--phase-scale"),
    phase_offset: float = typer.Option(0.0, "--phase-offset"),
    output_format: OutputFormat = typer.Option(OutputFormat.CSV, "--format"),
    output: Optional[Path] = typer.Option(
        None, "--output", help="Directory for report.json and fisher.<format>"
    ),
) -> None:
    """Squeezing parameters, phase errors and the Fisher information curve."""

    def action() -> None:
        config = RunConfig.build(
            subcommand="report",
            state=state,
            n_photons=n_photons,
            indistinguishability=indistinguishability,
            noise=noise,
            phase_start=phase_start,
            phase_stop=phase_stop,
            phase_step=phase_step,
            phase_scale=phase_scale,
            phase_offset=phase_offset,
            output_format=output_format,
            output=output,
        )
        probe = config.build_state()
        report, curve = sensitivity_report(probe, config.grid(), config.distribution_fn(probe))
        writer = config.writer()
        _directory_outputs(
            config,
            {
                "report.json": writer.render_json(report.to_dict()),
                f"fisher{writer.suffix}": writer.render(curve.to_frame(), curve.to_dict()),
            },
            {"report": report.to_dict(), "fisher_curve": curve.to_dict()},
        )

    _run(action)


@app.command("simulate-counts")
def cmd_simulate_counts(
    state: StateKind = typer.Option(StateKind.YURKE, "--state"),
    n_photons: int = typer.Option(5, "--n"),
    indistinguishability: float = typer.Option(1.0, "--i"),
    noise: float = typer.Option(0.0, "--s"),
    scale: float = typer.Option(500.0, "--m", help="Overall scale M"),
    true_offset: float = typer.Option(0.0, "--phi0", help="Model phase minus label"),
    phase_start: float = typer.Option(0.0, "--phase-start"),
    phase_stop: float = typer.Option(2.0 * math.pi, "--phase-stop"),
    phase_step: Optional[float] = typer.Option(None, "--phase-step"),
    phase_scale: float = typer.Option(1.0, "--phase-scale"),
    phase_offset: float = typer.Option(0.0, "--phase-offset"),
    efficiency: Optional[Path] = typer.Option(None, "--efficiency", help="a1..a7,b1..b7 CSV"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Default SQUEEZING_DEFAULT_SEED"),
    noiseless: bool = typer.Option(False, "--noiseless", help="Write expected counts"),
    output_format: OutputFormat = typer.Option(OutputFormat.CSV, "--format"),
    output: Optional[Path] = typer.Option(None, "--output"),
) -> None:
    """Synthetic coincidence counts M P(m | phi) Sigma_m, Poisson-sampled."""

    def action() -> None:
        config = RunConfig.build(
            subcommand="simulate-counts",
            state=state,
            n_photons=n_photons,
            indistinguishability=indistinguishability,
            noise=noise,
            scale=scale,
            true_offset=true_offset,
            phase_start=phase_start,
            phase_stop=phase_stop,
            phase_step=phase_step,
            phase_scale=phase_scale,
            phase_offset=phase_offset,
            efficiency=efficiency,
            seed=seed,
            noiseless=noiseless,
            output_format=output_format,
            output=output,
        )
        config.check_files()
        records = simulate_records(
            config.grid(),
            config.efficiency_table(),
            config.scale,
            phase_offset=config.true_offset,
            seed=config.seed,
            noiseless=config.noiseless,
            distribution_fn=config.distribution_fn(config.build_state()),
        )
        frame = records_to_frame(records)
        writer = config.writer()
        writer.emit(
            writer.render(frame, {"records": frame.to_dict(orient="records")}), config.output
        )

    _run(action)


@app.command("fit")
def cmd_fit(
    counts: Path = typer.Option(..., "--counts", help="phi,D0..D5 CSV"),
    efficiency: Optional[Path] = typer.Option(None, "--efficiency"),
    fit_mode: FitMode = typer.Option(FitMode.GLOBAL, "--mode"),
    fixed_noise: Optional[float] = typer.Option(None, "--fix-s", help="Pin s instead of fitting"),
    iterations: Optional[int] = typer.Option(
        None, "--iterations", help="Monte-Carlo iterations; 0 skips the band"
    ),
    seed: Optional[int] = typer.Option(None, "--seed"),
    phase_start: float = typer.Option(-math.pi, "--phase-start"),
    phase_stop: float = typer.Option(math.pi, "--phase-stop"),
    phase_step: Optional[float] = typer.Option(None, "--phase-step"),
    phase_scale: float = typer.Option(1.0, "--phase-scale"),
    phase_offset: float = typer.Option(0.0, "--phase-offset"),
    output_format: OutputFormat = typer.Option(OutputFormat.CSV, "--format"),
    output: Optional[Path] = typer.Option(
        None, "--output", help="Directory for fit.json, fisher.<format>, band.<format>"
    ),
) -> None:
    """Fit counts, then the Fisher curve and its Monte-Carlo band."""

    def action() -> None:
        config = RunConfig.build(
            subcommand="fit",
            counts=counts,
            efficiency=efficiency,
            fit_mode=fit_mode,
            fixed_noise=fixed_noise,
            seed=seed,
            phase_start=phase_start,
            phase_stop=phase_stop,
            phase_step=phase_step,
            phase_scale=phase_scale,
            phase_offset=phase_offset,
            output_format=output_format,
            iterations=iterations,
            output=output,
        )
        config.check_files()

        table = config.efficiency_table()
        mapping = config.mapping
        records = [
            CoincidenceRecord(float(mapping.apply(r.phi)), r.counts, r.integration_time)
            for r in read_records(config.counts)
        ]
        fit = fit_fringe(records, table, config.fit_mode, config.fixed_noise)
        if not fit.converged:
            raise ConvergenceError(
                "Fringe fit did not converge", evaluations=fit.evaluations, best_so_far=fit
            )

        grid = PhaseGrid.from_range(config.phase_start, config.phase_stop, config.phase_step)
        curve = fisher_curve(fit.distribution_fn(), grid)
        writer = config.writer()
        documents = {
            "fit.json": writer.render_json(fit.to_dict()),
            f"fisher{writer.suffix}": writer.render(curve.to_frame(), curve.to_dict()),
        }
        bundle: Dict[str, Any] = {"fit": fit.to_dict(), "fisher_curve": curve.to_dict()}
        if config.iterations > 0:
            band = monte_carlo_fisher(
                records,
                table,
                config.iterations,
                config.seed,
                grid,
                base_fit=fit,
                fixed_noise=config.fixed_noise,
            )
            documents[f"band{writer.suffix}"] = writer.render(band.to_frame(), band.to_dict())
            bundle["band"] = band.to_dict()
        _directory_outputs(config, documents, bundle)

    _run(action)


def main() -> None:
    """Console-script entry point."""
    app()


__all__ = ["app", "main", "RunConfig", "StateKind", "OutputFormat"]
