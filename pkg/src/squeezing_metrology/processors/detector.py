"""
Multiplexed pseudo-number-resolving detection.

Each output arm is split over seven single-photon detectors; m clicks among
the a-detectors and N - m among the b-detectors are taken to be m and N - m
photons. Two photons reaching the same detector are not modelled.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..core.exceptions import DataParseError, ErrorContext, ValidationError
from ..models.fock import check_photon_number

logger = logging.getLogger(__name__)

DETECTORS_PER_ARM = 7

# Single-photon detection probabilities of the experimental setup
MEASURED_SIGMA_A = (0.0140, 0.0125, 0.0143, 0.0146, 0.0153, 0.0154, 0.0148)
MEASURED_SIGMA_B = (0.0116, 0.0145, 0.0130, 0.0112, 0.0111, 0.0136, 0.0158)

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


def _read_csv(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise DataParseError(f"File not found: {path}", file_path=str(path))
    with ErrorContext(
        f"reading {path}", logger=logger, error_class=DataParseError, file_path=str(path)
    ):
        frame = pd.read_csv(path, skipinitialspace=True)
    return frame


def _numeric_columns(
    frame: pd.DataFrame, columns: Sequence[str], source: Optional[str]
) -> np.ndarray:
    """Convert columns to floats, reporting the first bad cell by line and column."""
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataParseError(
            f"Missing columns: {', '.join(missing)}", file_path=source, line=1, column=missing[0]
        )
    values = frame[list(columns)].apply(pd.to_numeric, errors="coerce").to_numpy(float)
    bad = ~np.isfinite(values)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise DataParseError(
            f"Non-numeric value {frame.iloc[row][columns[col]]!r}",
            file_path=source,
            line=int(row) + 2,
            column=columns[col],
        )
    return values


@dataclass(frozen=True, eq=False)
class EfficiencyTable:
    """Per-detector single-photon detection probabilities for arms a and b."""

    sigma_a: np.ndarray
    sigma_b: np.ndarray

    def __post_init__(self) -> None:
        for name in ("sigma_a", "sigma_b"):
            values = np.array(getattr(self, name), dtype=float).reshape(-1)
            if values.size != DETECTORS_PER_ARM:
                raise ValidationError(
                    f"{name} needs {DETECTORS_PER_ARM} entries",
                    field=name,
                    value=values.size,
                )
            if not np.all(np.isfinite(values)) or np.any(values < 0) or np.any(values > 1):
                raise ValidationError(
                    "Detection probabilities must lie in [0, 1]", field=name, expected="[0, 1]"
                )
            values.setflags(write=False)
            object.__setattr__(self, name, values)

    @classmethod
    def measured_table(cls) -> "EfficiencyTable":
        return cls(np.array(MEASURED_SIGMA_A), np.array(MEASURED_SIGMA_B))

    @classmethod
    def uniform(cls, sigma: float) -> "EfficiencyTable":
        return cls(np.full(DETECTORS_PER_ARM, sigma), np.full(DETECTORS_PER_ARM, sigma))

    @staticmethod
    def columns() -> List[str]:
        return [f"a{i}" for i in range(1, DETECTORS_PER_ARM + 1)] + [
            f"b{i}" for i in range(1, DETECTORS_PER_ARM + 1)
        ]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([np.concatenate([self.sigma_a, self.sigma_b])], columns=self.columns())

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "EfficiencyTable":
        """Read a one-row CSV with columns a1..a7,b1..b7 (decimal fractions)."""
        frame = _read_csv(path)
        values = _numeric_columns(frame, cls.columns(), str(path))
        if values.shape[0] != 1:
            raise DataParseError(
                f"Efficiency file must hold one data row, found {values.shape[0]}",
                file_path=str(path),
            )
        try:
            return cls(values[0, :DETECTORS_PER_ARM], values[0, DETECTORS_PER_ARM:])
        except ValidationError as e:
            raise DataParseError(e.message, file_path=str(path), line=2) from e


def elementary_symmetric(values: Sequence[float], order: int) -> float:
    """e_k(x_1..x_n) by the standard O(n k) recurrence."""
    values = np.asarray(values, dtype=float)
    if order < 0 or order > values.size:
        return 0.0
    partial = np.zeros(order + 1)
    partial[0] = 1.0
    for x in values:
        partial[1:] = partial[1:] + x * partial[:-1]
    return float(partial[order])


def coincidence_efficiency(table: EfficiencyTable, m: int, n_photons: int = 5) -> float:
    """
    Sigma_m = m! e_m(sigma_a) (N - m)! e_{N-m}(sigma_b).

    Probability that m photons in arm a and N - m in arm b light as many
    distinct detectors.
    """
    n_photons = check_photon_number(n_photons)
    if isinstance(m, bool) or int(m) != m or not 0 <= m <= n_photons:
        raise ValidationError(
            "Outcome index out of range", field="m", value=m, expected=f"0..{n_photons}"
        )
    m = int(m)
    return (
        math.factorial(m)
        * elementary_symmetric(table.sigma_a, m)
        * math.factorial(n_photons - m)
        * elementary_symmetric(table.sigma_b, n_photons - m)
    )


def coincidence_efficiencies(table: EfficiencyTable, n_photons: int = 5) -> np.ndarray:
    return np.array([coincidence_efficiency(table, m, n_photons) for m in range(n_photons + 1)])


@dataclass(frozen=True, eq=False)
class CoincidenceRecord:
    """N-fold coincidence counts D_m at one phase setting."""

    phi: float
    counts: np.ndarray
    integration_time: Optional[float] = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.phi):
            raise ValidationError("Phase label must be finite", field="phi", value=self.phi)
        counts = np.array(self.counts, dtype=float).reshape(-1)
        if counts.size < 2:
            raise ValidationError("Record needs at least two outcomes", field="counts")
        if not np.all(np.isfinite(counts)) or np.any(counts < 0):
            raise ValidationError(
                "Counts must be finite and nonnegative", field="counts", value=counts.tolist()
            )
        if self.integration_time is not None and not self.integration_time > 0:
            raise ValidationError(
                "Integration time must be positive",
                field="integration_time",
                value=self.integration_time,
            )
        counts.setflags(write=False)
        object.__setattr__(self, "phi", float(self.phi))
        object.__setattr__(self, "counts", counts)

    @property
    def n_photons(self) -> int:
        return self.counts.size - 1

    @property
    def total(self) -> float:
        return float(self.counts.sum())


def rescale_counts(record: CoincidenceRecord, table: EfficiencyTable) -> np.ndarray:
    """D'_m = D_m / Sigma_m."""
    efficiencies = coincidence_efficiencies(table, record.n_photons)
    if np.any(efficiencies <= 0):
        raise ValidationError(
            "Detector table gives zero coincidence efficiency",
            field="efficiency",
            value=efficiencies.tolist(),
        )
    return record.counts / efficiencies


def expected_counts(
    probabilities: np.ndarray, scale: float, table: EfficiencyTable
) -> np.ndarray:
    """E[D_m] = M P_m Sigma_m."""
    probabilities = np.asarray(probabilities, dtype=float)
    if scale < 0 or not math.isfinite(scale):
        raise ValidationError("Scale M must be finite and nonnegative", field="M", value=scale)
    n_photons = probabilities.size - 1
    return scale * probabilities * coincidence_efficiencies(table, n_photons)


def sample_poisson_counts(
    expected: np.ndarray,
    seed: SeedLike = None,
    phi: float = 0.0,
    integration_time: Optional[float] = None,
) -> CoincidenceRecord:
    """Independent Poisson draws per outcome; deterministic for a fixed seed."""
    expected = np.asarray(expected, dtype=float)
    if not np.all(np.isfinite(expected)) or np.any(expected < 0):
        raise ValidationError("Rates must be finite and nonnegative", field="expected")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return CoincidenceRecord(phi, rng.poisson(expected).astype(float), integration_time)


def count_columns(n_photons: int) -> List[str]:
    return [f"D{m}" for m in range(n_photons + 1)]


def records_to_frame(records: Sequence[CoincidenceRecord]) -> pd.DataFrame:
    if not records:
        raise ValidationError("No records to write", field="records")
    columns = count_columns(records[0].n_photons)
    frame = pd.DataFrame([r.counts for r in records], columns=columns)
    frame.insert(0, "phi", [r.phi for r in records])
    if any(r.integration_time is not None for r in records):
        frame["integration_time"] = [r.integration_time for r in records]
    return frame


def read_records(path: Union[str, Path]) -> List[CoincidenceRecord]:
    """Read rows phi,D0..DN[,integration_time] from CSV."""
    frame = _read_csv(path)
    source = str(path)
    count_names = [c for c in frame.columns if str(c).startswith("D")]
    if not count_names or count_names != count_columns(len(count_names) - 1):
        raise DataParseError("Count columns must be D0..DN in order", file_path=source, line=1)
    phases = _numeric_columns(frame, ["phi"], source)[:, 0]
    counts = _numeric_columns(frame, count_names, source)
    times = None
    if "integration_time" in frame.columns:
        times = _numeric_columns(frame, ["integration_time"], source)[:, 0]

    records = []
    for row, (phi, row_counts) in enumerate(zip(phases, counts)):
        try:
            records.append(
                CoincidenceRecord(phi, row_counts, None if times is None else float(times[row]))
            )
        except ValidationError as e:
            raise DataParseError(e.message, file_path=source, line=row + 2) from e
    if not records:
        raise DataParseError("Counts file holds no records", file_path=source)
    logger.info("Read %d coincidence records from %s", len(records), source)
    return records


__all__ = [
    "DETECTORS_PER_ARM",
    "MEASURED_SIGMA_A",
    "MEASURED_SIGMA_B",
    "EfficiencyTable",
    "elementary_symmetric",
    "coincidence_efficiency",
    "coincidence_efficiencies",
    "CoincidenceRecord",
    "rescale_counts",
    "expected_counts",
    "sample_poisson_counts",
    "count_columns",
    "records_to_frame",
    "read_records",
]
