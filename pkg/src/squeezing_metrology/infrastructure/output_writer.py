"""
Output writer for CSV and JSON results.

Tables go through pandas with a fixed float format; JSON payloads have
numpy values converted and floats rounded to the configured significant
digits. Files are staged next to their destination and renamed into place,
so a failed command leaves no partial output.
"""

import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from ..core.config import get_config
from ..core.exceptions import ExportError, ValidationError

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")


def to_jsonable(value: Any, digits: int = 17) -> Any:
    """Convert numpy types and round floats; non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v, digits) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist(), digits)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f"{value:.{digits}g}")
    return value


def json_text(payload: Any, digits: int = 17) -> str:
    return json.dumps(to_jsonable(payload, digits), indent=2, allow_nan=False) + "\n"


def csv_text(frame: pd.DataFrame, digits: int = 17) -> str:
    return frame.to_csv(index=False, float_format=f"%.{digits}g", lineterminator="\n")


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """Write through a temporary file in the destination directory, then rename."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, temp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(temp_name, path)
        except BaseException:
            Path(temp_name).unlink(missing_ok=True)
            raise
    except OSError as e:
        raise ExportError(f"Cannot write {path}: {e}", file_path=str(path)) from e
    logger.info("Wrote %s", path)
    return path


class OutputWriter:
    """Renders results as CSV or JSON to files or stdout."""

    def __init__(self, output_format: str = "csv", digits: Optional[int] = None):
        if output_format not in FORMATS:
            raise ValidationError(
                f"Unknown output format {output_format!r}",
                field="format",
                expected=" | ".join(FORMATS),
            )
        self.output_format = output_format
        self.digits = digits or get_config().float_digits

    def render(self, frame: Optional[pd.DataFrame], payload: Any) -> str:
        """CSV from ``frame`` or JSON from ``payload`` per the chosen format."""
        if self.output_format == "csv" and frame is not None:
            return csv_text(frame, self.digits)
        return json_text(payload, self.digits)

    def render_json(self, payload: Any) -> str:
        return json_text(payload, self.digits)

    @property
    def suffix(self) -> str:
        return f".{self.output_format}"

    def emit(self, text: str, path: Optional[Union[str, Path]] = None) -> None:
        """Write to ``path`` atomically, or to stdout when no path is given."""
        if path is None:
            sys.stdout.write(text)
            sys.stdout.flush()
        else:
            atomic_write_text(path, text)

    def emit_all(self, documents: Dict[Path, str]) -> None:
        """Stage every document first, then rename them all into place."""
        staged = []
        try:
            for path, text in documents.items():
                path.parent.mkdir(parents=True, exist_ok=True)
                fd, temp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
                staged.append((temp_name, path))
                with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                    f.write(text)
        except OSError as e:
            for temp_name, _ in staged:
                Path(temp_name).unlink(missing_ok=True)
            raise ExportError(f"Cannot stage output: {e}") from e
        for temp_name, path in staged:
            os.replace(temp_name, path)
            logger.info("Wrote %s", path)


__all__ = [
    "FORMATS",
    "to_jsonable",
    "json_text",
    "csv_text",
    "atomic_write_text",
    "OutputWriter",
]
