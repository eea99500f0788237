"""
Tests for the exception hierarchy and the exit-code mapping.
"""

import logging

import pytest

from squeezing_metrology.core.exceptions import (
    EXIT_FAILURE,
    EXIT_NON_CONVERGENCE,
    EXIT_PARSE,
    EXIT_USAGE,
    ConfigurationError,
    ConvergenceError,
    DataParseError,
    DimensionMismatchError,
    ErrorContext,
    ExportError,
    IllConditionedError,
    NumericalError,
    SqueezingError,
    ValidationError,
    ZeroStateError,
    exit_code_for,
    format_error_for_user,
)


def test_to_dict_carries_details():
    error = ValidationError("bad N", field="N", value=4, expected="odd N >= 3")
    data = error.to_dict()
    assert data["error_type"] == "ValidationError"
    assert data["error_code"] == "VALIDATION_ERROR"
    assert data["details"] == {"field": "N", "value": "4", "expected": "odd N >= 3"}
    assert "timestamp" in data


def test_parse_error_location():
    error = DataParseError("Non-numeric value", file_path="counts.csv", line=7, column="D3")
    assert error.details == {"file_path": "counts.csv", "line": 7, "column": "D3"}
    assert not error.recoverable
    assert "PARSE_ERROR" in str(error)


def test_numerical_errors_share_a_base():
    assert issubclass(IllConditionedError, NumericalError)
    assert issubclass(ConvergenceError, NumericalError)
    assert issubclass(DimensionMismatchError, ValidationError)

    error = ConvergenceError("stalled", evaluations=10, best_so_far={"I": 0.5})
    assert error.details["evaluations"] == 10
    assert error.best_so_far == {"I": 0.5}
    assert IllConditionedError("p -> 0", phi=0.25).details["phi"] == 0.25


@pytest.mark.parametrize(
    "error, code",
    [
        (ValidationError("x"), EXIT_USAGE),
        (DimensionMismatchError(3, 4), EXIT_USAGE),
        (ConfigurationError("x"), EXIT_USAGE),
        (DataParseError("x"), EXIT_PARSE),
        (FileNotFoundError("x"), EXIT_PARSE),
        (ConvergenceError("x"), EXIT_NON_CONVERGENCE),
        (IllConditionedError("x"), EXIT_NON_CONVERGENCE),
        (ZeroStateError(), EXIT_FAILURE),
        (ExportError("x"), EXIT_FAILURE),
        (RuntimeError("x"), EXIT_FAILURE),
    ],
)
def test_exit_codes(error, code):
    assert exit_code_for(error) == code


def test_error_context_wraps_foreign_errors(caplog):
    logger = logging.getLogger("test")
    with pytest.raises(SqueezingError) as info:
        with ErrorContext("reading counts", logger=logger):
            raise KeyError("D9")
    assert info.value.details["operation"] == "reading counts"
    assert isinstance(info.value.__cause__, KeyError)
    assert "Error in reading counts" in caplog.text


def test_error_context_raises_requested_class():
    with pytest.raises(DataParseError) as info:
        with ErrorContext("reading counts.csv", error_class=DataParseError, file_path="counts.csv"):
            raise UnicodeDecodeError("utf-8", b"\xff", 0, 1, "invalid start byte")
    assert info.value.details["file_path"] == "counts.csv"
    assert info.value.details["operation"] == "reading counts.csv"
    assert exit_code_for(info.value) == EXIT_PARSE


def test_error_context_passes_own_errors_and_suppresses():
    with pytest.raises(ZeroStateError):
        with ErrorContext("normalizing"):
            raise ZeroStateError()

    with ErrorContext("optional step", reraise=False) as context:
        raise ValueError("ignored")
    assert isinstance(context.error, ValueError)


def test_format_error_for_user():
    formatted = format_error_for_user(ValidationError("bad s", field="s"))
    assert formatted["error"] is True
    assert formatted["code"] == "VALIDATION_ERROR"
    assert formatted["details"] == {"field": "s"}

    generic = format_error_for_user(RuntimeError("boom"))
    assert generic["code"] == "UNKNOWN_ERROR"
    assert generic["message"] == "boom"
