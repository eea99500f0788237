"""
Shared fixtures for the squeezing metrology test suite.
"""

import math

import pytest

from squeezing_metrology.core.config import reload_config
from squeezing_metrology.processors.detector import EfficiencyTable
from squeezing_metrology.processors.interferometer import PhaseGrid


@pytest.fixture
def configure(monkeypatch):
    """Set SQUEEZING_* variables and reload the global configuration."""

    def apply(**values):
        for name, value in values.items():
            monkeypatch.setenv(f"SQUEEZING_{name.upper()}", str(value))
        return reload_config()

    yield apply
    monkeypatch.undo()
    reload_config()


@pytest.fixture
def measured_table():
    return EfficiencyTable.measured_table()


@pytest.fixture
def bright_table():
    """Equal 10% detectors, giving coincidence counts large enough to refit."""
    return EfficiencyTable.uniform(0.1)


@pytest.fixture
def full_period_grid():
    """30 labels over [-pi, pi) in steps of pi/15."""
    return PhaseGrid.from_range(-math.pi, math.pi, math.pi / 15)


@pytest.fixture
def centred_grid():
    """30 points over [-pi/2, pi/2) that include phi = 0."""
    return PhaseGrid.from_range(-math.pi / 2, math.pi / 2, math.pi / 30)
