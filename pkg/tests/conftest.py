"""Shared fixtures: built-in sensor, plates and cached simulated spectra."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

import pytest

from presets.tables import PLATE_22UM, PLATE_44UM, TABLE1_COIL
from src.forward_model import Plate
from src.pipeline import reference_from_spectrum
from src.spectral_peak import FrequencyGrid, Spectrum, simulate_spectrum

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "configs"


@lru_cache(maxsize=None)
def simulated(c: float, extra: float, grid: FrequencyGrid = FrequencyGrid()) -> Spectrum:
    return simulate_spectrum(grid, TABLE1_COIL, Plate(sigma=PLATE_22UM.sigma, c=c), extra)


@pytest.fixture(scope="session")
def coil():
    return TABLE1_COIL


@pytest.fixture(scope="session")
def plate22():
    return PLATE_22UM


@pytest.fixture(scope="session")
def plate44():
    return PLATE_44UM


@pytest.fixture(scope="session")
def spectrum_at():
    """``spectrum_at(c, extra)`` on the default grid, cached per session."""
    return simulated


@pytest.fixture(scope="session")
def baseline22(plate22):
    return simulated(plate22.c, 0.0)


@pytest.fixture(scope="session")
def calib22(coil, plate22, baseline22):
    return reference_from_spectrum(baseline22, coil, "simulated", plate22)
