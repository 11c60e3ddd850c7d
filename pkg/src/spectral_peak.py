"""
spectral_peak.py — Frequency sweeps of the forward model and peak extraction.

The thickness-sensitive feature is the frequency at which the salience
S(ω) = −Im ΔL(ω) peaks.  Sweeps are geometric; the discrete maximum is
refined with a three-point parabola in (ln ω, S).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

import config
from src.errors import ConfigError, NoPeakError, NumericalError
from src.forward_model import CoilPair, Plate, delta_l
from src.quadrature import QuadratureSettings

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


# ─────────────────────────────────────────────
# Domain types
# ─────────────────────────────────────────────

@dataclass(frozen=True)
class FrequencyGrid:
    """Geometric sweep definition in hertz."""
    f_min: float = config.F_MIN_HZ
    f_max: float = config.F_MAX_HZ
    points_per_decade: int = config.POINTS_PER_DECADE

    def __post_init__(self) -> None:
        if not 0 < self.f_min < self.f_max:
            raise ConfigError(
                f"frequency grid needs 0 < f_min < f_max, got {self.f_min}, {self.f_max}"
            )
        if self.points_per_decade < 10:
            raise ConfigError(
                f"points_per_decade must be >= 10, got {self.points_per_decade}"
            )


@dataclass(frozen=True)
class SpectralSample:
    omega: float       # rad/s
    delta_l: complex   # H


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Immutable, strictly ordered samples of ΔL(ω)."""
    omega: np.ndarray
    delta_l: np.ndarray

    def __post_init__(self) -> None:
        omega = np.array(self.omega, dtype=float)
        dl = np.array(self.delta_l, dtype=complex)
        if omega.ndim != 1 or omega.shape != dl.shape:
            raise ConfigError("spectrum needs matching 1-D omega and delta_l arrays")
        if omega.size < config.MIN_SPECTRUM_SAMPLES:
            raise ConfigError(
                f"spectrum needs at least {config.MIN_SPECTRUM_SAMPLES} samples, got {omega.size}"
            )
        if not np.all(omega > 0):
            raise ConfigError("spectrum angular frequencies must be positive")
        if not np.all(np.diff(omega) > 0):
            raise ConfigError("spectrum angular frequencies must be strictly increasing")
        omega.flags.writeable = False
        dl.flags.writeable = False
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "delta_l", dl)

    @classmethod
    def from_samples(cls, samples: Sequence[SpectralSample]) -> "Spectrum":
        return cls(
            omega=np.array([s.omega for s in samples]),
            delta_l=np.array([s.delta_l for s in samples]),
        )

    @property
    def frequency_hz(self) -> np.ndarray:
        return self.omega / TWO_PI

    @property
    def salience(self) -> np.ndarray:
        """S(ω) = −Im ΔL(ω); non-negative for a nonmagnetic conductor."""
        return -self.delta_l.imag

    @property
    def samples(self) -> list[SpectralSample]:
        return list(iter(self))

    def __iter__(self) -> Iterator[SpectralSample]:
        for w, dl in zip(self.omega, self.delta_l):
            yield SpectralSample(omega=float(w), delta_l=complex(dl))

    def __len__(self) -> int:
        return int(self.omega.size)


@dataclass(frozen=True)
class PeakEstimate:
    omega_peak: float      # rad/s
    salience: float        # H, peak of −Im ΔL
    index: int             # position of the discrete maximum
    boundary_flag: bool

    @property
    def frequency_hz(self) -> float:
        return self.omega_peak / TWO_PI


# ─────────────────────────────────────────────
# Sweeps
# ─────────────────────────────────────────────

def make_log_grid(grid: FrequencyGrid) -> np.ndarray:
    """Geometric frequencies f_min … f_max inclusive, in hertz."""
    decades = math.log10(grid.f_max / grid.f_min)
    count = math.ceil(round(decades * grid.points_per_decade, 9)) + 1
    return np.geomspace(grid.f_min, grid.f_max, count)


def simulate_at(
    frequencies_hz: Sequence[float],
    coil: CoilPair,
    plate: Plate,
    extra_liftoff: float = 0.0,
    settings: QuadratureSettings = QuadratureSettings(),
    form: str = config.GEOMETRY_FORM,
    progress_callback: Optional[Callable[[str, float], None]] = None,
) -> Spectrum:
    """Evaluate ΔL at each given frequency, in order."""
    freqs = np.asarray(frequencies_hz, dtype=float)
    values = np.empty(freqs.size, dtype=complex)
    for i, f in enumerate(freqs):
        try:
            values[i] = delta_l(TWO_PI * f, coil, plate, extra_liftoff, settings, form)
        except NumericalError as exc:
            err = NumericalError(f"forward model failed at {f:.6g} Hz: {exc}")
            err.frequency_hz = float(f)
            raise err from exc
        if progress_callback and (i + 1) % 25 == 0:
            progress_callback(f"{i + 1}/{freqs.size} frequencies", (i + 1) / freqs.size)
    return Spectrum(omega=TWO_PI * freqs, delta_l=values)


def simulate_spectrum(
    grid: FrequencyGrid,
    coil: CoilPair,
    plate: Plate,
    extra_liftoff: float = 0.0,
    settings: QuadratureSettings = QuadratureSettings(),
    form: str = config.GEOMETRY_FORM,
    progress_callback: Optional[Callable[[str, float], None]] = None,
) -> Spectrum:
    """One ΔL evaluation per grid frequency."""
    logger.info(
        "Simulating %.4g-%.4g Hz at %d/decade, c=%.4g m, extra lift-off %.4g m",
        grid.f_min, grid.f_max, grid.points_per_decade, plate.c, extra_liftoff,
    )
    return simulate_at(
        make_log_grid(grid), coil, plate, extra_liftoff, settings, form, progress_callback
    )


# ─────────────────────────────────────────────
# Peak extraction
# ─────────────────────────────────────────────

def _parabola_vertex(x: np.ndarray, y: np.ndarray) -> Optional[tuple[float, float]]:
    """Vertex of the parabola through three points, or None if not concave."""
    x0, x1, x2 = x
    y0, y1, y2 = y
    # Fit y = y1 + b·u + a·u² in u = x − x1.
    u0, u2 = x0 - x1, x2 - x1
    s0, s2 = (y0 - y1) / u0, (y2 - y1) / u2
    a = (s0 - s2) / (u0 - u2)
    b = s0 - a * u0
    if not a < 0:
        return None
    return x1 - b / (2.0 * a), y1 - b * b / (4.0 * a)


def find_peak(spectrum: Spectrum) -> PeakEstimate:
    """
    Locate the maximum of −Im ΔL.

    Ties go to the lower frequency.  A maximum on the first or last
    sample is reported unrefined with ``boundary_flag`` set.
    """
    s = spectrum.salience
    idx = int(np.argmax(s))
    if not s[idx] > 0:
        raise NoPeakError("salience is non-positive everywhere; no peak to locate")

    omega = spectrum.omega
    if idx == 0 or idx == s.size - 1:
        logger.warning("Salience peak on the sweep boundary at %.6g rad/s", omega[idx])
        return PeakEstimate(float(omega[idx]), float(s[idx]), idx, True)

    window = slice(idx - 1, idx + 2)
    vertex = _parabola_vertex(np.log(omega[window]), s[window])
    if vertex is None:
        return PeakEstimate(float(omega[idx]), float(s[idx]), idx, False)
    ln_w, peak = vertex
    return PeakEstimate(float(math.exp(ln_w)), float(peak), idx, False)
