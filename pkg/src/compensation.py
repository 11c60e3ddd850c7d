"""
compensation.py — Lift-off compensation of the peak frequency and thickness inversion.

Given the peak of a measured −Im ΔL spectrum (frequency and magnitude)
and a calibration captured at the sensor's baseline lift-off, the
amplitude drop ln(S/S_ref) determines the extra lift-off, the peak
frequency is corrected back to the baseline, and the plate thickness
follows from the first-order relation ω ≈ 2α₀/(σμ₀c).

Two compensation modes are available:

  • ``thin``: closed forms valid for α₀c ≪ 1 (the default).
  • ``full``: keeps the α₀²c term; needs c itself, so it is solved
    by fixed-point iteration seeded with the thin result.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
import numpy.typing as npt
from scipy.optimize import curve_fit

import config
from src.errors import CalibrationError, ConfigError, DomainError, NumericalError
from src.forward_model import MU0, CoilPair, predicted_alpha0
from src.spectral_peak import PeakEstimate

logger = logging.getLogger(__name__)

PI2 = math.pi**2

Mode = Literal["thin", "full"]
MODES: tuple[str, ...] = ("thin", "full")
SOURCES: tuple[str, ...] = ("simulated", "measured")
ALPHA0_METHODS: tuple[str, ...] = ("peak", "envelope")


# ─────────────────────────────────────────────
# Domain types
# ─────────────────────────────────────────────

@dataclass(frozen=True)
class CalibrationReference:
    """
    Baseline peak of the sensor, against which amplitude ratios are formed.

    ``alpha0_ref`` is the value used by the inversion.  With a known
    reference plate it is matched to the baseline peak frequency
    (``alpha0_method == "peak"``); otherwise it is the envelope maximum.
    """
    alpha0_ref: float          # 1/m
    s_ref: float               # H
    omega_ref: float           # rad/s
    coil: CoilPair
    source: str = "simulated"
    alpha0_envelope: Optional[float] = None
    alpha0_method: str = "peak"
    form: str = config.GEOMETRY_FORM
    sigma_ref: Optional[float] = None
    c_ref: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("alpha0_ref", "s_ref", "omega_ref"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigError(f"calibration {name} must be positive, got {value}")
        if self.source not in SOURCES:
            raise ConfigError(f"calibration source must be one of {SOURCES}, got '{self.source}'")
        if self.alpha0_method not in ALPHA0_METHODS:
            raise ConfigError(
                f"alpha0_method must be one of {ALPHA0_METHODS}, got '{self.alpha0_method}'"
            )


@dataclass(frozen=True)
class CompensationInput:
    omega_meas: float          # rad/s, as-measured peak frequency
    s_meas: float              # H, as-measured peak salience

    def __post_init__(self) -> None:
        if not self.omega_meas > 0:
            raise ConfigError(f"omega_meas must be positive, got {self.omega_meas}")
        if not self.s_meas > 0:
            raise ConfigError(f"s_meas must be positive, got {self.s_meas}")

    @classmethod
    def from_peak(cls, peak: PeakEstimate) -> "CompensationInput":
        return cls(omega_meas=peak.omega_peak, s_meas=peak.salience)


@dataclass(frozen=True)
class CompensationResult:
    ln_ratio: float
    alpha0_l0: float
    liftoff_extra: float       # m
    omega_comp: float          # rad/s
    thickness: float           # m
    mode: str
    omega_meas: float = float("nan")
    s_meas: float = float("nan")
    thickness_uncomp: float = float("nan")
    discriminant: float = float("nan")
    iterations: int = 0

    def __post_init__(self) -> None:
        if self.ln_ratio > 0:
            raise ConfigError(f"ln_ratio must be <= 0, got {self.ln_ratio}")
        if not 0 <= self.alpha0_l0 < PI2 / 4:
            raise ConfigError(f"alpha0_l0 outside [0, pi^2/4): {self.alpha0_l0}")
        if not self.thickness > 0:
            raise ConfigError(f"thickness must be positive, got {self.thickness}")

    def as_report(self) -> dict[str, object]:
        """Flat SI-unit report for JSON output."""
        return {
            "mode": self.mode,
            "omega_meas": self.omega_meas,
            "s_meas": self.s_meas,
            "ln_ratio": self.ln_ratio,
            "discriminant": self.discriminant,
            "alpha0_l0": self.alpha0_l0,
            "liftoff_extra_est": self.liftoff_extra,
            "omega_comp": self.omega_comp,
            "thickness_comp": self.thickness,
            "thickness_uncomp": self.thickness_uncomp,
            "iterations": self.iterations,
        }


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ConfigError(f"Unknown mode '{mode}'. Choose from: {', '.join(MODES)}")
    return mode


def _discriminant(ln_ratio: float) -> float:
    """π⁴ + 4π² ln_ratio, the discriminant of the α₀l quadratic."""
    return PI2 * PI2 + 4.0 * PI2 * ln_ratio


def _sqrt_d(ln_ratio: float) -> float:
    """√(π² + 4 ln_ratio), raising DomainError when not real and positive."""
    d = PI2 + 4.0 * ln_ratio
    if not d > 0:
        raise DomainError(
            f"ln_ratio {ln_ratio:.6g} outside the compensation domain",
            discriminant=_discriminant(ln_ratio),
        )
    return math.sqrt(d)


# ─────────────────────────────────────────────
# Amplitude ratio and lift-off
# ─────────────────────────────────────────────

def log_amplitude_ratio(
    s_meas: float,
    s_ref: float,
    clamp: float = config.LN_RATIO_CLAMP,
) -> float:
    """
    ln(S_meas / S_ref), clamped to 0 for small positive excursions.

    Raises
    ------
    CalibrationError
        ln ratio above ``+clamp``: the reference does not match the sensor.
    DomainError
        ln ratio below −π²/4: no real lift-off solution exists.
    """
    if not (s_meas > 0 and s_ref > 0):
        raise ConfigError(f"salience values must be positive, got {s_meas}, {s_ref}")
    ratio = math.log(s_meas / s_ref)
    if ratio > clamp:
        raise CalibrationError(
            f"measured peak exceeds the reference by ln ratio {ratio:.4g} "
            f"(> {clamp}); check the calibration reference"
        )
    if ratio > 0:
        logger.warning("ln ratio %.4g above zero within noise allowance; clamped to 0", ratio)
        return 0.0
    if ratio < -PI2 / 4:
        raise DomainError(
            f"ln ratio {ratio:.6g} below -pi^2/4", discriminant=_discriminant(ratio)
        )
    return ratio


def solve_alpha0_l0(ln_ratio: float) -> float:
    """
    Small root of 4x² − 2π²x − π² ln_ratio = 0, x = α₀l.

    Evaluated as −π² ln_ratio / (π² + √disc), the cancellation-free
    rearrangement of (π² − √disc)/4.
    """
    disc = _discriminant(ln_ratio)
    if disc < 0:
        raise DomainError(f"ln ratio {ln_ratio:.6g} has no real lift-off root", discriminant=disc)
    if ln_ratio > 0:
        raise DomainError(f"ln ratio must be <= 0, got {ln_ratio:.6g}", discriminant=disc)
    return -PI2 * ln_ratio / (PI2 + math.sqrt(disc))


def estimate_liftoff(ln_ratio: float, alpha0: float) -> float:
    """Extra lift-off in metres."""
    if not alpha0 > 0:
        raise ConfigError(f"alpha0 must be positive, got {alpha0}")
    return solve_alpha0_l0(ln_ratio) / alpha0


def ln_ratio_model(alpha0: float, extra_liftoff: npt.ArrayLike) -> npt.ArrayLike:
    """Predicted amplitude log-ratio −2(α₀ − 2α₀²l/π²)l."""
    l = np.asarray(extra_liftoff, dtype=float)
    value = -2.0 * (alpha0 - 2.0 * alpha0 * alpha0 * l / PI2) * l
    return value.item() if np.ndim(extra_liftoff) == 0 else value


def fit_ln_ratio_model(
    extras: Sequence[float],
    ln_ratios: Sequence[float],
) -> tuple[float, float]:
    """
    Least-squares α₀ for the log-ratio model.

    Returns
    -------
    (alpha0_fit, relative_rms)
        ``relative_rms`` is rms(residual) / rms(data).
    """
    x = np.asarray(extras, dtype=float)
    y = np.asarray(ln_ratios, dtype=float)
    moving = x > 0
    if not np.any(moving):
        raise ConfigError("fit needs at least one positive lift-off")
    guess = float(np.median(-y[moving] / (2.0 * x[moving])))
    popt, _ = curve_fit(lambda l, a: ln_ratio_model(a, l), x, y, p0=[guess])
    alpha0 = float(popt[0])
    residual = y - ln_ratio_model(alpha0, x)
    rel_rms = float(np.sqrt(np.mean(residual**2)) / np.sqrt(np.mean(y**2)))
    return alpha0, rel_rms


# ─────────────────────────────────────────────
# Peak-frequency relations
# ─────────────────────────────────────────────

def forward_peak_model(alpha0: float, sigma: float, c: float) -> float:
    """ω₁ = (2α₀²c + 2α₀)/(σμ₀c)."""
    return (2.0 * alpha0 * alpha0 * c + 2.0 * alpha0) / (sigma * MU0 * c)


def peak_frequency_with_liftoff(alpha0: float, extra_liftoff: float, sigma: float, c: float) -> float:
    """As-measured peak after a lift-off increase, using the shifted α₀."""
    return forward_peak_model(predicted_alpha0(alpha0, extra_liftoff), sigma, c)


def peak_matched_alpha0(omega_ref: float, sigma: float, c_ref: float) -> float:
    """α₀ that makes the thin-plate relation reproduce the reference peak."""
    return sigma * MU0 * c_ref * omega_ref / 2.0


def compensate_thin(omega_meas: float, ln_ratio: float) -> float:
    """ω₀′ = π ω_meas / √(π² + 4 ln_ratio)."""
    return math.pi * omega_meas / _sqrt_d(ln_ratio)


def _alpha0_from_peak(omega_meas: float, ln_ratio: float, sigma: float, c: float) -> float:
    """Baseline α₀ implied by a peak at ω_meas after the lift-off change, full form."""
    y = 2.0 * omega_meas * sigma * MU0 * c * c
    root_minus_one = math.expm1(0.5 * math.log1p(y))
    return math.pi * root_minus_one / (2.0 * c * _sqrt_d(ln_ratio))


def _thickness_from_peak(omega: float, sigma: float, alpha0: float) -> float:
    """Exact inversion of ω = (2α₀²c + 2α₀)/(σμ₀c) for c."""
    denom = sigma * MU0 * omega - 2.0 * alpha0 * alpha0
    if not denom > 0:
        raise DomainError(
            f"peak frequency {omega:.6g} rad/s at or below the thick-plate limit "
            f"2 alpha0^2/(sigma mu0) for alpha0={alpha0:.6g}"
        )
    return 2.0 * alpha0 / denom


@dataclass(frozen=True)
class FullModeSolution:
    omega_comp: float
    thickness: float
    alpha0: float
    iterations: int


def compensate_full(
    omega_meas: float,
    ln_ratio: float,
    sigma: float,
    c_seed: float,
    alpha0_ref: float,
    rel_tol: float = config.FULL_MODE_REL_TOL,
    max_iter: int = config.FULL_MODE_MAX_ITER,
) -> FullModeSolution:
    """
    Compensated peak frequency keeping the α₀²c term.

    Each iteration takes the current thickness c, recovers the baseline
    α₀ from the measured peak, evaluates the compensated frequency
    ω₀ = (2α₀²c + 2α₀)/(σμ₀c), and updates c by inverting that same
    relation at the calibration's ``alpha0_ref``.
    """
    if not (sigma > 0 and c_seed > 0):
        raise ConfigError(f"sigma and c_seed must be positive, got {sigma}, {c_seed}")
    c = c_seed
    omega0 = alpha0 = float("nan")
    for iteration in range(1, max_iter + 1):
        alpha0 = _alpha0_from_peak(omega_meas, ln_ratio, sigma, c)
        omega0 = forward_peak_model(alpha0, sigma, c)
        c_next = _thickness_from_peak(omega0, sigma, alpha0_ref)
        if abs(c_next - c) < rel_tol * c_next:
            logger.debug("full mode converged in %d iterations, c=%.9g m", iteration, c_next)
            return FullModeSolution(omega0, c_next, alpha0, iteration)
        c = c_next
    raise NumericalError(
        f"full-mode iteration did not converge in {max_iter} iterations "
        f"(last thickness {c:.9g} m, omega {omega0:.9g} rad/s)"
    )


# ─────────────────────────────────────────────
# Thickness
# ─────────────────────────────────────────────

def invert_thickness(omega_meas: float, ln_ratio: float, sigma: float, alpha0_ref: float) -> float:
    """c = 2α₀√(π² + 4 ln_ratio)/(π σ μ₀ ω_meas)."""
    return 2.0 * alpha0_ref * _sqrt_d(ln_ratio) / (math.pi * sigma * MU0 * omega_meas)


def uncompensated_thickness(omega_meas: float, sigma: float, alpha0_ref: float) -> float:
    """c = 2α₀/(σμ₀ω_meas), no lift-off correction."""
    return 2.0 * alpha0_ref / (sigma * MU0 * omega_meas)


def compensate(
    inp: CompensationInput,
    calib: CalibrationReference,
    sigma: float,
    mode: str = config.DEFAULT_MODE,
) -> CompensationResult:
    """Full chain from a measured peak to lift-off, compensated frequency and thickness."""
    check_mode(mode)
    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")

    ln_ratio = log_amplitude_ratio(inp.s_meas, calib.s_ref)
    alpha0_l0 = solve_alpha0_l0(ln_ratio)
    liftoff = alpha0_l0 / calib.alpha0_ref
    thickness_uncomp = uncompensated_thickness(inp.omega_meas, sigma, calib.alpha0_ref)
    thin_c = invert_thickness(inp.omega_meas, ln_ratio, sigma, calib.alpha0_ref)

    if mode == "thin":
        omega_comp, thickness, iterations = compensate_thin(inp.omega_meas, ln_ratio), thin_c, 0
    else:
        sol = compensate_full(inp.omega_meas, ln_ratio, sigma, thin_c, calib.alpha0_ref)
        omega_comp, thickness, iterations = sol.omega_comp, sol.thickness, sol.iterations

    if calib.alpha0_ref * thickness > config.THIN_REGIME_LIMIT:
        logger.warning(
            "alpha0*c = %.3g exceeds %.2g; thin-plate relations are unreliable",
            calib.alpha0_ref * thickness, config.THIN_REGIME_LIMIT,
        )

    logger.info(
        "ln ratio %.5f -> extra lift-off %.4g m, omega %.6g -> %.6g rad/s, c = %.6g m (%s)",
        ln_ratio, liftoff, inp.omega_meas, omega_comp, thickness, mode,
    )
    return CompensationResult(
        ln_ratio=ln_ratio,
        alpha0_l0=alpha0_l0,
        liftoff_extra=liftoff,
        omega_comp=omega_comp,
        thickness=thickness,
        mode=mode,
        omega_meas=inp.omega_meas,
        s_meas=inp.s_meas,
        thickness_uncomp=thickness_uncomp,
        discriminant=_discriminant(ln_ratio),
        iterations=iterations,
    )
