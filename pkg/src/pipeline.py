"""
pipeline.py — End-to-end orchestrator.

Ties together every stage of the thickness-gauging chain:
  1. Simulate (or ingest) the ΔL spectrum of a coil pair over a plate.
  2. Locate the peak of −Im ΔL.
  3. Calibrate against the baseline-lift-off peak.
  4. Compensate lift-off and invert thickness.

On top of those stages it builds the thickness table and the figure data
sets.  This module is the single entry point used by ``cli.py``; every
long-running function accepts an optional ``progress_callback``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

import config
from presets.tables import (
    IMMUNITY_EXTRA_LIFTOFFS,
    PLATE_22UM,
    SPECTRA_EXTRA_LIFTOFFS,
    SWEEP_EXTRA_LIFTOFFS,
    TABLE1_COIL,
    TABLE2_CASES,
    Table2Case,
)
from src.compensation import (
    CalibrationReference,
    CompensationInput,
    CompensationResult,
    compensate,
    fit_ln_ratio_model,
    ln_ratio_model,
    peak_matched_alpha0,
)
from src.errors import ConfigError, NumericalError
from src.forward_model import CoilPair, Plate, characteristic_alpha0, envelope
from src.measurement_io import SweepPair, impedance_to_delta_l
from src.quadrature import QuadratureSettings
from src.spectral_peak import FrequencyGrid, PeakEstimate, Spectrum, find_peak, simulate_spectrum

logger = logging.getLogger(__name__)

Progress = Optional[Callable[[str, float], None]]


def _reporter(progress_callback: Progress) -> Callable[[str, float], None]:
    def _progress(msg: str, frac: float) -> None:
        logger.info("[%.0f%%] %s", frac * 100, msg)
        if progress_callback:
            progress_callback(msg, frac)
    return _progress


def _band(progress: Callable[[str, float], None], start: float, width: float) -> Callable[[str, float], None]:
    """Map a sub-task's 0-1 progress into [start, start + width]."""
    def _inner(msg: str, frac: float) -> None:
        progress(msg, start + frac * width)
    return _inner


def _interior_peak(spectrum: Spectrum, what: str) -> PeakEstimate:
    peak = find_peak(spectrum)
    if peak.boundary_flag:
        raise NumericalError(
            f"{what} peak lies on the sweep boundary at {peak.frequency_hz:.6g} Hz; "
            "widen the frequency range"
        )
    return peak


# ─────────────────────────────────────────────
# Calibration
# ─────────────────────────────────────────────

def reference_from_peak(
    peak: PeakEstimate,
    coil: CoilPair,
    source: str,
    plate: Optional[Plate] = None,
    form: str = config.GEOMETRY_FORM,
) -> CalibrationReference:
    """
    Build a calibration from the baseline peak.

    With a known reference plate, α₀ is matched to the baseline peak;
    without one, the envelope maximum is used and a warning is logged.
    """
    alpha0_env = characteristic_alpha0(coil, 0.0, form)
    if plate is not None:
        alpha0_ref = peak_matched_alpha0(peak.omega_peak, plate.sigma, plate.c)
        method = "peak"
    else:
        logger.warning(
            "No reference plate given; using the envelope alpha0 %.6g 1/m, "
            "thickness estimates may be biased",
            alpha0_env,
        )
        alpha0_ref = alpha0_env
        method = "envelope"

    return CalibrationReference(
        alpha0_ref=alpha0_ref,
        s_ref=peak.salience,
        omega_ref=peak.omega_peak,
        coil=coil,
        source=source,
        alpha0_envelope=alpha0_env,
        alpha0_method=method,
        form=form,
        sigma_ref=plate.sigma if plate else None,
        c_ref=plate.c if plate else None,
    )


def reference_from_spectrum(
    spectrum: Spectrum,
    coil: CoilPair,
    source: str,
    plate: Optional[Plate] = None,
    form: str = config.GEOMETRY_FORM,
) -> CalibrationReference:
    return reference_from_peak(_interior_peak(spectrum, "reference"), coil, source, plate, form)


def calibrate_simulated(
    coil: CoilPair,
    plate: Plate,
    grid: FrequencyGrid = FrequencyGrid(),
    settings: QuadratureSettings = QuadratureSettings(),
    form: str = config.GEOMETRY_FORM,
    progress_callback: Progress = None,
) -> CalibrationReference:
    """Calibration from a simulated baseline-lift-off sweep of ``plate``."""
    progress = _reporter(progress_callback)
    progress("Simulating baseline spectrum…", 0.0)
    spectrum = simulate_spectrum(
        grid, coil, plate, 0.0, settings, form, progress_callback=_band(progress, 0.0, 0.9)
    )
    calib = reference_from_spectrum(spectrum, coil, "simulated", plate, form)
    progress("Calibration ready.", 1.0)
    return calib


def calibrate_measured(
    pair: SweepPair,
    coil: CoilPair,
    plate: Optional[Plate] = None,
    form: str = config.GEOMETRY_FORM,
) -> CalibrationReference:
    """Calibration from a measured baseline sweep pair."""
    return reference_from_spectrum(impedance_to_delta_l(pair), coil, "measured", plate, form)


# ─────────────────────────────────────────────
# Inversion
# ─────────────────────────────────────────────

def invert(
    spectrum: Spectrum,
    calib: CalibrationReference,
    sigma: float,
    mode: str = config.DEFAULT_MODE,
) -> CompensationResult:
    """Peak extraction, lift-off compensation and thickness for one spectrum."""
    peak = _interior_peak(spectrum, "measured")
    return compensate(CompensationInput.from_peak(peak), calib, sigma, mode)


def invert_sweeps(
    pair: SweepPair,
    calib: CalibrationReference,
    sigma: float,
    mode: str = config.DEFAULT_MODE,
) -> CompensationResult:
    return invert(impedance_to_delta_l(pair), calib, sigma, mode)


# ─────────────────────────────────────────────
# Thickness table
# ─────────────────────────────────────────────

TABLE2_HEADER = (
    "liftoff_m",
    "extra_liftoff_m",
    "actual_thickness_m",
    "uncompensated_thickness_m",
    "compensated_thickness_m",
    "printed_uncompensated_m",
    "printed_compensated_m",
    "omega_meas_rad_s",
    "omega_comp_rad_s",
    "liftoff_extra_est_m",
)


@dataclass(frozen=True)
class Table2Row:
    case: Table2Case
    result: CompensationResult

    @property
    def relative_error(self) -> float:
        return (self.result.thickness - self.case.thickness) / self.case.thickness

    def as_row(self) -> tuple[float, ...]:
        return (
            self.case.liftoff,
            self.case.extra_liftoff,
            self.case.thickness,
            self.result.thickness_uncomp,
            self.result.thickness,
            self.case.printed_uncompensated,
            self.case.printed_compensated,
            self.result.omega_meas,
            self.result.omega_comp,
            self.result.liftoff_extra,
        )


def table2_rows(
    coil: CoilPair = TABLE1_COIL,
    cases: Sequence[Table2Case] = TABLE2_CASES,
    reference: Plate = PLATE_22UM,
    mode: str = config.DEFAULT_MODE,
    grid: FrequencyGrid = FrequencyGrid(),
    settings: QuadratureSettings = QuadratureSettings(),
    form: str = config.GEOMETRY_FORM,
    progress_callback: Progress = None,
) -> list[Table2Row]:
    """
    Simulate every (lift-off, thickness) case end to end.

    One calibration is taken on the ``reference`` plate at the baseline
    lift-off.  Each case is then simulated on a plate of the reference
    conductivity at its extra lift-off and inverted against that single
    calibration as if it were a measurement.
    """
    progress = _reporter(progress_callback)
    steps = 1 + len(cases)

    progress(f"Calibrating on the {reference.c * 1e6:.4g} um reference plate…", 0.0)
    calib = calibrate_simulated(coil, reference, grid, settings, form)

    rows: list[Table2Row] = []
    for i, case in enumerate(cases, start=1):
        progress(
            f"Lift-off {case.liftoff * 1e3:.4g} mm, {case.thickness * 1e6:.4g} um plate…",
            i / steps,
        )
        plate = Plate(sigma=reference.sigma, c=case.thickness, mu_r=reference.mu_r)
        spectrum = simulate_spectrum(grid, coil, plate, case.extra_liftoff, settings, form)
        result = invert(spectrum, calib, reference.sigma, mode)
        rows.append(Table2Row(case=case, result=result))

    progress("Thickness table complete.", 1.0)
    return rows


# ─────────────────────────────────────────────
# Figure data
# ─────────────────────────────────────────────

@dataclass
class FigureData:
    name: str
    header: tuple[str, ...]
    rows: list[tuple[float, ...]]
    meta: dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        idx = self.header.index(name)
        return np.array([row[idx] for row in self.rows], dtype=float)


@dataclass(frozen=True)
class _FigureContext:
    coil: CoilPair
    plate: Plate
    grid: FrequencyGrid
    settings: QuadratureSettings
    form: str


def _envelope_figure(ctx: _FigureContext, progress: Callable[[str, float], None]) -> FigureData:
    """Normalised envelope against the sin² surrogate over (0, 2α₀]."""
    alpha0 = characteristic_alpha0(ctx.coil, 0.0, ctx.form)
    alpha = np.linspace(2.0 * alpha0 / 400, 2.0 * alpha0, 400)
    env = np.asarray(envelope(alpha, ctx.coil, 0.0, ctx.form))
    peak = float(envelope(alpha0, ctx.coil, 0.0, ctx.form))
    surrogate = np.sin(alpha * math.pi / (2.0 * alpha0)) ** 2
    progress("Envelope evaluated.", 1.0)
    return FigureData(
        name="fig3",
        header=("alpha_per_m", "envelope_h_m", "envelope_normalized", "sin2_surrogate"),
        rows=[tuple(map(float, r)) for r in zip(alpha, env, env / peak, surrogate)],
        meta={"alpha0_per_m": alpha0},
    )


def _spectra_figure(ctx: _FigureContext, progress: Callable[[str, float], None]) -> FigureData:
    """−Im ΔL against frequency, one column per lift-off."""
    columns: list[np.ndarray] = []
    freqs: Optional[np.ndarray] = None
    n = len(SPECTRA_EXTRA_LIFTOFFS)
    for i, extra in enumerate(SPECTRA_EXTRA_LIFTOFFS):
        progress(f"Spectrum at extra lift-off {extra * 1e3:.3g} mm…", i / n)
        spectrum = simulate_spectrum(ctx.grid, ctx.coil, ctx.plate, extra, ctx.settings, ctx.form)
        freqs = spectrum.frequency_hz
        columns.append(spectrum.salience)
    liftoffs = [ctx.coil.l_base + extra for extra in SPECTRA_EXTRA_LIFTOFFS]
    header = ("frequency_hz",) + tuple(f"salience_h_at_{l:.4g}_m" for l in liftoffs)
    return FigureData(
        name="fig4",
        header=header,
        rows=[tuple(map(float, r)) for r in zip(freqs, *columns)],
        meta={"liftoffs_m": liftoffs},
    )


def _liftoff_sweep(
    ctx: _FigureContext,
    extras: Sequence[float],
    progress: Callable[[str, float], None],
) -> list[tuple[float, PeakEstimate]]:
    peaks = []
    for i, extra in enumerate(extras):
        progress(f"Peak at extra lift-off {extra * 1e3:.3g} mm…", i / len(extras))
        spectrum = simulate_spectrum(ctx.grid, ctx.coil, ctx.plate, extra, ctx.settings, ctx.form)
        peaks.append((extra, _interior_peak(spectrum, "lift-off sweep")))
    return peaks


def _ln_ratio_figure(ctx: _FigureContext, progress: Callable[[str, float], None]) -> FigureData:
    """Amplitude log-ratio against extra lift-off, with the fitted model curve."""
    peaks = _liftoff_sweep(ctx, SWEEP_EXTRA_LIFTOFFS, progress)
    s_ref = dict(peaks)[0.0].salience
    extras = np.array([e for e, _ in peaks])
    ratios = np.array([math.log(p.salience / s_ref) for _, p in peaks])

    fit_window = extras <= 3e-3 + 1e-12
    alpha0_fit, rel_rms = fit_ln_ratio_model(extras[fit_window], ratios[fit_window])
    model = np.asarray(ln_ratio_model(alpha0_fit, extras))
    logger.info("ln ratio fit: alpha0 = %.6g 1/m, relative rms %.3g", alpha0_fit, rel_rms)
    return FigureData(
        name="fig5",
        header=("extra_liftoff_m", "liftoff_m", "ln_ratio", "ln_ratio_model"),
        rows=[
            (float(e), float(e + ctx.coil.l_base), float(r), float(m))
            for e, r, m in zip(extras, ratios, model)
        ],
        meta={"alpha0_fit_per_m": alpha0_fit, "relative_rms": rel_rms, "fit_max_extra_m": 3e-3},
    )


def _peak_frequency_figure(ctx: _FigureContext, progress: Callable[[str, float], None]) -> FigureData:
    """As-measured and compensated peak frequencies against extra lift-off."""
    peaks = _liftoff_sweep(ctx, SWEEP_EXTRA_LIFTOFFS, progress)
    calib = reference_from_peak(dict(peaks)[0.0], ctx.coil, "simulated", ctx.plate, ctx.form)

    rows = []
    for extra, peak in peaks:
        inp = CompensationInput.from_peak(peak)
        thin = compensate(inp, calib, ctx.plate.sigma, "thin")
        full = compensate(inp, calib, ctx.plate.sigma, "full")
        rows.append((
            float(extra),
            float(extra + ctx.coil.l_base),
            peak.omega_peak,
            thin.omega_comp,
            full.omega_comp,
        ))
    figure = FigureData(
        name="fig6",
        header=(
            "extra_liftoff_m",
            "liftoff_m",
            "omega_meas_rad_s",
            "omega_comp_thin_rad_s",
            "omega_comp_full_rad_s",
        ),
        rows=rows,
    )
    figure.meta = immunity_statistics(figure)
    return figure


def relative_spread(values: Sequence[float]) -> float:
    """(max − min) / mean."""
    arr = np.asarray(values, dtype=float)
    return float((arr.max() - arr.min()) / arr.mean())


def immunity_statistics(
    figure: FigureData,
    extras: Sequence[float] = IMMUNITY_EXTRA_LIFTOFFS,
) -> dict[str, float]:
    """Spread of compensated versus as-measured peak frequency over ``extras``."""
    all_extras = figure.column("extra_liftoff_m")
    pick = np.array([np.any(np.isclose(e, extras, rtol=0, atol=1e-12)) for e in all_extras])
    measured = relative_spread(figure.column("omega_meas_rad_s")[pick])
    compensated = relative_spread(figure.column("omega_comp_thin_rad_s")[pick])
    return {
        "spread_uncompensated": measured,
        "spread_compensated": compensated,
        "spread_ratio": compensated / measured,
    }


_FIGURES: dict[str, Callable[[_FigureContext, Callable[[str, float], None]], FigureData]] = {
    "3": _envelope_figure,
    "4": _spectra_figure,
    "5": _ln_ratio_figure,
    "6": _peak_frequency_figure,
}
FIGURE_IDS: tuple[str, ...] = tuple(_FIGURES)


def figure_data(
    which: str,
    coil: CoilPair = TABLE1_COIL,
    plate: Plate = PLATE_22UM,
    grid: FrequencyGrid = FrequencyGrid(),
    settings: QuadratureSettings = QuadratureSettings(),
    form: str = config.GEOMETRY_FORM,
    progress_callback: Progress = None,
) -> FigureData:
    """
    Plot-ready data for one figure.

    Parameters
    ----------
    which : str
        ``"3"`` envelope vs sin² surrogate, ``"4"`` spectra at four
        lift-offs, ``"5"`` amplitude log-ratio vs lift-off, ``"6"``
        as-measured and compensated peak frequency vs lift-off.
    """
    key = str(which)
    if key not in _FIGURES:
        raise ConfigError(f"Unknown figure '{which}'. Choose from: {', '.join(FIGURE_IDS)}")
    progress = _reporter(progress_callback)
    progress(f"Building figure {key} data…", 0.0)
    figure = _FIGURES[key](_FigureContext(coil, plate, grid, settings, form), _band(progress, 0.0, 1.0))
    progress(f"Figure {key} data ready.", 1.0)
    return figure
