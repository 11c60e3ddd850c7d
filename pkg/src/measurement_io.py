"""
measurement_io.py — Sweep/spectrum CSV files, config JSON and calibration JSON.

Impedance-analyzer exports are plain CSV (``#`` comment lines, then a
fixed header, then one row per frequency).  A sample sweep and an air
sweep on the same grid give the inductance change

    ΔL(f) = (Z(f) − Z_air(f)) / (j 2π f)

All numbers in files are SI, with the unit in the column or key name.
Floats are written with 17 significant digits so that write → parse is
lossless.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from typing import Any, Iterable, Literal, Optional, Sequence, TextIO

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

import config
from src.compensation import CalibrationReference
from src.errors import AlignmentError, ConfigError, FileFormatError, NumericalError
from src.forward_model import CoilPair, Plate
from src.spectral_peak import TWO_PI, Spectrum

logger = logging.getLogger(__name__)


# ─────────────────────────────────────────────
# Domain types
# ─────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class ImpedanceSweep:
    """Ordered (frequency, complex impedance) samples from one sweep."""
    frequency_hz: np.ndarray
    z: np.ndarray                  # ohms

    def __post_init__(self) -> None:
        f = np.array(self.frequency_hz, dtype=float)
        z = np.array(self.z, dtype=complex)
        if f.ndim != 1 or f.shape != z.shape or f.size == 0:
            raise ConfigError("sweep needs matching non-empty 1-D frequency and impedance arrays")
        if not np.all(np.isfinite(f)) or not np.all(np.isfinite(z)):
            raise ConfigError("sweep values must be finite")
        if not np.all(f > 0):
            raise ConfigError("sweep frequencies must be positive")
        if not np.all(np.diff(f) > 0):
            raise ConfigError("sweep frequencies must be strictly increasing")
        f.flags.writeable = False
        z.flags.writeable = False
        object.__setattr__(self, "frequency_hz", f)
        object.__setattr__(self, "z", z)

    def __len__(self) -> int:
        return int(self.frequency_hz.size)

    @property
    def samples(self) -> list[tuple[float, complex]]:
        return [(float(f), complex(z)) for f, z in zip(self.frequency_hz, self.z)]


def _first_misaligned(a: np.ndarray, b: np.ndarray, rel_tol: float) -> Optional[int]:
    n = min(a.size, b.size)
    scale = np.maximum(np.abs(a[:n]), np.abs(b[:n]))
    bad = np.nonzero(np.abs(a[:n] - b[:n]) > rel_tol * scale)[0]
    if bad.size:
        return int(bad[0])
    return None if a.size == b.size else n


@dataclass(frozen=True)
class SweepPair:
    """A sample sweep and the matching air sweep, on one frequency grid."""
    sample_sweep: ImpedanceSweep
    air_sweep: ImpedanceSweep

    def __post_init__(self) -> None:
        fs, fa = self.sample_sweep.frequency_hz, self.air_sweep.frequency_hz
        idx = _first_misaligned(fs, fa, config.GRID_MATCH_REL_TOL)
        if idx is None:
            return
        if idx >= min(fs.size, fa.size):
            sizes = sorted((fs.size, fa.size))
            raise AlignmentError(
                f"sample and air sweeps differ in length ({sizes[0]} vs {sizes[1]} samples); "
                f"first unmatched index {idx}",
                index=idx,
            )
        lo, hi = sorted((float(fs[idx]), float(fa[idx])))
        raise AlignmentError(
            f"sample and air sweeps are on different grids at index {idx} "
            f"({lo:.17g} Hz vs {hi:.17g} Hz)",
            index=idx,
        )


# ─────────────────────────────────────────────
# CSV tables
# ─────────────────────────────────────────────

def _fmt(value: float) -> str:
    return config.CSV_FLOAT_FORMAT.format(float(value))


def _read_table(stream: TextIO, header: tuple[str, ...]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Parse ``#`` comments, the expected header, then three-column float rows.

    Frequencies in column 0 must be positive and strictly increasing.
    """
    rows: list[tuple[float, float, float]] = []
    header_seen = False
    previous_f: Optional[float] = None

    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        if not header_seen and line.lstrip().startswith("#"):
            continue
        fields = [field.strip() for field in next(csv.reader([line]))]

        if not header_seen:
            if tuple(fields) != header:
                raise FileFormatError(
                    f"expected header '{','.join(header)}', got '{line.strip()}'", line=lineno
                )
            header_seen = True
            continue

        if len(fields) != len(header):
            raise FileFormatError(
                f"expected {len(header)} fields, got {len(fields)}", line=lineno
            )
        try:
            values = tuple(float(field) for field in fields)
        except ValueError:
            raise FileFormatError(f"non-numeric value in row '{line.strip()}'", line=lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise FileFormatError(f"non-finite value in row '{line.strip()}'", line=lineno)

        f = values[0]
        if not f > 0:
            raise FileFormatError(f"frequency must be positive, got {f!r}", line=lineno)
        if previous_f is not None:
            if f == previous_f:
                raise FileFormatError(f"duplicate frequency {f!r} Hz", line=lineno)
            if f < previous_f:
                raise FileFormatError(
                    f"frequency {f!r} Hz is below the previous row's {previous_f!r} Hz",
                    line=lineno,
                )
        previous_f = f
        rows.append(values)

    if not header_seen:
        raise FileFormatError(f"missing header '{','.join(header)}'")
    if not rows:
        raise FileFormatError("no data rows after the header")

    table = np.array(rows, dtype=float)
    return table[:, 0], table[:, 1], table[:, 2]


def write_table_csv(stream: TextIO, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    """Header plus 17-significant-digit float rows, LF line endings."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def parse_sweep_csv(stream: TextIO) -> ImpedanceSweep:
    """Read an impedance sweep export (``frequency_hz,re_z_ohm,im_z_ohm``)."""
    f, re_z, im_z = _read_table(stream, config.SWEEP_HEADER)
    return ImpedanceSweep(frequency_hz=f, z=re_z + 1j * im_z)


def write_sweep_csv(sweep: ImpedanceSweep, stream: TextIO) -> None:
    write_table_csv(stream, config.SWEEP_HEADER, zip(sweep.frequency_hz, sweep.z.real, sweep.z.imag))


def parse_spectrum_csv(stream: TextIO) -> Spectrum:
    """Read a ΔL spectrum (``frequency_hz,re_dl_h,im_dl_h``)."""
    f, re_dl, im_dl = _read_table(stream, config.SPECTRUM_HEADER)
    if f.size < config.MIN_SPECTRUM_SAMPLES:
        raise FileFormatError(
            f"spectrum needs at least {config.MIN_SPECTRUM_SAMPLES} rows, got {f.size}"
        )
    return Spectrum(omega=TWO_PI * f, delta_l=re_dl + 1j * im_dl)


def write_spectrum_csv(spectrum: Spectrum, stream: TextIO) -> None:
    dl = spectrum.delta_l
    write_table_csv(stream, config.SPECTRUM_HEADER, zip(spectrum.frequency_hz, dl.real, dl.imag))


# ─────────────────────────────────────────────
# Impedance → inductance change
# ─────────────────────────────────────────────

def impedance_to_delta_l(pair: SweepPair) -> Spectrum:
    """
    ΔL = (Z − Z_air)/(j 2π f) per sample, real and imaginary parts kept.

    Raises
    ------
    NumericalError
        If Im ΔL and Re(−(Z − Z_air))/(2πf) disagree beyond 1e-15 relative.
    """
    f = pair.sample_sweep.frequency_hz
    omega = TWO_PI * f
    dz = pair.sample_sweep.z - pair.air_sweep.z
    # 1/(j w) = -j/w, written out so both parts are single divisions.
    dl = (dz.imag / omega) + 1j * (-dz.real / omega)

    check = np.real(-dz) / omega
    if not np.allclose(dl.imag, check, rtol=1e-15, atol=0.0):
        raise NumericalError("imaginary inductance disagrees with the mutual-resistance form")
    return Spectrum(omega=omega, delta_l=dl)


def spectrum_to_sweep_pair(
    spectrum: Spectrum,
    air_mutual_inductance: float = config.AIR_MUTUAL_INDUCTANCE_H,
) -> SweepPair:
    """Synthesize analyzer sweeps: Z_air = jωM_air, Z = Z_air + jωΔL."""
    if not air_mutual_inductance > 0:
        raise ConfigError(
            f"air_mutual_inductance must be positive, got {air_mutual_inductance}"
        )
    jw = 1j * spectrum.omega
    z_air = jw * air_mutual_inductance
    f = spectrum.frequency_hz
    return SweepPair(
        sample_sweep=ImpedanceSweep(frequency_hz=f, z=z_air + jw * spectrum.delta_l),
        air_sweep=ImpedanceSweep(frequency_hz=f, z=z_air),
    )


# ─────────────────────────────────────────────
# JSON file schemas
# ─────────────────────────────────────────────

class CoilFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    r1_m: float = Field(gt=0)
    r2_m: float = Field(gt=0)
    h_m: float = Field(gt=0)
    g_m: float = Field(ge=0)
    l_base_m: float = Field(ge=0)
    n_turns: int = Field(ge=1)

    @model_validator(mode="after")
    def _radii_ordered(self) -> "CoilFile":
        if not self.r2_m > self.r1_m:
            raise ValueError("r2_m must exceed r1_m")
        return self

    def to_domain(self) -> CoilPair:
        return CoilPair(
            r1=self.r1_m, r2=self.r2_m, h=self.h_m, g=self.g_m,
            l_base=self.l_base_m, n_turns=self.n_turns,
        )

    @classmethod
    def from_domain(cls, coil: CoilPair) -> "CoilFile":
        return cls(
            r1_m=coil.r1, r2_m=coil.r2, h_m=coil.h, g_m=coil.g,
            l_base_m=coil.l_base, n_turns=coil.n_turns,
        )


class PlateFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sigma_s_per_m: float = Field(gt=0)
    c_m: float = Field(gt=0)
    mu_r: float = Field(default=1.0, gt=0)

    def to_domain(self) -> Plate:
        return Plate(sigma=self.sigma_s_per_m, c=self.c_m, mu_r=self.mu_r)

    @classmethod
    def from_domain(cls, plate: Plate) -> "PlateFile":
        return cls(sigma_s_per_m=plate.sigma, c_m=plate.c, mu_r=plate.mu_r)


class CalibrationFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha0_ref_per_m: float = Field(gt=0)
    s_ref_h: float = Field(gt=0)
    omega_ref_rad_s: float = Field(gt=0)
    coil: CoilFile
    source: Literal["simulated", "measured"]
    alpha0_envelope_per_m: Optional[float] = None
    alpha0_method: Literal["peak", "envelope"] = "peak"
    form: Literal["paper", "product"] = config.GEOMETRY_FORM
    sigma_ref_s_per_m: Optional[float] = None
    c_ref_m: Optional[float] = None


def _validation_message(kind: str, exc: ValidationError) -> str:
    err = exc.errors()[0]
    key = ".".join(str(part) for part in err["loc"]) or "(object)"
    return f"{kind}: key '{key}': {err['msg']}"


def _load_json_object(stream: TextIO, kind: str) -> dict[str, Any]:
    try:
        data = json.load(stream)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{kind}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{kind}: top level must be a JSON object")
    return data


@dataclass(frozen=True)
class LoadedConfig:
    coil: Optional[CoilPair] = None
    plate: Optional[Plate] = None


def load_config(stream: TextIO) -> LoadedConfig:
    """
    Read a coil file, a plate file, or one file holding both key sets.

    Raises
    ------
    ConfigError
        Unknown or missing key, non-positive value, or r1_m >= r2_m;
        the message names the key.
    """
    data = _load_json_object(stream, "config")
    coil_keys = set(CoilFile.model_fields)
    plate_keys = set(PlateFile.model_fields)
    unknown = sorted(set(data) - coil_keys - plate_keys)
    if unknown:
        raise ConfigError(f"config: unknown key '{unknown[0]}'")

    coil_part = {k: v for k, v in data.items() if k in coil_keys}
    plate_part = {k: v for k, v in data.items() if k in plate_keys}
    if not coil_part and not plate_part:
        raise ConfigError("config: no coil or plate keys found")

    try:
        coil = CoilFile(**coil_part).to_domain() if coil_part else None
        plate = PlateFile(**plate_part).to_domain() if plate_part else None
    except ValidationError as exc:
        raise ConfigError(_validation_message("config", exc)) from None
    return LoadedConfig(coil=coil, plate=plate)


def read_calibration(stream: TextIO) -> CalibrationReference:
    data = _load_json_object(stream, "calibration")
    try:
        model = CalibrationFile(**data)
    except ValidationError as exc:
        raise ConfigError(_validation_message("calibration", exc)) from None
    return CalibrationReference(
        alpha0_ref=model.alpha0_ref_per_m,
        s_ref=model.s_ref_h,
        omega_ref=model.omega_ref_rad_s,
        coil=model.coil.to_domain(),
        source=model.source,
        alpha0_envelope=model.alpha0_envelope_per_m,
        alpha0_method=model.alpha0_method,
        form=model.form,
        sigma_ref=model.sigma_ref_s_per_m,
        c_ref=model.c_ref_m,
    )


def calibration_to_dict(calib: CalibrationReference) -> dict[str, Any]:
    return CalibrationFile(
        alpha0_ref_per_m=calib.alpha0_ref,
        s_ref_h=calib.s_ref,
        omega_ref_rad_s=calib.omega_ref,
        coil=CoilFile.from_domain(calib.coil),
        source=calib.source,
        alpha0_envelope_per_m=calib.alpha0_envelope,
        alpha0_method=calib.alpha0_method,
        form=calib.form,
        sigma_ref_s_per_m=calib.sigma_ref,
        c_ref_m=calib.c_ref,
    ).model_dump()


def write_calibration(calib: CalibrationReference, stream: TextIO) -> None:
    json.dump(calibration_to_dict(calib), stream, indent=2)
    stream.write("\n")
