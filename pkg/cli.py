"""
cli.py — Command-line entry point.

    python cli.py simulate  --coil C --plate P [--liftoff-extra M] --out spectrum.csv
    python cli.py calibrate --coil C (--plate P | --sweep S --air A [--plate P]) --out calib.json
    python cli.py invert    (--spectrum F | --sweep S --air A) --calib calib.json --sigma S_PER_M
    python cli.py table2    --out table2.csv
    python cli.py figures   --which 3|4|5|6 --out DIR

Exit codes: 0 success, 2 input/config error, 3 numerical failure,
4 file-format error.  Logs go to stderr; ``invert`` prints its JSON
report on stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import config
from src.errors import ConfigError, EddyPeakError
from src.forward_model import GEOMETRY_FORMS, CoilPair, Plate
from src.manifest import RunManifest, manifest_path_for
from src.measurement_io import (
    SweepPair,
    impedance_to_delta_l,
    load_config,
    parse_spectrum_csv,
    parse_sweep_csv,
    read_calibration,
    write_calibration,
    write_spectrum_csv,
    write_table_csv,
)
from src.compensation import MODES
from src.pipeline import (
    FIGURE_IDS,
    TABLE2_HEADER,
    calibrate_measured,
    calibrate_simulated,
    figure_data,
    invert,
    table2_rows,
)
from src.spectral_peak import FrequencyGrid, simulate_spectrum

logger = logging.getLogger(__name__)


# ── Input helpers ────────────────────────────────────────────────────

def _load_coil(path: Path) -> CoilPair:
    with path.open(encoding="utf-8") as f:
        coil = load_config(f).coil
    if coil is None:
        raise ConfigError(f"--coil {path}: file has no coil keys")
    return coil


def _load_plate(path: Path) -> Plate:
    with path.open(encoding="utf-8") as f:
        plate = load_config(f).plate
    if plate is None:
        raise ConfigError(f"--plate {path}: file has no plate keys")
    return plate


def _load_sweep_pair(sweep: Path, air: Path) -> SweepPair:
    with sweep.open(encoding="utf-8", newline="") as f:
        sample = parse_sweep_csv(f)
    with air.open(encoding="utf-8", newline="") as f:
        reference = parse_sweep_csv(f)
    return SweepPair(sample_sweep=sample, air_sweep=reference)


def _grid(args: argparse.Namespace) -> FrequencyGrid:
    return FrequencyGrid(f_min=args.fmin, f_max=args.fmax, points_per_decade=args.ppd)


def _grid_params(args: argparse.Namespace) -> dict[str, object]:
    return {"fmin_hz": args.fmin, "fmax_hz": args.fmax, "ppd": args.ppd, "form": args.form}


def _require_sweeps(args: argparse.Namespace) -> None:
    if (args.sweep is None) != (args.air is None):
        raise ConfigError("--sweep and --air must be given together")


# ── Commands ─────────────────────────────────────────────────────────

def cmd_simulate(args: argparse.Namespace) -> int:
    if args.liftoff_extra < 0:
        raise ConfigError(f"--liftoff-extra must be non-negative, got {args.liftoff_extra}")
    coil, plate = _load_coil(args.coil), _load_plate(args.plate)
    spectrum = simulate_spectrum(_grid(args), coil, plate, args.liftoff_extra, form=args.form)

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", encoding="utf-8", newline="") as f:
        write_spectrum_csv(spectrum, f)
    RunManifest.build(
        "simulate",
        {"coil": coil, "plate": plate, "liftoff_extra_m": args.liftoff_extra, **_grid_params(args)},
        [args.coil, args.plate],
    ).write(manifest_path_for(args.out))
    logger.info("Spectrum written to %s (%d rows)", args.out, len(spectrum))
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    _require_sweeps(args)
    coil = _load_coil(args.coil)
    plate = _load_plate(args.plate) if args.plate else None
    inputs = [args.coil] + ([args.plate] if args.plate else [])

    if args.sweep is not None:
        calib = calibrate_measured(_load_sweep_pair(args.sweep, args.air), coil, plate, args.form)
        inputs += [args.sweep, args.air]
    elif plate is not None:
        calib = calibrate_simulated(coil, plate, _grid(args), form=args.form)
    else:
        raise ConfigError("calibrate needs --plate, or --sweep and --air")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", encoding="utf-8") as f:
        write_calibration(calib, f)
    RunManifest.build(
        "calibrate", {"source": calib.source, **_grid_params(args)}, inputs
    ).write(manifest_path_for(args.out))
    logger.info(
        "Calibration written to %s: omega_ref %.6g rad/s, s_ref %.6g H, alpha0_ref %.6g 1/m",
        args.out, calib.omega_ref, calib.s_ref, calib.alpha0_ref,
    )
    return 0


def cmd_invert(args: argparse.Namespace) -> int:
    _require_sweeps(args)
    if (args.spectrum is None) == (args.sweep is None):
        raise ConfigError("invert needs exactly one of --spectrum or --sweep/--air")
    if not args.sigma > 0:
        raise ConfigError(f"--sigma must be positive, got {args.sigma}")

    with args.calib.open(encoding="utf-8") as f:
        calib = read_calibration(f)
    if args.spectrum is not None:
        with args.spectrum.open(encoding="utf-8", newline="") as f:
            spectrum = parse_spectrum_csv(f)
        inputs = [args.spectrum, args.calib]
    else:
        spectrum = impedance_to_delta_l(_load_sweep_pair(args.sweep, args.air))
        inputs = [args.sweep, args.air, args.calib]

    result = invert(spectrum, calib, args.sigma, args.mode)
    report = result.as_report()
    report["manifest"] = RunManifest.build(
        "invert", {"sigma_s_per_m": args.sigma, "mode": args.mode}, inputs
    ).to_dict()
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_table2(args: argparse.Namespace) -> int:
    rows = table2_rows(mode=args.mode, grid=_grid(args), form=args.form)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", encoding="utf-8", newline="") as f:
        write_table_csv(f, TABLE2_HEADER, [row.as_row() for row in rows])
    RunManifest.build(
        "table2", {"mode": args.mode, **_grid_params(args)}
    ).write(manifest_path_for(args.out))
    for row in rows:
        logger.info(
            "lift-off %.2f mm, %.0f um: uncompensated %.2f um, compensated %.2f um (%+.2f%%)",
            row.case.liftoff * 1e3, row.case.thickness * 1e6,
            row.result.thickness_uncomp * 1e6, row.result.thickness * 1e6,
            row.relative_error * 100,
        )
    return 0


def cmd_figures(args: argparse.Namespace) -> int:
    figure = figure_data(args.which, grid=_grid(args), form=args.form)
    args.out.mkdir(parents=True, exist_ok=True)
    target = args.out / f"{figure.name}.csv"
    with target.open("w", encoding="utf-8", newline="") as f:
        write_table_csv(f, figure.header, figure.rows)
    RunManifest.build(
        "figures", {"which": args.which, "figure": figure.meta, **_grid_params(args)}
    ).write(manifest_path_for(target))
    logger.info("Figure data written to %s", target)
    return 0


# ── Parser ───────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--fmin", type=float, default=config.F_MIN_HZ, help="sweep start, Hz")
    grid.add_argument("--fmax", type=float, default=config.F_MAX_HZ, help="sweep end, Hz")
    grid.add_argument("--ppd", type=int, default=config.POINTS_PER_DECADE, help="points per decade")
    grid.add_argument("--form", choices=GEOMETRY_FORMS, default=config.GEOMETRY_FORM,
                      help="geometry factor variant")

    parser = argparse.ArgumentParser(
        prog=config.TOOL_NAME,
        description="Eddy-current peak-frequency thickness gauging with lift-off compensation",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {config.TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[grid], help="simulate a ΔL spectrum")
    p.add_argument("--coil", type=Path, required=True)
    p.add_argument("--plate", type=Path, required=True)
    p.add_argument("--liftoff-extra", type=float, default=0.0, metavar="METERS")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", parents=[grid], help="capture the baseline reference")
    p.add_argument("--coil", type=Path, required=True)
    p.add_argument("--plate", type=Path)
    p.add_argument("--sweep", type=Path)
    p.add_argument("--air", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("invert", help="compensate lift-off and estimate thickness")
    p.add_argument("--spectrum", type=Path)
    p.add_argument("--sweep", type=Path)
    p.add_argument("--air", type=Path)
    p.add_argument("--calib", type=Path, required=True)
    p.add_argument("--sigma", type=float, required=True, metavar="S_PER_M")
    p.add_argument("--mode", choices=MODES, default=config.DEFAULT_MODE)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("table2", parents=[grid], help="thickness table for the built-in cases")
    p.add_argument("--mode", choices=MODES, default=config.DEFAULT_MODE)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_table2)

    p = sub.add_parser("figures", parents=[grid], help="plot data as CSV")
    p.add_argument("--which", required=True, metavar="|".join(FIGURE_IDS))
    p.add_argument("--out", type=Path, required=True, metavar="DIR")
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=config.LOG_LEVEL, format=config.LOG_FORMAT, stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EddyPeakError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("%s", exc)
        return ConfigError.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
