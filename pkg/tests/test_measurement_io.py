"""Tests for sweep/spectrum CSV handling, config and calibration files."""

import io
import json
import math
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from presets.tables import TABLE1_COIL
from src.compensation import CalibrationReference
from src.errors import AlignmentError, ConfigError, FileFormatError
from src.forward_model import first_order_response
from src.measurement_io import (
    ImpedanceSweep,
    SweepPair,
    impedance_to_delta_l,
    load_config,
    parse_spectrum_csv,
    parse_sweep_csv,
    read_calibration,
    spectrum_to_sweep_pair,
    write_calibration,
    write_spectrum_csv,
    write_sweep_csv,
)
from src.spectral_peak import Spectrum
CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

HEADER = "frequency_hz,re_z_ohm,im_z_ohm\n"


def _sweep(freqs, z=None):
    freqs = np.asarray(freqs, float)
    return ImpedanceSweep(frequency_hz=freqs, z=np.ones(freqs.size) if z is None else z)


class TestParseSweep:

    def test_two_rows_with_comments(self):
        text = "# SL1260 export\n# operator: bench\n" + HEADER + "100,1.5,-2\n200,1.25,3e-1\n"
        sweep = parse_sweep_csv(io.StringIO(text))
        assert len(sweep) == 2
        assert sweep.samples == [(100.0, 1.5 - 2j), (200.0, 1.25 + 0.3j)]

    def test_crlf_line_endings(self):
        text = HEADER.replace("\n", "\r\n") + "100,1,2\r\n200,3,4\r\n"
        assert len(parse_sweep_csv(io.StringIO(text, newline=""))) == 2

    def test_decreasing_frequency_names_line(self):
        text = HEADER + "100,1,1\n300,1,1\n200,1,1\n"
        with pytest.raises(FileFormatError, match="line 4") as info:
            parse_sweep_csv(io.StringIO(text))
        assert info.value.line == 4
        assert info.value.exit_code == 4

    def test_duplicate_frequency(self):
        with pytest.raises(FileFormatError, match="duplicate"):
            parse_sweep_csv(io.StringIO(HEADER + "100,1,1\n100,2,2\n"))

    @pytest.mark.parametrize("row", ["100,nan,1", "100,1,inf", "100,abc,1", "100,1"])
    def test_bad_rows(self, row):
        with pytest.raises(FileFormatError, match="line 2"):
            parse_sweep_csv(io.StringIO(HEADER + row + "\n"))

    def test_wrong_header(self):
        with pytest.raises(FileFormatError, match="expected header"):
            parse_sweep_csv(io.StringIO("freq,re,im\n100,1,1\n"))

    def test_missing_data(self):
        with pytest.raises(FileFormatError):
            parse_sweep_csv(io.StringIO("# nothing here\n"))
        with pytest.raises(FileFormatError):
            parse_sweep_csv(io.StringIO(HEADER))

    def test_write_parse_lossless(self):
        rng = np.random.default_rng(7)
        freqs = np.sort(rng.uniform(1e2, 1e7, 40))
        z = rng.normal(size=40) * 1e-3 + 1j * rng.normal(size=40) * 1e2
        buf = io.StringIO()
        write_sweep_csv(ImpedanceSweep(frequency_hz=freqs, z=z), buf)
        parsed = parse_sweep_csv(io.StringIO(buf.getvalue()))
        assert_allclose(parsed.frequency_hz, freqs, rtol=1e-15, atol=0)
        assert_allclose(parsed.z, z, rtol=1e-15, atol=0)


class TestSpectrumCsv:

    def _spectrum(self):
        omega = np.geomspace(2e3, 2e6, 40)
        return Spectrum(omega=omega, delta_l=1e-6 * first_order_response(omega, 2.4e5) - 3e-6)

    def test_round_trip(self):
        spectrum = self._spectrum()
        buf = io.StringIO()
        write_spectrum_csv(spectrum, buf)
        parsed = parse_spectrum_csv(io.StringIO(buf.getvalue()))
        assert_allclose(parsed.omega, spectrum.omega, rtol=1e-15, atol=0)
        assert_allclose(parsed.delta_l, spectrum.delta_l, rtol=1e-15, atol=0)

    def test_deterministic_with_fixed_header(self):
        a, b = io.StringIO(), io.StringIO()
        write_spectrum_csv(self._spectrum(), a)
        write_spectrum_csv(self._spectrum(), b)
        assert a.getvalue() == b.getvalue()
        assert a.getvalue().splitlines()[0] == "frequency_hz,re_dl_h,im_dl_h"
        assert len(a.getvalue().splitlines()) == 41

    def test_too_few_rows(self):
        text = "frequency_hz,re_dl_h,im_dl_h\n1,0,-1\n2,0,-2\n"
        with pytest.raises(FileFormatError, match="at least 8"):
            parse_spectrum_csv(io.StringIO(text))


class TestImpedanceToDeltaL:

    FREQS = np.arange(1, 9) / (2 * math.pi)

    def test_identical_sweeps_give_zero(self):
        z = np.linspace(1, 2, 8) + 5j
        spectrum = impedance_to_delta_l(SweepPair(_sweep(self.FREQS, z), _sweep(self.FREQS, z)))
        assert np.all(spectrum.delta_l == 0)

    def test_pure_reactance_is_real_inductance(self):
        l0 = 3.3e-6
        omega = 2 * math.pi * self.FREQS
        z_air = 0.2 + 1j * omega * 1e-5
        pair = SweepPair(_sweep(self.FREQS, z_air + 1j * omega * l0), _sweep(self.FREQS, z_air))
        dl = impedance_to_delta_l(pair).delta_l
        assert_allclose(dl.real, l0, rtol=1e-9)
        assert np.all(np.abs(dl.imag) < 1e-15 * l0 * 1e3)

    def test_unit_example_and_dual_form(self):
        dz = np.full(8, 1 + 1j)
        pair = SweepPair(_sweep(self.FREQS, dz), _sweep(self.FREQS, np.zeros(8)))
        spectrum = impedance_to_delta_l(pair)
        assert spectrum.delta_l[0] == pytest.approx(1 - 1j, rel=1e-15)
        omega = 2 * math.pi * self.FREQS
        assert_allclose(spectrum.delta_l.imag, np.real(-dz) / omega, rtol=1e-15)

    def test_misaligned_grids_symmetric(self):
        other = self.FREQS.copy()
        other[3] *= 1.001
        with pytest.raises(AlignmentError) as forward:
            SweepPair(_sweep(self.FREQS), _sweep(other))
        with pytest.raises(AlignmentError) as backward:
            SweepPair(_sweep(other), _sweep(self.FREQS))
        assert forward.value.index == backward.value.index == 3
        assert str(forward.value) == str(backward.value)
        assert forward.value.exit_code == 2

    def test_length_mismatch(self):
        with pytest.raises(AlignmentError) as info:
            SweepPair(_sweep(self.FREQS), _sweep(self.FREQS[:6]))
        assert info.value.index == 6

    def test_tiny_grid_jitter_tolerated(self):
        SweepPair(_sweep(self.FREQS), _sweep(self.FREQS * (1 + 1e-12)))

    def test_synthesised_sweeps_round_trip(self):
        omega = np.geomspace(2e3, 2e6, 30)
        spectrum = Spectrum(omega=omega, delta_l=1e-6 * first_order_response(omega, 2.4e5) - 2e-6)
        recovered = impedance_to_delta_l(spectrum_to_sweep_pair(spectrum))
        assert_allclose(recovered.omega, spectrum.omega, rtol=1e-14)
        assert_allclose(recovered.delta_l, spectrum.delta_l, rtol=1e-8, atol=1e-18)


class TestLoadConfig:

    def test_table1_coil_file(self):
        with open(CONFIG_DIR / "table1_coil.json", encoding="utf-8") as f:
            loaded = load_config(f)
        assert loaded.plate is None
        assert loaded.coil == TABLE1_COIL

    def test_plate_file_defaults_mu_r(self):
        with open(CONFIG_DIR / "aluminium_22um.json", encoding="utf-8") as f:
            plate = load_config(f).plate
        assert plate.sigma == 38.2e6
        assert plate.c == 22e-6
        assert plate.mu_r == 1.0

    def test_combined_file(self):
        data = {"r1_m": 0.01, "r2_m": 0.02, "h_m": 0.003, "g_m": 0.0, "l_base_m": 0.0,
                "n_turns": 5, "sigma_s_per_m": 1e6, "c_m": 1e-4, "mu_r": 1.0}
        loaded = load_config(io.StringIO(json.dumps(data)))
        assert loaded.coil.n_turns == 5
        assert loaded.plate.c == 1e-4

    @pytest.mark.parametrize("data, key", [
        ({"r1_m": 0.0118, "h_m": 0.003, "g_m": 0.001, "l_base_m": 0.0005, "n_turns": 20}, "r2_m"),
        ({"r1_m": 0.012, "r2_m": 0.0118, "h_m": 0.003, "g_m": 0.001, "l_base_m": 0.0005,
          "n_turns": 20}, "r2_m"),
        ({"sigma_s_per_m": -1.0, "c_m": 2.2e-5}, "sigma_s_per_m"),
        ({"sigma_s_per_m": 38.2e6, "c_m": 2.2e-5, "thickness_um": 22}, "thickness_um"),
    ])
    def test_errors_name_the_key(self, data, key):
        with pytest.raises(ConfigError, match=key):
            load_config(io.StringIO(json.dumps(data)))

    def test_invalid_json(self):
        with pytest.raises(ConfigError):
            load_config(io.StringIO("{not json"))


class TestCalibrationFile:

    def _calibration(self):
        return CalibrationReference(
            alpha0_ref=127.71, s_ref=1.7815e-6, omega_ref=2.4185e5, coil=TABLE1_COIL,
            alpha0_envelope=117.98, sigma_ref=38.2e6, c_ref=22e-6,
        )

    def test_round_trip(self):
        buf = io.StringIO()
        write_calibration(self._calibration(), buf)
        assert read_calibration(io.StringIO(buf.getvalue())) == self._calibration()

    def test_json_keys(self):
        buf = io.StringIO()
        write_calibration(self._calibration(), buf)
        data = json.loads(buf.getvalue())
        for key in ("alpha0_ref_per_m", "s_ref_h", "omega_ref_rad_s", "coil", "source"):
            assert key in data
        assert data["coil"]["r1_m"] == 0.0118

    def test_minimal_file(self):
        data = {"alpha0_ref_per_m": 120.0, "s_ref_h": 1e-6, "omega_ref_rad_s": 2e5,
                "coil": {"r1_m": 0.0118, "r2_m": 0.012, "h_m": 0.003, "g_m": 0.001,
                         "l_base_m": 0.0005, "n_turns": 20},
                "source": "measured"}
        calib = read_calibration(io.StringIO(json.dumps(data)))
        assert calib.source == "measured"
        assert calib.alpha0_method == "peak"
        assert calib.c_ref is None

    def test_unknown_key_rejected(self):
        buf = io.StringIO()
        write_calibration(self._calibration(), buf)
        data = json.loads(buf.getvalue())
        data["alpha0"] = 1.0
        with pytest.raises(ConfigError, match="alpha0"):
            read_calibration(io.StringIO(json.dumps(data)))
