"""Tests for the analytical coil-pair / plate forward model."""

import math
from decimal import Decimal, localcontext

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, special

from presets.tables import TABLE2_CASES
from src.errors import ConfigError, DomainError, NumericalError
from src.forward_model import (
    MU0,
    CoilPair,
    Plate,
    alpha0_window,
    bessel_j,
    characteristic_alpha0,
    coil_window_p,
    delta_l,
    delta_l0,
    delta_l_factorized,
    envelope,
    first_order_response,
    geometry_factor_a,
    plate_phi,
    plate_phi_linearized,
    predicted_alpha0,
)
from src.quadrature import QuadratureSettings
from src.spectral_peak import FrequencyGrid, find_peak

PEAK_OMEGA_22UM = 2 * math.pi * 38.5e3
NARROW = FrequencyGrid(f_min=1e4, f_max=2e5, points_per_decade=30)


def _series_j(order, x):
    """Power series of J_n, summed in 60-digit decimals to survive cancellation at large x."""
    if x == 0.0:
        return 1.0 if order == 0 else 0.0
    with localcontext() as ctx:
        ctx.prec = 60
        half = Decimal(x) / 2
        term = half**order / math.factorial(order)
        total = term
        m = 0
        while m < 2 * x + 10 or abs(term) > Decimal("1e-45"):
            m += 1
            term = -term * half * half / (m * (m + order))
            total += term
        return float(total)


def _asymptotic_j(order, x, terms=12):
    """Hankel expansion of J_n for large x."""
    mu = 4 * order * order
    a = [1.0]
    for k in range(1, 2 * terms):
        a.append(a[-1] * (mu - (2 * k - 1) ** 2) / (k * 8))
    p = sum((-1) ** k * a[2 * k] / x ** (2 * k) for k in range(terms))
    q = sum((-1) ** k * a[2 * k + 1] / x ** (2 * k + 1) for k in range(terms - 1))
    chi = x - (order / 2 + 0.25) * math.pi
    return math.sqrt(2 / (math.pi * x)) * (p * math.cos(chi) - q * math.sin(chi))


class TestBessel:

    def test_known_values(self):
        assert bessel_j(0, 0.0) == 1.0
        assert bessel_j(1, 0.0) == 0.0
        assert abs(bessel_j(0, 2.404825557695773)) < 1e-12
        assert bessel_j(1, 1.0) == pytest.approx(0.4400505857449335, abs=1e-12)

    @pytest.mark.parametrize("order", [0, 1])
    def test_matches_power_series(self, order):
        x = np.linspace(0.0, 50.0, 1000)
        oracle = np.array([_series_j(order, float(v)) for v in x])
        assert_allclose(bessel_j(order, x), oracle, rtol=0, atol=1e-10)

    @pytest.mark.parametrize("order", [0, 1])
    def test_matches_asymptotic_form(self, order):
        x = np.linspace(25.0, 50.0, 101)
        oracle = np.array([_asymptotic_j(order, float(v)) for v in x])
        assert_allclose(bessel_j(order, x), oracle, rtol=0, atol=1e-10)

    def test_unsupported_order(self):
        with pytest.raises(ConfigError):
            bessel_j(2, 1.0)

    def test_non_finite_argument(self):
        with pytest.raises(DomainError):
            bessel_j(0, float("nan"))


class TestCoilWindow:

    @pytest.mark.parametrize("alpha", [1.0, 118.0, 2500.0, 40000.0])
    def test_matches_adaptive_reference(self, coil, alpha):
        ref, _ = integrate.quad(
            lambda x: x * special.j1(x), alpha * coil.r1, alpha * coil.r2, epsabs=0, epsrel=1e-13
        )
        assert coil_window_p(alpha, coil.r1, coil.r2) == pytest.approx(ref, rel=1e-10)

    def test_small_alpha_limit(self, coil):
        expected = (coil.r2**3 - coil.r1**3) / 6.0
        assert coil_window_p(1.0, coil.r1, coil.r2) == pytest.approx(expected, rel=1e-4)

    def test_vectorised_shape(self, coil):
        alpha = np.array([[10.0, 20.0], [30.0, 40.0]])
        assert np.shape(coil_window_p(alpha, coil.r1, coil.r2)) == (2, 2)

    def test_rejects_bad_radii(self):
        with pytest.raises(ConfigError):
            coil_window_p(10.0, 0.012, 0.0118)


class TestGeometryFactor:

    @pytest.mark.parametrize("form", ["paper", "product"])
    def test_liftoff_factorises(self, coil, form):
        alpha = np.geomspace(1.0, 5e3, 50)
        delta = 1.5e-3
        assert_allclose(
            geometry_factor_a(alpha, coil, delta, form),
            geometry_factor_a(alpha, coil, 0.0, form) * np.exp(-2 * alpha * delta),
            rtol=1e-12,
        )

    def test_small_alpha_behaviour(self, coil):
        alpha = 1e-3
        assert geometry_factor_a(alpha, coil, form="paper") == pytest.approx(2.0, rel=1e-4)
        assert geometry_factor_a(alpha, coil, form="product") == pytest.approx(
            (alpha * coil.h) ** 2, rel=1e-4
        )

    def test_unknown_form(self, coil):
        with pytest.raises(ConfigError, match="Unknown geometry form"):
            geometry_factor_a(10.0, coil, form="exact")

    def test_negative_liftoff(self, coil):
        with pytest.raises(ConfigError):
            geometry_factor_a(10.0, coil, -1e-3)


class TestPlatePhi:

    def test_zero_frequency(self, plate22):
        assert plate_phi(118.0, 0.0, plate22) == 0.0

    @pytest.mark.parametrize("omega", [2 * math.pi * 1e3, 2 * math.pi * 1e5, 2 * math.pi * 1e7])
    def test_conductor_sign(self, plate22, omega):
        phi = plate_phi(np.array([10.0, 118.0, 1000.0]), omega, plate22)
        assert np.all(phi.imag < 0)
        assert np.all(phi.real <= 0)

    def test_thick_plate_uses_asymptotic_form(self):
        phi = plate_phi(100.0, 1e9, Plate(sigma=38.2e6, c=0.01))
        assert np.isfinite(phi)
        assert abs(phi + 1.0) < 2e-3

    @pytest.mark.parametrize("f", [1e4, 3.85e4, 1e5])
    def test_linearised_form_close_for_thin_plate(self, plate22, f):
        omega = 2 * math.pi * f
        exact = plate_phi(118.0, omega, plate22)
        approx = plate_phi_linearized(118.0, omega, plate22)
        assert abs(approx - exact) / abs(exact) < 0.06

    def test_first_order_response_peaks_at_corner(self):
        omega_1 = 2.4e5
        assert first_order_response(omega_1, omega_1).imag == pytest.approx(-0.5)
        s = -np.imag(first_order_response(np.array([0.9, 1.0, 1.1]) * omega_1, omega_1))
        assert s[1] > s[0] and s[1] > s[2]


class TestCharacteristicAlpha0:

    def test_product_form_interior_peak(self, coil):
        alpha0 = characteristic_alpha0(coil)
        assert alpha0 == pytest.approx(118.0, rel=5e-3)
        grid = np.array([0.95, 1.0, 1.05]) * alpha0
        env = envelope(grid, coil)
        assert env[1] > env[0] and env[1] > env[2]

    def test_search_window_brackets_peak(self, coil):
        lo, hi = alpha0_window(coil)
        assert lo == pytest.approx(1e-2 / coil.r2)
        assert lo < characteristic_alpha0(coil) < hi

    def test_paper_form_has_no_interior_peak(self, coil):
        with pytest.raises(NumericalError, match="boundary"):
            characteristic_alpha0(coil, form="paper")

    @pytest.mark.parametrize("extra, ratio", [(0.5e-3, 1.483), (1.0e-3, 1.455), (1.5e-3, 1.427)])
    def test_shift_with_liftoff_against_sine_squared_prediction(self, coil, extra, ratio):
        # The product-form envelope drifts about 45% faster than the sin² model predicts.
        alpha0 = characteristic_alpha0(coil)
        shift = alpha0 - characteristic_alpha0(coil, extra)
        predicted_shift = alpha0 - predicted_alpha0(alpha0, extra)
        assert predicted_shift == pytest.approx(4 * alpha0**2 * extra / math.pi**2, rel=1e-12)
        assert shift > 0
        assert shift / predicted_shift == pytest.approx(ratio, abs=0.02)

    def test_sine_squared_surrogate(self, coil):
        alpha0 = characteristic_alpha0(coil)
        alpha = np.linspace(2 * alpha0 / 200, 2 * alpha0, 200)
        env = envelope(alpha, coil) / envelope(alpha0, coil)
        surrogate = np.sin(alpha * math.pi / (2 * alpha0)) ** 2
        assert np.sqrt(np.mean((env - surrogate) ** 2)) < 0.3


class TestDeltaL:

    def test_salience_positive_near_peak(self, coil, plate22):
        value = delta_l(PEAK_OMEGA_22UM, coil, plate22)
        assert np.isfinite(value)
        assert -value.imag > 0
        assert value.real < 0

    @pytest.mark.parametrize(
        "case", TABLE2_CASES, ids=lambda c: f"{c.liftoff * 1e3:g}mm-{c.thickness * 1e6:g}um"
    )
    def test_tolerance_convergence(self, coil, plate22, spectrum_at, case):
        omega = find_peak(spectrum_at(case.thickness, case.extra_liftoff, NARROW)).omega_peak
        plate = Plate(sigma=plate22.sigma, c=case.thickness)
        loose = delta_l(omega, coil, plate, case.extra_liftoff)
        tight = delta_l(omega, coil, plate, case.extra_liftoff, QuadratureSettings(rel_tol=1e-12))
        assert abs(loose - tight) / abs(tight) < 1e-8
        assert delta_l(omega, coil, plate, case.extra_liftoff) == loose

    def test_salience_decreases_with_liftoff(self, coil, plate22):
        s = [-delta_l(PEAK_OMEGA_22UM, coil, plate22, d).imag for d in (0.0, 1e-3, 2e-3)]
        assert s[0] > s[1] > s[2]

    def test_factorised_approximation(self, coil, plate22):
        full = delta_l(PEAK_OMEGA_22UM, coil, plate22)
        approx = delta_l_factorized(PEAK_OMEGA_22UM, coil, plate22)
        assert 0.85 < abs(approx) / abs(full) < 1.2

    def test_magnitude_log_ratio_follows_envelope_model(self, coil):
        alpha0 = characteristic_alpha0(coil)
        base = delta_l0(coil)
        for extra in (0.5e-3, 1e-3, 2e-3):
            measured = math.log(delta_l0(coil, extra) / base)
            model = -2 * (alpha0 - 2 * alpha0**2 * extra / math.pi**2) * extra
            assert abs(measured - model) / abs(measured) < 0.2

    def test_rejects_non_positive_omega(self, coil, plate22):
        with pytest.raises(ConfigError):
            delta_l(0.0, coil, plate22)


class TestDomainTypes:

    def test_coil_radii_order(self):
        with pytest.raises(ConfigError, match="r2"):
            CoilPair(r1=0.012, r2=0.012, h=0.003, g=0.001, l_base=0.0005, n_turns=20)

    def test_plate_requires_positive_thickness(self):
        with pytest.raises(ConfigError):
            Plate(sigma=38.2e6, c=0.0)

    def test_k_factor(self, coil):
        expected = math.pi * MU0 * 400 / (0.003**2 * 0.0002**2)
        assert coil.k_factor == pytest.approx(expected, rel=1e-12)
