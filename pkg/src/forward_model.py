"""
forward_model.py — Analytical inductance change of a coil pair above a plate.

Evaluates the classical Dodd–Deeds integral for a coaxial driver/pickup
pair above a single nonmagnetic conducting plate:

    ΔL(ω) = K ∫₀^∞ P²(α)/α⁶ · A(α) · φ(α, ω) dα

together with its building blocks (Bessel window P, geometry factor A,
plate reflection φ), the frequency-independent magnitude ΔL₀, and the
characteristic spatial frequency α₀ where the coil envelope peaks.

Everything here is a pure function of its arguments.  Array arguments
for ``alpha`` are accepted wherever it makes sense so the quadrature can
evaluate whole panels at once.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Final, Literal, Union

import numpy as np
from scipy import special
from scipy.optimize import minimize_scalar

import config
from src.errors import ConfigError, DomainError, NumericalError
from src.quadrature import QuadratureSettings, gauss_legendre, integrate_adaptive

logger = logging.getLogger(__name__)

# Permeability of free space, H/m.
MU0: Final[float] = 4e-7 * math.pi

GeometryForm = Literal["paper", "product"]
GEOMETRY_FORMS: tuple[str, ...] = ("paper", "product")

ArrayLike = Union[float, np.ndarray]


# ─────────────────────────────────────────────
# Domain types
# ─────────────────────────────────────────────

@dataclass(frozen=True)
class CoilPair:
    """Identical coaxial driver and pickup coils (SI units throughout)."""
    r1: float          # inner radius
    r2: float          # outer radius
    h: float           # winding height
    g: float           # axial gap between the coils
    l_base: float      # built-in lift-off of the lower coil face
    n_turns: int

    def __post_init__(self) -> None:
        if not self.r1 > 0:
            raise ConfigError(f"r1 must be positive, got {self.r1}")
        if not self.r2 > self.r1:
            raise ConfigError(f"r2 must exceed r1, got r1={self.r1}, r2={self.r2}")
        if not self.h > 0:
            raise ConfigError(f"h must be positive, got {self.h}")
        if not self.g >= 0:
            raise ConfigError(f"g must be non-negative, got {self.g}")
        if not self.l_base >= 0:
            raise ConfigError(f"l_base must be non-negative, got {self.l_base}")
        if int(self.n_turns) != self.n_turns or self.n_turns < 1:
            raise ConfigError(f"n_turns must be an integer >= 1, got {self.n_turns}")

    @property
    def k_factor(self) -> float:
        """K = π μ₀ N² / (h² (r₂ − r₁)²)."""
        return math.pi * MU0 * self.n_turns**2 / (self.h**2 * (self.r2 - self.r1) ** 2)

    def total_offset(self, extra_liftoff: float) -> float:
        """Decay length 2(l + δ) + h + g of the geometry exponential."""
        return 2.0 * (self.l_base + extra_liftoff) + self.h + self.g


@dataclass(frozen=True)
class Plate:
    """Single conducting plate; only mu_r = 1 is exercised."""
    sigma: float       # S/m
    c: float           # thickness, m
    mu_r: float = 1.0

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if not self.c > 0:
            raise ConfigError(f"c must be positive, got {self.c}")
        if not self.mu_r > 0:
            raise ConfigError(f"mu_r must be positive, got {self.mu_r}")


def check_form(form: str) -> str:
    if form not in GEOMETRY_FORMS:
        raise ConfigError(
            f"Unknown geometry form '{form}'. Choose from: {', '.join(GEOMETRY_FORMS)}"
        )
    return form


def _check_alpha(alpha: ArrayLike) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    if not np.all(a > 0):
        raise ConfigError("spatial frequency alpha must be positive")
    return a


def _out(value: np.ndarray, like: ArrayLike):
    return value.item() if np.ndim(like) == 0 else value


# ─────────────────────────────────────────────
# Special functions
# ─────────────────────────────────────────────

def bessel_j(order: int, x: ArrayLike) -> ArrayLike:
    """Bessel function of the first kind, orders 0 and 1."""
    if order not in (0, 1):
        raise ConfigError(f"bessel_j supports orders 0 and 1, got {order}")
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("bessel_j argument must be finite")
    value = special.j0(arr) if order == 0 else special.j1(arr)
    return _out(np.asarray(value), x)


def coil_window_p(alpha: ArrayLike, r1: float, r2: float) -> ArrayLike:
    """
    P(α) = ∫_{αr₁}^{αr₂} x J₁(x) dx by Gauss–Legendre on the finite window.

    The node count grows with the window width α(r₂ − r₁) so the rule
    stays exact to round-off across the oscillations of J₁.
    """
    a = _check_alpha(alpha)
    if not 0 < r1 < r2:
        raise ConfigError(f"coil radii must satisfy 0 < r1 < r2, got {r1}, {r2}")

    width = float(np.max(a)) * (r2 - r1)
    order = config.WINDOW_BASE_NODES + config.WINDOW_NODES_PER_UNIT * math.ceil(width)
    t, w = gauss_legendre(order)

    flat = a.reshape(-1)
    half = 0.5 * flat * (r2 - r1)
    mid = 0.5 * flat * (r2 + r1)
    x = mid[:, None] + half[:, None] * t[None, :]
    p = half * ((x * special.j1(x)) @ w)
    return _out(p.reshape(a.shape), alpha)


# ─────────────────────────────────────────────
# Geometry and plate factors
# ─────────────────────────────────────────────

def geometry_factor_a(
    alpha: ArrayLike,
    coil: CoilPair,
    extra_liftoff: float = 0.0,
    form: str = config.GEOMETRY_FORM,
) -> ArrayLike:
    """
    Geometry factor A(α) for a lift-off of ``l_base + extra_liftoff``.

    ``paper``   → e^{−α(2l+h+g)} (e^{−2αh} + 1)
    ``product`` → e^{−α(2l+h+g)} (1 − e^{−αh})²

    Both satisfy A(α, δ) = A(α, 0) · e^{−2αδ}.
    """
    check_form(form)
    if extra_liftoff < 0:
        raise ConfigError(f"extra_liftoff must be non-negative, got {extra_liftoff}")
    a = _check_alpha(alpha)
    decay = np.exp(-a * coil.total_offset(extra_liftoff))
    if form == "paper":
        shape = np.exp(-2.0 * a * coil.h) + 1.0
    else:
        shape = np.square(np.expm1(-a * coil.h))
    return _out(decay * shape, alpha)


def plate_phi(alpha: ArrayLike, omega: float, plate: Plate) -> ArrayLike:
    """
    Plate reflection coefficient φ(α) for a single layer of thickness c.

        φ = (α₁ + μα)(α₁ − μα)(1 − e^{2α₁c}) / ((α₁ + μα)² e^{2α₁c} − (α₁ − μα)²)

    with α₁ the principal root of α² + jωσμ₀μ_r.  Where Re(2α₁c) would
    overflow the exponential, the e^{2α₁c}-dominant limit
    −(α₁ − μα)/(α₁ + μα) is used instead.
    """
    if omega < 0:
        raise ConfigError(f"omega must be non-negative, got {omega}")
    a = _check_alpha(alpha)
    a1 = np.sqrt(a * a + 1j * omega * plate.sigma * MU0 * plate.mu_r)
    ma = plate.mu_r * a
    plus, minus = a1 + ma, a1 - ma

    exponent = 2.0 * a1 * plate.c
    big = exponent.real > config.PHI_OVERFLOW_EXPONENT
    growth = np.exp(np.where(big, 0.0, exponent))
    direct = plus * minus * (1.0 - growth) / (plus * plus * growth - minus * minus)
    phi = np.where(big, -minus / plus, direct)
    return _out(phi, alpha)


def plate_phi_linearized(alpha: ArrayLike, omega: float, plate: Plate) -> ArrayLike:
    """First-order thin-plate form of φ (e^{2α₁c} ≈ 1 + 2α₁c)."""
    a = _check_alpha(alpha)
    k = 1j * omega * plate.sigma * MU0
    a1 = np.sqrt(a * a + k)
    c = plate.c
    phi = -k * c / (k * c + 2.0 * a * a * c + 2.0 * a + 2.0 * a * a1 * c)
    return _out(phi, alpha)


def first_order_response(omega: ArrayLike, omega_1: float) -> ArrayLike:
    """−(jω/ω₁)/(jω/ω₁ + 1); −Im peaks exactly at ω = ω₁."""
    u = 1j * np.asarray(omega, dtype=float) / omega_1
    return _out(-u / (u + 1.0), omega)


# ─────────────────────────────────────────────
# Envelope and characteristic spatial frequency
# ─────────────────────────────────────────────

def envelope(
    alpha: ArrayLike,
    coil: CoilPair,
    extra_liftoff: float = 0.0,
    form: str = config.GEOMETRY_FORM,
) -> ArrayLike:
    """Coil spectral envelope K · P²(α)/α⁶ · A(α), in H per unit α."""
    a = _check_alpha(alpha)
    ratio = np.asarray(coil_window_p(a, coil.r1, coil.r2)) / a**3
    value = coil.k_factor * ratio * ratio * np.asarray(
        geometry_factor_a(a, coil, extra_liftoff, form)
    )
    return _out(value, alpha)


def alpha0_window(coil: CoilPair) -> tuple[float, float]:
    return (
        config.ALPHA0_LOW_FACTOR / coil.r2,
        config.ALPHA0_HIGH_FACTOR / (coil.r2 - coil.r1),
    )


def characteristic_alpha0(
    coil: CoilPair,
    extra_liftoff: float = 0.0,
    form: str = config.GEOMETRY_FORM,
    rel_tol: float = config.ALPHA0_REL_TOL,
) -> float:
    """
    Spatial frequency α₀ at which the coil envelope peaks.

    Coarse log-grid scan over the search window, then golden-section
    refinement of log(envelope) inside the bracketing grid cell.

    Raises
    ------
    NumericalError
        If the largest grid value sits on either end of the window.
    """
    lo, hi = alpha0_window(coil)
    grid = np.geomspace(lo, hi, config.ALPHA0_SCAN_POINTS)
    values = np.asarray(envelope(grid, coil, extra_liftoff, form))
    idx = int(np.argmax(values))
    if idx == 0 or idx == grid.size - 1:
        raise NumericalError(
            f"envelope maximum at the search boundary alpha={grid[idx]:.6g} 1/m "
            f"(window [{lo:.6g}, {hi:.6g}], form '{form}')"
        )

    def _neg_log(a: float) -> float:
        return -math.log(envelope(a, coil, extra_liftoff, form))

    result = minimize_scalar(
        _neg_log,
        bracket=(grid[idx - 1], grid[idx], grid[idx + 1]),
        method="golden",
        options={"xtol": rel_tol},
    )
    alpha0 = float(result.x)
    logger.debug("alpha0 = %.9g 1/m (extra lift-off %.4g m)", alpha0, extra_liftoff)
    return alpha0


def predicted_alpha0(alpha0: float, extra_liftoff: float) -> float:
    """Small lift-off shift of α₀ under the sin² envelope model: α₀ − 4α₀²l/π²."""
    return alpha0 - 4.0 * alpha0 * alpha0 * extra_liftoff / math.pi**2


# ─────────────────────────────────────────────
# Spectral integrals
# ─────────────────────────────────────────────

def alpha_max(
    coil: CoilPair,
    extra_liftoff: float,
    settings: QuadratureSettings,
    form: str = config.GEOMETRY_FORM,
) -> float:
    """
    Truncation point of the α integral.

    |J₁(x)| ≤ x/2 bounds P²/α⁶ by ((r₂³ − r₁³)/6)² and A(α) by
    2 e^{−αL}, L = 2(l + δ) + h + g.  The cut-off is where that bound
    falls to ``rel_tol / alpha_max_factor`` of the envelope peak.
    """
    offset = coil.total_offset(extra_liftoff)
    bound = 2.0 * coil.k_factor * ((coil.r2**3 - coil.r1**3) / 6.0) ** 2
    scan = np.geomspace(alpha0_window(coil)[0], 50.0 / offset, 400)
    peak = float(np.max(envelope(scan, coil, extra_liftoff, form)))
    return math.log(settings.alpha_max_factor * bound / (settings.rel_tol * peak)) / offset


def delta_l(
    omega: float,
    coil: CoilPair,
    plate: Plate,
    extra_liftoff: float = 0.0,
    settings: QuadratureSettings = QuadratureSettings(),
    form: str = config.GEOMETRY_FORM,
) -> complex:
    """Complex inductance change ΔL(ω) of the pair above ``plate``, in henries."""
    if not omega > 0:
        raise ConfigError(f"omega must be positive, got {omega}")
    check_form(form)
    upper = alpha_max(coil, extra_liftoff, settings, form)

    def _integrand(a: np.ndarray) -> np.ndarray:
        return envelope(a, coil, extra_liftoff, form) * plate_phi(a, omega, plate)

    return integrate_adaptive(_integrand, 0.0, upper, settings)


def delta_l0(
    coil: CoilPair,
    extra_liftoff: float = 0.0,
    settings: QuadratureSettings = QuadratureSettings(),
    form: str = config.GEOMETRY_FORM,
) -> float:
    """Frequency-independent magnitude ΔL₀ = K ∫ P²/α⁶ A dα, in henries."""
    check_form(form)
    upper = alpha_max(coil, extra_liftoff, settings, form)

    def _integrand(a: np.ndarray) -> np.ndarray:
        return envelope(a, coil, extra_liftoff, form)

    return integrate_adaptive(_integrand, 0.0, upper, settings).real


def delta_l_factorized(
    omega: float,
    coil: CoilPair,
    plate: Plate,
    extra_liftoff: float = 0.0,
    settings: QuadratureSettings = QuadratureSettings(),
    form: str = config.GEOMETRY_FORM,
) -> complex:
    """Factorised approximation φ(α₀) · ΔL₀ of the full integral."""
    alpha0 = characteristic_alpha0(coil, extra_liftoff, form)
    return plate_phi(alpha0, omega, plate) * delta_l0(coil, extra_liftoff, settings, form)
