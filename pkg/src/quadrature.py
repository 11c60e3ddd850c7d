"""
quadrature.py — Panel-adaptive Gauss–Legendre integration.

Integrates a vectorised, possibly complex-valued integrand over a finite
interval.  The interval starts as a handful of equal panels; every
refinement round evaluates all still-open panels in one call (coarse
rule on the panel, the same rule on its two halves) and splits the ones
whose disagreement exceeds their share of the tolerance.

Accepted panels are summed in order of their left edge with a
compensated sum, so the result does not depend on the order in which
panels happened to converge.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

import config
from src.errors import ConfigError, QuadratureError

logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadratureSettings:
    """Accuracy knobs for the semi-infinite spectral integrals."""
    rel_tol: float = config.QUAD_REL_TOL
    alpha_max_factor: float = config.QUAD_ALPHA_MAX_FACTOR
    max_panels: int = config.QUAD_MAX_PANELS

    def __post_init__(self) -> None:
        if not (0.0 < self.rel_tol <= 1e-6):
            raise ConfigError(f"rel_tol must lie in (0, 1e-6], got {self.rel_tol}")
        if not self.alpha_max_factor >= 1.0:
            raise ConfigError(
                f"alpha_max_factor must be >= 1, got {self.alpha_max_factor}"
            )
        if self.max_panels < 64:
            raise ConfigError(f"max_panels must be >= 64, got {self.max_panels}")


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``order``-point rule on [-1, 1]."""
    nodes, weights = leggauss(order)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def _rule(func: Integrand, lo: np.ndarray, hi: np.ndarray, order: int) -> np.ndarray:
    """Apply the fixed rule on each [lo_i, hi_i]; returns one value per panel."""
    t, w = gauss_legendre(order)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * t[None, :]
    values = np.asarray(func(x.ravel())).reshape(x.shape)
    return half * (values @ w)


def _ordered_sum(values: np.ndarray) -> complex:
    return complex(math.fsum(values.real), math.fsum(values.imag))


def integrate_adaptive(
    func: Integrand,
    a: float,
    b: float,
    settings: QuadratureSettings,
    order: int = config.QUAD_GAUSS_ORDER,
    initial_panels: int = config.QUAD_INITIAL_PANELS,
) -> complex:
    """
    Integrate ``func`` over [a, b] to relative tolerance ``settings.rel_tol``.

    Parameters
    ----------
    func : callable
        Vectorised integrand; receives a 1-D float array and returns an
        array of the same length (real or complex).
    a, b : float
        Finite integration limits, ``a < b``.
    settings : QuadratureSettings
        Tolerance and panel cap.

    Returns
    -------
    complex
        The integral; real integrands come back with zero imaginary part.

    Raises
    ------
    QuadratureError
        When the open panels would exceed ``settings.max_panels``.
    """
    if not b > a:
        raise ConfigError(f"integration interval must satisfy a < b, got [{a}, {b}]")

    edges = np.linspace(a, b, initial_panels + 1)
    open_lo, open_hi = edges[:-1], edges[1:]
    done_lo: list[np.ndarray] = []
    done_val: list[np.ndarray] = []
    length = b - a
    previous = complex("nan")

    while open_lo.size:
        mid = 0.5 * (open_lo + open_hi)
        coarse = _rule(func, open_lo, open_hi, order)
        fine = (
            _rule(func, open_lo, mid, order) + _rule(func, mid, open_hi, order)
        )

        accepted = sum(_ordered_sum(v) for v in done_val)
        estimate = accepted + _ordered_sum(fine)
        scale = abs(estimate)
        share = settings.rel_tol * scale * (open_hi - open_lo) / length
        ok = np.abs(fine - coarse) <= share
        if scale == 0.0:
            ok[:] = True

        done_lo.append(open_lo[ok])
        done_val.append(fine[ok])

        n_done = sum(v.size for v in done_val)
        n_split = int((~ok).sum())
        if n_done + 2 * n_split > settings.max_panels:
            raise QuadratureError(
                f"no convergence within {settings.max_panels} panels on [{a:.6g}, {b:.6g}]",
                previous=previous,
                current=estimate,
            )

        previous = estimate
        lo, hi, m = open_lo[~ok], open_hi[~ok], mid[~ok]
        open_lo = np.concatenate([lo, m])
        open_hi = np.concatenate([m, hi])

    lo_all = np.concatenate(done_lo)
    val_all = np.concatenate(done_val).astype(complex)
    order_idx = np.argsort(lo_all, kind="stable")
    result = _ordered_sum(val_all[order_idx])
    logger.debug("quadrature on [%.4g, %.4g]: %d panels", a, b, lo_all.size)
    return result
