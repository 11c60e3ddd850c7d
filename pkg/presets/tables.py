"""
tables.py — Built-in sensor geometry, sample plates, thickness-table cases
and the lift-off sets used for figure data.  All values SI.
"""

from __future__ import annotations

from dataclasses import dataclass

from src.forward_model import CoilPair, Plate

# ─────────────────────────────────────────────
# Sensor and samples
# ─────────────────────────────────────────────

TABLE1_COIL = CoilPair(
    r1=0.0118,
    r2=0.012,
    h=0.003,
    g=0.001,
    l_base=0.0005,
    n_turns=20,
)

ALUMINIUM_SIGMA = 38.2e6     # S/m

PLATE_22UM = Plate(sigma=ALUMINIUM_SIGMA, c=22e-6)
PLATE_44UM = Plate(sigma=ALUMINIUM_SIGMA, c=44e-6)


# ─────────────────────────────────────────────
# Thickness table (absolute lift-offs over the 0.5 mm sensor baseline)
# ─────────────────────────────────────────────

@dataclass(frozen=True)
class Table2Case:
    liftoff: float                  # absolute, m
    thickness: float                # m
    printed_uncompensated: float    # m
    printed_compensated: float      # m

    @property
    def extra_liftoff(self) -> float:
        return self.liftoff - TABLE1_COIL.l_base


TABLE2_CASES: tuple[Table2Case, ...] = (
    Table2Case(1.5e-3, 22e-6, 23.1e-6, 22.2e-6),
    Table2Case(1.5e-3, 44e-6, 46.3e-6, 44.3e-6),
    Table2Case(2.0e-3, 22e-6, 23.5e-6, 22.3e-6),
    Table2Case(2.0e-3, 44e-6, 47.0e-6, 44.2e-6),
    Table2Case(3.5e-3, 22e-6, 23.8e-6, 22.2e-6),
    Table2Case(3.5e-3, 44e-6, 47.9e-6, 44.4e-6),
)


# ─────────────────────────────────────────────
# Figure data lift-offs (extra above the baseline, m)
# ─────────────────────────────────────────────

SPECTRA_EXTRA_LIFTOFFS = (0.0, 1.5e-3, 3.0e-3, 4.5e-3)
SWEEP_EXTRA_LIFTOFFS = tuple(k * 0.5e-3 for k in range(10))
IMMUNITY_EXTRA_LIFTOFFS = (1.0e-3, 1.5e-3, 2.0e-3, 3.0e-3, 3.5e-3, 4.5e-3)
