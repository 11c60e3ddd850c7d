"""
Central configuration for the eddypeak toolkit.

All tuneable knobs live here so that changing a numerical default or a
sweep range requires editing exactly one file.  Command-line flags
override the sweep and form defaults per run; everything else is fixed
per checkout so that identical inputs give identical outputs.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# ──────────────────────────────────────────────
# Paths / identity
# ──────────────────────────────────────────────
PROJECT_ROOT = Path(__file__).resolve().parent

# Load .env from the project root (before any os.getenv calls)
load_dotenv(PROJECT_ROOT / ".env")

TOOL_NAME = "eddypeak"
TOOL_VERSION = "1.0.0"

# ──────────────────────────────────────────────
# Logging  (diagnostics only, never changes an output file)
# ──────────────────────────────────────────────
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# ──────────────────────────────────────────────
# Forward model  ("product" | "paper")
# ──────────────────────────────────────────────
# "paper" keeps the (e^{-2ah} + 1) factor, which has no
# interior envelope maximum for the built-in coil; see DESIGN.md.
GEOMETRY_FORM = "product"

# Quadrature
QUAD_REL_TOL = 1e-9
QUAD_ALPHA_MAX_FACTOR = 10.0
QUAD_MAX_PANELS = 4096
QUAD_INITIAL_PANELS = 16
QUAD_GAUSS_ORDER = 24          # nodes per panel

# Coil window integral P(alpha): Gauss-Legendre nodes = base + per_unit * width
WINDOW_BASE_NODES = 16
WINDOW_NODES_PER_UNIT = 4

# Plate reflection: switch to the asymptotic form above this Re(2 alpha_1 c)
PHI_OVERFLOW_EXPONENT = 700.0

# Characteristic spatial frequency search
ALPHA0_LOW_FACTOR = 1e-2       # window start = factor / r2
ALPHA0_HIGH_FACTOR = 50.0      # window end   = factor / (r2 - r1)
ALPHA0_SCAN_POINTS = 2000
ALPHA0_REL_TOL = 1e-6

# ──────────────────────────────────────────────
# Frequency sweep
# ──────────────────────────────────────────────
F_MIN_HZ = 1e2
F_MAX_HZ = 1e7
POINTS_PER_DECADE = 30
MIN_SPECTRUM_SAMPLES = 8

# ──────────────────────────────────────────────
# Compensation
# ──────────────────────────────────────────────
DEFAULT_MODE = "thin"          # "thin" | "full"
LN_RATIO_CLAMP = 0.01          # noise allowance above zero
THIN_REGIME_LIMIT = 0.1        # warn when alpha0 * c exceeds this
FULL_MODE_REL_TOL = 1e-6
FULL_MODE_MAX_ITER = 50

# ──────────────────────────────────────────────
# File formats
# ──────────────────────────────────────────────
CSV_FLOAT_FORMAT = "{:.17g}"
SWEEP_HEADER = ("frequency_hz", "re_z_ohm", "im_z_ohm")
SPECTRUM_HEADER = ("frequency_hz", "re_dl_h", "im_dl_h")
GRID_MATCH_REL_TOL = 1e-9

# Air-coupling stand-in used when synthesizing analyzer sweeps from a spectrum
AIR_MUTUAL_INDUCTANCE_H = 1.0e-5
