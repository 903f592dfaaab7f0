"""
Constants for the cosmic measurement simulator.

:copyright: (c) 2025-2026 by the cosmic-mu developers.
:license: MPL-2.0, see LICENSE for more details.
"""

import math

SPEED_OF_LIGHT = 299_792_458.0
SECONDS_PER_YEAR = 3.15576e7

INTERVAL_TOLERANCE = 1e-12
NORM_TOLERANCE = 1e-12

MIN_GRID_POINTS = 8
CFL_SLACK = 1e-12
DEFAULT_PERTURBATION_BOUND = 0.1
DEFAULT_TIMELIKE_MARGIN = 0.0
DEFAULT_FIELD_POINTS = 128
DEFAULT_CFL_FRACTION = 0.5
FIELD_WINDOW_MARGIN = 1.0

DEFAULT_SEED = 20260607
DEFAULT_TRIALS = 100_000
TRIAL_CHUNK = 25_000
UNIFORMS_PER_BLOCK = 4

CHSH_ANGLES = {
    "a": 0.0,
    "a_prime": math.pi / 2,
    "b": math.pi / 4,
    "b_prime": 3 * math.pi / 4,
}

DEFAULT_ARM_LENGTH = 1.0
DEFAULT_DELAY = 0.5

FRAME_SCAN_VELOCITIES = (-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9)
EINSTEIN_VELOCITY = 0.5

# μ values equal to this many decimals are ordered by event id
ORDER_DECIMALS = 9

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
