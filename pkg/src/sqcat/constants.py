"""Frozen numerical conventions shared across the package.

Quadratures are defined as X = (a + a^dag)/2 and P = i(a^dag - a)/2, so the
vacuum satisfies <X^2> = <P^2> = 1/4 and the vacuum characteristic function
C(nu) = exp(-|nu|^2/2) has unit standard deviation in nu.  Compression levels
in dB always refer to 20*log10(sigma/sigma_vacuum) of a fitted Gaussian width,
which for a minimum-uncertainty state equals 10*log10(variance ratio).
"""

from __future__ import annotations

import math

VACUUM_QUAD_VARIANCE = 0.25
CHAR_VACUUM_SIGMA = 1.0

# 20*log10(e): dB of width change per unit squeezing parameter r.
DB_PER_UNIT_R = 20.0 * math.log10(math.e)

DEFAULT_CAVITY_DIM = 60


def db_to_r(level_db: float) -> float:
    """Squeezing parameter r >= 0 for a compression level given in dB (<= 0)."""
    return -level_db / DB_PER_UNIT_R


def r_to_db(r: float) -> float:
    """Compression level in dB (negative for r > 0) for squeezing parameter r."""
    return -r * DB_PER_UNIT_R
