"""Order-independent exact accumulation of float64 values.

Summing numpy partial sums in a different grouping (one rank vs. many) changes
the last bits of the result, which breaks bitwise cross-rank comparisons of
residual norms and conserved totals.  Representing each addend exactly as an
integer multiple of 2**-SCALE_BITS makes accumulation associative and
commutative: per-rank partials are Python integers, combine exactly in any
order, and round to float64 once at the end.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

# Large enough that every float64 (down to subnormals, exponent >= -1074)
# scales to an integer: mantissa shift = exponent - 53 + SCALE_BITS >= 0.
SCALE_BITS = 1200

_CHUNK = 512  # mantissas are < 2**53, so 512 of them cannot overflow int64


def exact_scaled_sum(values: np.ndarray) -> int:
    """Return sum(values) * 2**SCALE_BITS as an exact integer."""
    flat = np.ascontiguousarray(values, dtype=np.float64).ravel()
    if not np.isfinite(flat).all():
        raise ValueError("exact sum requires finite values")
    mantissa, exponent = np.frexp(flat)
    scaled = np.ldexp(mantissa, 53).astype(np.int64)  # exact: 53-bit mantissas
    shift = exponent.astype(np.int64) - 53 + SCALE_BITS
    total = 0
    for s in np.unique(shift):
        group = scaled[shift == s]
        part = 0
        for i in range(0, group.size, _CHUNK):
            part += int(np.sum(group[i : i + _CHUNK], dtype=np.int64))
        total += part << int(s)
    return total


def scaled_to_float(total: int) -> float:
    """Round an exact scaled integer back to the nearest float64."""
    if total == 0:
        return 0.0
    return float(Fraction(total, 1 << SCALE_BITS))
