"""Fifth-order WENO-Z reconstruction of interface values from cell averages.

The three quadratic sub-stencil reconstructions are blended with nonlinear
weights built from the Jiang-Shu smoothness indicators and the global
indicator tau5 = |beta0 - beta2|; smooth data recovers the ideal weights
(1/10, 6/10, 3/10) and with them fifth-order accuracy, while a sub-stencil
containing a discontinuity receives a vanishing weight.
"""

from __future__ import annotations

import numpy as np

EPSILON = 1e-40  # pure division guard; small enough to preserve formal order
IDEAL_WEIGHTS = (0.1, 0.6, 0.3)


def smoothness_indicators(v0, v1, v2, v3, v4):
    b0 = 13.0 / 12.0 * (v0 - 2.0 * v1 + v2) ** 2 + 0.25 * (v0 - 4.0 * v1 + 3.0 * v2) ** 2
    b1 = 13.0 / 12.0 * (v1 - 2.0 * v2 + v3) ** 2 + 0.25 * (v1 - v3) ** 2
    b2 = 13.0 / 12.0 * (v2 - 2.0 * v3 + v4) ** 2 + 0.25 * (3.0 * v2 - 4.0 * v3 + v4) ** 2
    return b0, b1, b2


def weno5z_weights(v0, v1, v2, v3, v4):
    """Normalized nonlinear weights of the three sub-stencils."""
    b0, b1, b2 = smoothness_indicators(v0, v1, v2, v3, v4)
    tau5 = np.abs(b0 - b2)
    a0 = IDEAL_WEIGHTS[0] * (1.0 + tau5 / (b0 + EPSILON))
    a1 = IDEAL_WEIGHTS[1] * (1.0 + tau5 / (b1 + EPSILON))
    a2 = IDEAL_WEIGHTS[2] * (1.0 + tau5 / (b2 + EPSILON))
    total = a0 + a1 + a2
    return a0 / total, a1 / total, a2 / total


def weno5z(stencil):
    """Left-biased interface value at i+1/2 from cell averages v_{i-2}..v_{i+2}.

    The right-biased value at the same interface is obtained by feeding the
    mirrored stencil v_{i+3}..v_{i-1}.
    """
    v0, v1, v2, v3, v4 = (np.asarray(v, dtype=np.float64) for v in stencil)
    w0, w1, w2 = weno5z_weights(v0, v1, v2, v3, v4)
    q0 = (2.0 * v0 - 7.0 * v1 + 11.0 * v2) / 6.0
    q1 = (-v1 + 5.0 * v2 + 2.0 * v3) / 6.0
    q2 = (2.0 * v2 + 5.0 * v3 - v4) / 6.0
    return w0 * q0 + w1 * q1 + w2 * q2


def interface_states(values, axis, first_interior, count):
    """Left/right-biased states at the ``count + 1`` interfaces bounding a run
    of ``count`` cells starting at index ``first_interior`` along ``axis``.

    Interface k sits between cells ``first_interior + k - 1`` and
    ``first_interior + k``; the stencil therefore reaches three cells past
    either end of the run (halo depth >= 3).
    """

    def window(offset):
        sl = [slice(None)] * values.ndim
        start = first_interior - 1 + offset
        sl[axis] = slice(start, start + count + 1)
        return values[tuple(sl)]

    left = weno5z([window(o) for o in (-2, -1, 0, 1, 2)])
    right = weno5z([window(o) for o in (3, 2, 1, 0, -1)])
    return left, right
