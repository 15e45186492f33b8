"""Ideal-gas equation of state and conserved/primitive conversions.

Conserved per-cell state is laid out as [rho, rho*u_0, ..., rho*u_{d-1}, E]
on the trailing array axis; radiation energy lives in its own scalar field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class StateError(ValueError):
    """A state invariant (positive density / internal energy) was violated."""


@dataclass(frozen=True)
class EquationOfState:
    gamma: float = 1.4

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError("adiabatic exponent must exceed 1")

    def pressure(self, rho, velocities, energy):
        kinetic = 0.5 * rho * sum(u * u for u in velocities)
        return (self.gamma - 1.0) * (energy - kinetic)

    def total_energy(self, rho, velocities, pressure):
        kinetic = 0.5 * rho * sum(u * u for u in velocities)
        return pressure / (self.gamma - 1.0) + kinetic

    def sound_speed(self, rho, pressure):
        return np.sqrt(self.gamma * pressure / rho)


def primitives(U, eos: EquationOfState):
    """(rho, [u_a], P) from conserved state; exact algebraic inverse of conserve."""
    U = np.asarray(U, dtype=np.float64)
    dims = U.shape[-1] - 2
    rho = U[..., 0]
    velocities = [U[..., 1 + a] / rho for a in range(dims)]
    pressure = eos.pressure(rho, velocities, U[..., -1])
    return rho, velocities, pressure


def conserve(rho, velocities, pressure, eos: EquationOfState):
    """Conserved state array from primitive variables."""
    rho = np.asarray(rho, dtype=np.float64)
    parts = [rho] + [rho * u for u in velocities]
    parts.append(eos.total_energy(rho, velocities, pressure))
    return np.stack([np.broadcast_to(p, rho.shape) for p in parts], axis=-1)


def validate_state(U, eos: EquationOfState, where: str = "state", erad=None):
    """Raise :class:`StateError` naming the first offending cell, if any."""
    rho, velocities, pressure = primitives(U, eos)
    internal = pressure / (eos.gamma - 1.0)
    for name, values, strict in (
        ("density", rho, True),
        ("internal energy", internal, True),
        ("radiation energy", erad, False),
    ):
        if values is None:
            continue
        bad = ~(values > 0.0) if strict else ~(values >= 0.0)
        if bad.any():
            cell = tuple(int(i) for i in np.argwhere(bad)[0])
            raise StateError(
                f"{where}: non-physical {name} {values[cell]!r} at cell {cell}"
            )
