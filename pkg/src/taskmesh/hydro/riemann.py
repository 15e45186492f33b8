"""Approximate Riemann fluxes: HLL for the gas, Lax-Friedrichs for radiation.

All functions broadcast over leading array axes, so one call evaluates every
interface of a slab; the trailing axis holds conserved components.
"""

from __future__ import annotations

import numpy as np

from .eos import EquationOfState, conserve, primitives


def physical_flux(U, eos: EquationOfState, axis: int):
    """Exact flux of the Euler equations along ``axis``.

    For a state at rest the momentum flux along the axis reduces to the
    pressure.
    """
    U = np.asarray(U, dtype=np.float64)
    rho, velocities, pressure = primitives(U, eos)
    un = velocities[axis]
    parts = [rho * un]
    for a, u in enumerate(velocities):
        mom = rho * un * u
        if a == axis:
            mom = mom + pressure
        parts.append(mom)
    parts.append(un * (U[..., -1] + pressure))
    return np.stack(parts, axis=-1)


def davis_wave_speeds(U_L, U_R, eos: EquationOfState, axis: int):
    """Davis estimates S_L = min(u-a), S_R = max(u+a) over the two states."""
    rho_L, vel_L, P_L = primitives(U_L, eos)
    rho_R, vel_R, P_R = primitives(U_R, eos)
    a_L = eos.sound_speed(rho_L, P_L)
    a_R = eos.sound_speed(rho_R, P_R)
    u_L = vel_L[axis]
    u_R = vel_R[axis]
    S_L = np.minimum(u_L - a_L, u_R - a_R)
    S_R = np.maximum(u_L + a_L, u_R + a_R)
    return S_L, S_R


def hll_flux(U_L, U_R, eos: EquationOfState, axis: int):
    """Two-wave HLL flux from left/right conserved states.

    F = F_L where S_L >= 0, F_R where S_R <= 0, and otherwise the standard
    intermediate combination; the degenerate S_L == S_R case falls back to
    the central average.
    """
    U_L = np.asarray(U_L, dtype=np.float64)
    U_R = np.asarray(U_R, dtype=np.float64)
    S_L, S_R = davis_wave_speeds(U_L, U_R, eos, axis)
    F_L = physical_flux(U_L, eos, axis)
    F_R = physical_flux(U_R, eos, axis)
    span = S_R - S_L
    safe = np.where(span == 0.0, 1.0, span)
    middle = (
        S_R[..., None] * F_L
        - S_L[..., None] * F_R
        + (S_L * S_R)[..., None] * (U_R - U_L)
    ) / safe[..., None]
    central = 0.5 * (F_L + F_R)
    middle = np.where(span[..., None] == 0.0, central, middle)
    flux = np.where(S_L[..., None] >= 0.0, F_L, middle)
    flux = np.where(S_R[..., None] <= 0.0, F_R, flux)
    return flux


def lax_friedrichs_flux(U_L, U_R, flux, alpha_max):
    """Rusanov-type flux 0.5 (F_L + F_R) - 0.5 alpha (U_R - U_L).

    ``flux`` is either a callable applied to each side or a precomputed
    ``(F_L, F_R)`` pair (used when the flux depends on carrier-gas data that
    is not part of the transported state).  ``alpha_max`` must bound every
    local signal speed.
    """
    U_L = np.asarray(U_L, dtype=np.float64)
    U_R = np.asarray(U_R, dtype=np.float64)
    if callable(flux):
        F_L, F_R = flux(U_L), flux(U_R)
    else:
        F_L, F_R = flux
    return 0.5 * (F_L + F_R) - 0.5 * alpha_max * (U_R - U_L)


def interface_conserved(rho, velocities, pressure, eos: EquationOfState):
    return conserve(rho, velocities, pressure, eos)
