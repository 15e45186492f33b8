"""Exact solution of the 1D Riemann problem for an ideal gas.

Used purely as a validation oracle: the star-region pressure is found by
Newton iteration on the standard pressure function (shock branch above the
side pressure, rarefaction branch below), after which any point of the
self-similar fan can be sampled at x/t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WaveState:
    rho: float
    u: float
    p: float


def _pressure_function(p, side: WaveState, gamma):
    a = math.sqrt(gamma * side.p / side.rho)
    if p > side.p:  # shock
        A = 2.0 / ((gamma + 1.0) * side.rho)
        B = (gamma - 1.0) / (gamma + 1.0) * side.p
        f = (p - side.p) * math.sqrt(A / (p + B))
        df = math.sqrt(A / (p + B)) * (1.0 - (p - side.p) / (2.0 * (p + B)))
    else:  # rarefaction
        f = (2.0 * a / (gamma - 1.0)) * (
            (p / side.p) ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0
        )
        df = (1.0 / (side.rho * a)) * (p / side.p) ** (-(gamma + 1.0) / (2.0 * gamma))
    return f, df


def star_region(left: WaveState, right: WaveState, gamma: float):
    """Pressure and velocity between the two nonlinear waves."""
    du = right.u - left.u
    a_l = math.sqrt(gamma * left.p / left.rho)
    a_r = math.sqrt(gamma * right.p / right.rho)
    if 2.0 * (a_l + a_r) / (gamma - 1.0) <= du:
        raise ValueError("initial states generate vacuum")
    # two-rarefaction initial guess, floored away from zero
    z = (gamma - 1.0) / (2.0 * gamma)
    p = (
        (a_l + a_r - 0.5 * (gamma - 1.0) * du)
        / (a_l / left.p**z + a_r / right.p**z)
    ) ** (1.0 / z)
    p = max(p, 1e-12 * min(left.p, right.p))
    for _ in range(200):
        f_l, df_l = _pressure_function(p, left, gamma)
        f_r, df_r = _pressure_function(p, right, gamma)
        delta = (f_l + f_r + du) / (df_l + df_r)
        p_new = p - delta
        if p_new <= 0.0:
            p_new = 0.5 * p
        if abs(p_new - p) <= 1e-14 * max(p, p_new):
            p = p_new
            break
        p = p_new
    f_l, _ = _pressure_function(p, left, gamma)
    f_r, _ = _pressure_function(p, right, gamma)
    u = 0.5 * (left.u + right.u) + 0.5 * (f_r - f_l)
    return p, u


def sample(left: WaveState, right: WaveState, gamma: float, xi: float):
    """State (rho, u, p) at similarity coordinate xi = x/t."""
    p_star, u_star = star_region(left, right, gamma)
    g1 = (gamma - 1.0) / (gamma + 1.0)
    if xi <= u_star:  # left of the contact
        side, sign = left, 1.0
    else:
        side, sign = right, -1.0
    a = math.sqrt(gamma * side.p / side.rho)
    if p_star > side.p:  # shock on this side
        ratio = p_star / side.p
        speed = side.u - sign * a * math.sqrt(
            (gamma + 1.0) / (2.0 * gamma) * ratio + (gamma - 1.0) / (2.0 * gamma)
        )
        if sign * xi <= sign * speed:
            return side.rho, side.u, side.p
        rho = side.rho * (ratio + g1) / (g1 * ratio + 1.0)
        return rho, u_star, p_star
    # rarefaction on this side
    a_star = a * (p_star / side.p) ** ((gamma - 1.0) / (2.0 * gamma))
    head = side.u - sign * a
    tail = u_star - sign * a_star
    if sign * xi <= sign * head:
        return side.rho, side.u, side.p
    if sign * xi >= sign * tail:
        rho = side.rho * (p_star / side.p) ** (1.0 / gamma)
        return rho, u_star, p_star
    u = (2.0 / (gamma + 1.0)) * (sign * a + 0.5 * (gamma - 1.0) * side.u + xi)
    a_local = sign * (u - xi)
    rho = side.rho * (a_local / a) ** (2.0 / (gamma - 1.0))
    p = side.p * (a_local / a) ** (2.0 * gamma / (gamma - 1.0))
    return rho, u, p


def solution_profile(left, right, gamma, x, t, x0=0.0):
    """Sampled (rho, u, p) arrays on positions ``x`` at time ``t``."""
    left = WaveState(*left)
    right = WaveState(*right)
    if t <= 0.0:
        raise ValueError("sampling requires t > 0")
    rho = np.empty_like(np.asarray(x, dtype=np.float64))
    u = np.empty_like(rho)
    p = np.empty_like(rho)
    for i, xi in enumerate((np.asarray(x) - x0) / t):
        rho[i], u[i], p[i] = sample(left, right, gamma, float(xi))
    return rho, u, p


def shock_jump_from_mach(right, mach: float, gamma: float):
    """Post-shock state and shock speed for a right-running shock.

    The returned (left state, speed) satisfy the jump conditions exactly,
    so the initial discontinuity propagates as a single shock at ``speed``.
    """
    rho_r, u_r, p_r = right
    if mach <= 1.0:
        raise ValueError("shock Mach number must exceed 1")
    a_r = math.sqrt(gamma * p_r / rho_r)
    speed = u_r + mach * a_r
    m2 = mach * mach
    rho_l = rho_r * (gamma + 1.0) * m2 / ((gamma - 1.0) * m2 + 2.0)
    p_l = p_r * (2.0 * gamma * m2 - (gamma - 1.0)) / (gamma + 1.0)
    u_l = speed - rho_r * (speed - u_r) / rho_l
    return (rho_l, u_l, p_l), speed
