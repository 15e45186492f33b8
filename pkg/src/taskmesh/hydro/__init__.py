"""Radiation-hydrodynamics mini-app built on the task runtime."""

from .eos import EquationOfState, StateError, conserve, primitives, validate_state
from .exact_riemann import shock_jump_from_mach, solution_profile
from .radiation import (
    JacobiNonConvergence,
    StencilOperator,
    face_diffusion,
    flux_limiter,
    jacobi_solve,
)
from .riemann import hll_flux, lax_friedrichs_flux, physical_flux
from .solver import (
    SCENARIOS,
    HydroConfig,
    HydroReport,
    HydroSim,
    analytic_shock_speed,
    compute_dt,
    conserved_totals,
    heun_step,
    heun_update,
    init_scenario,
    run_hydro,
    shock_position,
    step,
)
from .weno import weno5z, weno5z_weights
