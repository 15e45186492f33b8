"""Red-black Gauss-Seidel solver for the 2D Poisson equation.

The discrete Laplacian on a cell-centered grid,

    (p_W + p_E - 2 p_C) / dx^2 + (p_S + p_N - 2 p_C) / dy^2 = f_C,

is solved by Gauss-Seidel sweeps over a checkerboard coloring: cells of one
parity only read the opposite parity, so each half-sweep is embarrassingly
parallel and the two half-sweeps together perform one Gauss-Seidel iteration.
Each runtime task performs ``sweeps_per_task`` (default 50) red-black pairs
with a ghost exchange between every half-sweep, so the program is a pipeline
of dependent solve tasks with a residual reduction after each.

Dirichlet boundaries are face values held in the static boundary ghost cells.
A boundary neighbor enters a cell's stencil as the reflection ``2 g - p_C``,
folded analytically into the sweep: the boundary face contributes ``2 g / dx^2``
to the neighbor sum and ``1 / dx^2`` to the diagonal.  Sweeps are therefore
exact red-black Gauss-Seidel iterations on one fixed linear system, and the
imposed condition sits on the cell face, keeping the discretization second
order.

The default problem is manufactured: exact solution p*(x, y) =
sin(pi x) sin(pi y) with f = -2 pi^2 sin(pi x) sin(pi y) and homogeneous
Dirichlet boundaries, p initialized to zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .exactsum import exact_scaled_sum, scaled_to_float
from .executors import ExecutorConfig
from .runtime import RO, RW, WO, FieldHandle, Runtime, TaskResult
from .topology import LOW, decompose


def manufactured_solution(*coords):
    out = 1.0
    for c in coords:
        out = out * np.sin(np.pi * c)
    return out


def manufactured_rhs(*coords):
    dims = len(coords)
    return -dims * np.pi**2 * manufactured_solution(*coords)


@dataclass
class PoissonConfig:
    extents: tuple[int, ...] = (64, 64)
    color_grid: tuple[int, ...] = (1, 1)
    lengths: tuple[float, ...] = ()
    tolerance: float = 1e-8
    max_solve_tasks: int = 400
    sweeps_per_task: int = 50
    benchmark_mode: bool = False

    def __post_init__(self):
        if not self.lengths:
            self.lengths = (1.0,) * len(self.extents)


@dataclass
class PoissonProblem:
    """Grid geometry, right-hand side, and boundary data of one solve."""

    config: PoissonConfig
    spacing: tuple[float, ...]
    exact: callable
    rhs: callable
    boundary_value: float = 0.0
    # static per-color stencil data, filled by init_problem
    diag: dict = dataclass_field(default_factory=dict)
    bc_term: dict = dataclass_field(default_factory=dict)


@dataclass
class SolverState:
    p: FieldHandle
    f: FieldHandle
    iterations: int = 0
    residual_history: list[float] = dataclass_field(default_factory=list)


def cell_centers(block, spacing, axis, ghost: bool = False):
    """Physical center coordinates of local cells along one axis."""
    iv = block.owned[axis]
    lo, hi = iv.lo, iv.hi
    if ghost:
        lo, hi = lo - block.halo_depth, hi + block.halo_depth
    return (np.arange(lo, hi) + 0.5) * spacing[axis]


def init_problem(
    runtime: Runtime, config: PoissonConfig
) -> tuple[PoissonProblem, SolverState]:
    """Register fields and submit the initialization task.

    Fills f with the manufactured right-hand side at cell centers, leaves p
    zero, and writes the Dirichlet face values into the physical-boundary
    ghost cells of p.
    """
    dims = runtime.topology.dims
    spacing = tuple(
        L / n for L, n in zip(config.lengths, runtime.topology.global_extents)
    )
    for s in spacing:
        if not s > 0:
            raise ValueError("grid spacing must be positive")
    if not config.tolerance > 0:
        raise ValueError("tolerance must be positive")
    problem = PoissonProblem(config, spacing, manufactured_solution, manufactured_rhs)
    p = runtime.register_field("p")
    f = runtime.register_field("f")
    state = SolverState(p, f)

    inv_sq = [1.0 / s**2 for s in spacing]
    for color, block in enumerate(runtime.blocks):
        owned_shape = tuple(iv.size for iv in block.owned)
        diag = np.full(owned_shape, 2.0 * sum(inv_sq))
        bc = np.zeros(owned_shape)
        for axis, side, _ in block.boundary_ranges:
            face = [slice(None)] * dims
            face[axis] = 0 if side == LOW else -1
            diag[tuple(face)] += inv_sq[axis]
            bc[tuple(face)] += problem.boundary_value * inv_sq[axis]
        problem.diag[color] = diag
        problem.bc_term[color] = bc

    def initialize(ctx):
        for color in ctx.colors:
            block = ctx.block(color)
            centers = [
                cell_centers(block, spacing, axis) for axis in range(dims)
            ]
            grids = np.meshgrid(*centers, indexing="ij")
            ctx.owned(f, color)[:] = problem.rhs(*grids)
            local_p = ctx.local(p, color)
            for axis, side, raw in block.boundary_ranges:
                sl = [block.owned_slices()[a] for a in range(dims)]
                origin = block.local_origin[axis]
                sl[axis] = slice(raw.lo - origin, raw.hi - origin)
                local_p[tuple(sl)] = problem.boundary_value

    runtime.submit(initialize, [(p, WO), (f, WO)], label="init")
    return problem, state


def gsm_sweep(ctx, problem: PoissonProblem, state: SolverState, color: int, parity: int):
    """Update every owned cell of one parity in place.

    p_C <- [ (p_W + p_E + bc) / dx^2 + (p_S + p_N) / dy^2 - f_C ] / diag,
    where boundary faces contribute their folded reflection terms.  Cells of
    one parity read only the opposite parity, so the update order inside a
    half-sweep cannot matter; the parity class is swept as strided
    sublattices with per-cell arithmetic identical to a scalar update.
    """
    dims = ctx.topology.dims
    local = ctx.local(state.p, color)
    rhs = ctx.owned(state.f, color)
    block = ctx.block(color)
    h = block.halo_depth
    inv_sq = [1.0 / s**2 for s in problem.spacing]
    sizes = [iv.size for iv in block.owned]
    target = (parity - sum(iv.lo for iv in block.owned)) % 2

    for offsets in itertools.product(*[range(1 if n == 1 else 2) for n in sizes]):
        if sum(offsets) % 2 != target:
            continue
        counts = [(n - d + 1) // 2 for n, d in zip(sizes, offsets)]
        if any(c == 0 for c in counts):
            continue
        center = [
            slice(h + d, h + d + 2 * c, 2) for d, c in zip(offsets, counts)
        ]
        sub = tuple(slice(d, d + 2 * c, 2) for d, c in zip(offsets, counts))
        update = problem.bc_term[color][sub] - rhs[sub]
        for axis in range(dims):
            low = list(center)
            high = list(center)
            low[axis] = slice(center[axis].start - 1, center[axis].stop - 1, 2)
            high[axis] = slice(center[axis].start + 1, center[axis].stop + 1, 2)
            update = update + (local[tuple(low)] + local[tuple(high)]) * inv_sq[axis]
        local[tuple(center)] = update / problem.diag[color][sub]


def _residual_squares(ctx, problem: PoissonProblem, state: SolverState, color: int):
    dims = ctx.topology.dims
    local = ctx.local(state.p, color)
    rhs = ctx.owned(state.f, color)
    block = ctx.block(color)
    inv_sq = [1.0 / s**2 for s in problem.spacing]
    owned_sl = block.owned_slices()
    r = problem.bc_term[color] - rhs - problem.diag[color] * local[owned_sl]
    for axis in range(dims):
        low = list(owned_sl)
        high = list(owned_sl)
        low[axis] = slice(owned_sl[axis].start - 1, owned_sl[axis].stop - 1)
        high[axis] = slice(owned_sl[axis].start + 1, owned_sl[axis].stop + 1)
        r = r + (local[tuple(low)] + local[tuple(high)]) * inv_sq[axis]
    return r * r


def solve_task(
    runtime: Runtime,
    problem: PoissonProblem,
    state: SolverState,
    iteration: int | None = None,
) -> TaskResult:
    """Submit one solve task: sweeps_per_task red-black pairs on p.

    Ghosts are exchanged between every half-sweep; successive solve tasks
    share read-write access to p and therefore form a dependent pipeline.
    """
    sweeps = problem.config.sweeps_per_task
    index = iteration if iteration is not None else state.iterations

    def body(ctx):
        for _ in range(sweeps):
            for parity in (0, 1):
                for color in ctx.colors:
                    with ctx.span("solve", color, index):
                        gsm_sweep(ctx, problem, state, color, parity)
                ctx.exchange(state.p)

    state.iterations += 1
    return runtime.submit(body, [(state.p, RW), (state.f, RO)], label="solve")


def residual(runtime: Runtime, problem: PoissonProblem, state: SolverState) -> float:
    """L2 norm of (A p - f) over all cells, reduced across ranks.

    Per-color partial sums of squares are accumulated exactly (scaled-integer
    arithmetic) before the allreduce, so the result is bitwise identical for
    every color grid and executor.
    """

    def body(ctx):
        partials = [
            exact_scaled_sum(_residual_squares(ctx, problem, state, color))
            for color in ctx.colors
        ]
        total = ctx.allreduce(partials, "sum")
        return math.sqrt(scaled_to_float(total))

    result = runtime.submit(
        body, [(state.p, RO), (state.f, RO)], label="residual"
    )
    value = runtime.wait(result)
    state.residual_history.append(value)
    return value


def error_linf(runtime: Runtime, problem: PoissonProblem, state: SolverState) -> float:
    """Max-norm error of p against the manufactured exact solution."""

    def body(ctx):
        dims = ctx.topology.dims
        partials = []
        for color in ctx.colors:
            block = ctx.block(color)
            centers = [
                cell_centers(block, problem.spacing, axis) for axis in range(dims)
            ]
            grids = np.meshgrid(*centers, indexing="ij")
            exact = problem.exact(*grids)
            partials.append(float(np.abs(ctx.owned(state.p, color) - exact).max()))
        return ctx.allreduce(partials, "max")

    return runtime.wait(runtime.submit(body, [(state.p, RO)], label="error"))


@dataclass
class PoissonReport:
    converged: bool
    solve_tasks: int
    residual_history: list[float]
    error_linf: float | None
    comm_stats: object
    solution: np.ndarray | None


def run_poisson(
    config: PoissonConfig,
    executor: ExecutorConfig | None = None,
    recorder=None,
    fixed_tasks: int | None = None,
) -> PoissonReport:
    """Drive solve tasks until the residual drops below tolerance.

    ``fixed_tasks`` pins the number of solve tasks regardless of the
    tolerance (used for cross-configuration comparisons).  In benchmark mode
    no solution array is materialized.
    """
    topology = decompose(config.extents, config.color_grid, halo_depth=1)
    runtime = Runtime(topology, executor or ExecutorConfig(ranks=topology.n_colors))
    runtime.recorder = recorder
    try:
        problem, state = init_problem(runtime, config)
        converged = False
        count = fixed_tasks if fixed_tasks is not None else config.max_solve_tasks
        for k in range(count):
            solve_task(runtime, problem, state, iteration=k)
            value = residual(runtime, problem, state)
            if fixed_tasks is None and value < config.tolerance:
                converged = True
                break
        runtime.finish()
        err = None
        solution = None
        if not config.benchmark_mode:
            err = error_linf(runtime, problem, state)
            solution = runtime.gather(state.p)
        return PoissonReport(
            converged=converged,
            solve_tasks=state.iterations,
            residual_history=list(state.residual_history),
            error_linf=err,
            comm_stats=runtime.comm_stats(),
            solution=solution,
        )
    finally:
        runtime.close()
