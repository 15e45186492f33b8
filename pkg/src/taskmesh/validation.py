"""Fast oracle scenarios behind the ``validate`` CLI subcommand.

Each check pits an implementation path against an independent reference
(dense matrix solves, the exact Riemann solution, closed-form values) and
returns a pass/fail verdict with a one-line detail.  The heavyweight
convergence studies live in the acceptance test suite; these checks are
sized to run in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import poisson as poisson_app
from .executors import BINOMIAL_TREE, STAR, Transport, allreduce
from .hydro import (
    HydroConfig,
    StencilOperator,
    flux_limiter,
    heun_update,
    jacobi_solve,
    run_hydro,
    solution_profile,
    weno5z,
)
from .hydro.solver import SOD_LEFT, SOD_RIGHT
from .oracles import dense_poisson_system, dense_red_black_gsm
from .runtime import RW, Runtime
from .topology import decompose


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check(name, passed, detail) -> CheckResult:
    return CheckResult(name, bool(passed), detail)


def check_poisson_dense_oracle() -> CheckResult:
    config = poisson_app.PoissonConfig(extents=(6, 6), sweeps_per_task=1)
    runtime = Runtime(decompose((6, 6), (1, 1)))
    try:
        problem, state = poisson_app.init_problem(runtime, config)
        poisson_app.solve_task(runtime, problem, state)
        runtime.finish()
        mine = runtime.gather(state.p)
    finally:
        runtime.close()
    h = 1.0 / 6.0
    centers = (np.arange(6) + 0.5) * h
    X, Y = np.meshgrid(centers, centers, indexing="ij")
    A, b = dense_poisson_system((6, 6), (h, h), poisson_app.manufactured_rhs(X, Y))
    reference = dense_red_black_gsm(A, b, (6, 6), np.zeros(36), pairs=1)
    diff = float(np.abs(mine - reference).max())
    return _check("poisson_dense_oracle", diff <= 1e-13, f"max diff {diff:.2e}")


def check_poisson_residual_identity() -> CheckResult:
    config = poisson_app.PoissonConfig(extents=(16, 16))
    runtime = Runtime(decompose((16, 16), (1, 1)))
    try:
        problem, state = poisson_app.init_problem(runtime, config)
        value = poisson_app.residual(runtime, problem, state)
        f = runtime.gather(state.f)
    finally:
        runtime.close()
    expected = math.sqrt(float((f * f).sum()))
    return _check(
        "poisson_residual_of_zero_guess", value == expected,
        f"residual {value!r} vs ||f|| {expected!r}",
    )


def check_weno_exactness() -> CheckResult:
    constant = abs(weno5z([3.0] * 5) - 3.0)
    linear = abs(weno5z([0.0, 1.0, 2.0, 3.0, 4.0]) - 2.5)
    return _check(
        "weno_constant_linear_exact", constant <= 1e-14 and linear <= 1e-14,
        f"constant err {constant:.2e}, linear err {linear:.2e}",
    )


def check_heun_scalar() -> CheckResult:
    value = heun_update(1.0, lambda y: -y, 0.1)
    return _check("heun_scalar_hook", value == 0.905, f"got {value!r}")


def check_flux_limiter() -> CheckResult:
    value = flux_limiter(0.0)
    return _check("flux_limiter_diffusion_limit", value == 1.0 / 3.0, f"lambda(0) = {value!r}")


def check_jacobi_2x2() -> CheckResult:
    runtime = Runtime(decompose((2,), (1,), halo_depth=1))
    try:
        x = runtime.register_field("x")
        op = StencilOperator(
            diag={0: np.full(2, 2.0)},
            low={(0, 0): np.array([0.0, 1.0])},
            high={(0, 0): np.array([1.0, 0.0])},
        )

        def body(ctx):
            return jacobi_solve(ctx, x, op, {0: np.array([3.0, 3.0])}, 1e-12, 500)

        runtime.wait(runtime.submit(body, [(x, RW)]))
        solution = runtime.gather(x)
    finally:
        runtime.close()
    err = float(np.abs(solution - 1.0).max())
    return _check("jacobi_2x2_system", err <= 1e-10, f"|x - (1,1)| = {err:.2e}")


def check_sod_vs_exact_riemann() -> CheckResult:
    cells = 200
    report = run_hydro(HydroConfig(scenario="sod", extents=(cells,), t_end=0.2))
    x = (np.arange(cells) + 0.5) / cells
    rho, _, _ = solution_profile(SOD_LEFT, SOD_RIGHT, 1.4, x, report.time, x0=0.5)
    l1 = float(np.abs(report.density - rho).mean())
    return _check("sod_vs_exact_riemann", l1 < 1e-2, f"L1 density error {l1:.2e}")


def check_collective_counters() -> CheckResult:
    details = []
    ok = True
    for ranks in (2, 4, 8, 16):
        star = Transport(ranks)
        allreduce(list(range(ranks)), "sum", STAR, star)
        tree = Transport(ranks)
        allreduce(list(range(ranks)), "sum", BINOMIAL_TREE, tree)
        root_ops = star.stats().coll_msg_ops[0]
        rounds = tree.stats().max_coll_rounds
        ok &= root_ops == 2 * (ranks - 1)
        ok &= rounds == 2 * math.ceil(math.log2(ranks))
        if ranks >= 4:
            ok &= star.stats().coll_rounds[0] > rounds
        details.append(f"P={ranks}: star {root_ops} ops, tree {rounds} rounds")
    return _check("collective_cost_model", ok, "; ".join(details))


def check_allreduce_agreement() -> CheckResult:
    values = list(np.random.RandomState(5).uniform(-3, 3, size=6))
    a = allreduce(values, "sum", STAR, Transport(6))
    b = allreduce(values, "sum", BINOMIAL_TREE, Transport(6))
    direct = values[0]
    for v in values[1:]:
        direct = direct + v
    return _check(
        "allreduce_bitwise_agreement", a == b == direct,
        f"star {a!r}, tree {b!r}, fold {direct!r}",
    )


ALL_CHECKS = (
    check_poisson_dense_oracle,
    check_poisson_residual_identity,
    check_weno_exactness,
    check_heun_scalar,
    check_flux_limiter,
    check_jacobi_2x2,
    check_sod_vs_exact_riemann,
    check_collective_counters,
    check_allreduce_agreement,
)


def run_all_checks() -> list[CheckResult]:
    return [check() for check in ALL_CHECKS]
