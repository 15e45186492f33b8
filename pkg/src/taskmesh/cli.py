"""Command-line entry point: benchmark sweeps, single app runs, validation."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import poisson as poisson_app
from .bench import BenchConfig, run_benchmark
from .executors import ExecutorConfig
from .hydro import SCENARIOS, HydroConfig, run_hydro
from .kvconfig import read_config_file
from .validation import run_all_checks


def _parse_ranks(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part)


def _parse_extents(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.replace("x", ",").split(",") if part)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taskmesh",
        description=(
            "Task-runtime mini-apps: scaling benchmarks, single runs, and "
            "oracle validation."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run a scaling benchmark and write a CSV")
    bench.add_argument("--app", choices=("poisson", "hydro", "hydro_norad"),
                       default="poisson")
    bench.add_argument("--mode", choices=("size_sweep", "strong", "weak"),
                       default="weak")
    bench.add_argument("--executor", choices=("sequential", "async"),
                       default="sequential")
    bench.add_argument("--collective", choices=("star", "tree"), default="tree")
    bench.add_argument("--ranks", type=_parse_ranks, default=(1, 2, 4),
                       help="comma-separated ascending rank list")
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--size", type=int, default=None,
                       help="total cells (strong / size_sweep)")
    bench.add_argument("--size-per-rank", type=int, default=None,
                       help="cells per rank (weak mode)")
    bench.add_argument("--sweep-points", type=int, default=4)
    bench.add_argument("--runs", type=int, default=3)
    bench.add_argument("--iterations", type=int, default=5)
    bench.add_argument("--warmup", type=int, default=0)
    bench.add_argument("--output", default="bench.csv")
    bench.add_argument("--config", default=None,
                       help="key=value file; its entries override flags")

    run = sub.add_parser("run", help="run one application and write its state")
    run.add_argument("--app", choices=("poisson", "hydro"), required=True)
    run.add_argument("--scenario", choices=SCENARIOS, default="sod")
    run.add_argument("--cells", type=int, default=None,
                     help="1D cell count shorthand for --extents")
    run.add_argument("--extents", type=_parse_extents, default=None,
                     help="grid extents, e.g. 64x64")
    run.add_argument("--color-grid", type=_parse_extents, default=None)
    run.add_argument("--executor", choices=("sequential", "async"),
                     default="sequential")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--collective", choices=("star", "tree"), default="tree")
    run.add_argument("--end-time", type=float, default=0.2)
    run.add_argument("--cfl", type=float, default=0.5)
    run.add_argument("--gamma", type=float, default=1.4)
    run.add_argument("--radiation", action="store_true")
    run.add_argument("--kappa", type=float, default=1.0)
    run.add_argument("--tolerance", type=float, default=1e-8)
    run.add_argument("--max-tasks", type=int, default=400)
    run.add_argument("--benchmark", action="store_true",
                     help="disable state output")
    run.add_argument("--output", default=None)
    run.add_argument("--config", default=None,
                     help="key=value file; its entries override flags")

    sub.add_parser("validate", help="run the oracle test scenarios")
    return parser


def _apply_config_file(args: argparse.Namespace) -> None:
    if getattr(args, "config", None) is None:
        return
    for key, value in read_config_file(args.config).items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise SystemExit(f"unknown config key {key!r} in {args.config}")
        if attr in ("ranks", "extents", "color_grid") and isinstance(value, int):
            value = (value,)
        setattr(args, attr, value)


def _cmd_bench(args) -> int:
    size = args.size
    if args.mode == "weak":
        size = args.size_per_rank or size
        if size is None:
            raise SystemExit("weak mode needs --size-per-rank")
    elif size is None:
        size = 2**16
    config = BenchConfig(
        app=args.app, mode=args.mode, executor=args.executor,
        collective=args.collective, ranks=tuple(args.ranks),
        workers=args.workers, size=size, sweep_points=args.sweep_points,
        runs=args.runs, iterations=args.iterations, warmup=args.warmup,
        output=args.output,
    )
    path = run_benchmark(config)
    print(f"wrote {path}")
    return 0


def _write_poisson_state(report, extents, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("i,j,x,y,p\n")
        nx, ny = extents
        for i in range(nx):
            for j in range(ny):
                x = (i + 0.5) / nx
                y = (j + 0.5) / ny
                handle.write(f"{i},{j},{x!r},{y!r},{float(report.solution[i, j])!r}\n")


def _write_hydro_state(report, extents, lengths, path) -> None:
    dims = len(extents)
    spacing = [L / n for L, n in zip(lengths, extents)]
    with open(path, "w", encoding="utf-8") as handle:
        coords = ",".join("xyz"[:dims])
        vels = ",".join(f"u_{a}" for a in range(dims))
        erad = ",erad" if report.erad is not None else ""
        handle.write(f"index,{coords},rho,{vels},pressure{erad}\n")
        for idx in np.ndindex(*extents):
            pos = ",".join(repr((i + 0.5) * s) for i, s in zip(idx, spacing))
            vals = [repr(float(report.density[idx]))]
            vals += [repr(float(v[idx])) for v in report.velocities]
            vals.append(repr(float(report.pressure[idx])))
            if report.erad is not None:
                vals.append(repr(float(report.erad[idx])))
            flat = "-".join(str(i) for i in idx)
            handle.write(f"{flat},{pos},{','.join(vals)}\n")


def _cmd_run(args) -> int:
    executor_kwargs = dict(
        kind=args.executor, workers_per_rank=args.workers,
        collective=args.collective,
    )
    if args.app == "poisson":
        extents = args.extents or ((args.cells, args.cells) if args.cells else (64, 64))
        color_grid = args.color_grid or (1,) * len(extents)
        config = poisson_app.PoissonConfig(
            extents=extents, color_grid=color_grid, tolerance=args.tolerance,
            max_solve_tasks=args.max_tasks, benchmark_mode=args.benchmark,
        )
        ranks = int(np.prod(color_grid))
        report = poisson_app.run_poisson(
            config, ExecutorConfig(ranks=ranks, **executor_kwargs)
        )
        print(
            f"poisson {extents[0]}x{extents[1]}: {report.solve_tasks} solve tasks, "
            f"converged={report.converged}, "
            f"final residual {report.residual_history[-1]:.3e}"
        )
        if report.error_linf is not None:
            print(f"L-inf error vs exact solution: {report.error_linf:.3e}")
        if not args.benchmark:
            path = args.output or "poisson_state.csv"
            _write_poisson_state(report, extents, path)
            print(f"wrote {path}")
        return 0

    extents = args.extents or ((args.cells,) if args.cells else None)
    config = HydroConfig(
        scenario=args.scenario, extents=extents or (),
        color_grid=args.color_grid or (), gamma=args.gamma, cfl=args.cfl,
        t_end=args.end_time, radiation=args.radiation, kappa=args.kappa,
        benchmark_mode=args.benchmark,
    )
    ranks = int(np.prod(config.color_grid))
    report = run_hydro(config, ExecutorConfig(ranks=ranks, **executor_kwargs))
    print(
        f"hydro {args.scenario} {config.extents}: {report.steps} steps "
        f"to t={report.time:.4f}"
    )
    if not args.benchmark:
        path = args.output or "hydro_state.csv"
        _write_hydro_state(report, config.extents, config.lengths, path)
        print(f"wrote {path}")
    return 0


def _cmd_validate(_args) -> int:
    results = run_all_checks()
    width = max(len(r.name) for r in results)
    failed = 0
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{result.name:<{width}}  {status}  {result.detail}")
        failed += not result.passed
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config_file(args)
    if args.command == "bench":
        return _cmd_bench(args)
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_validate(args)


if __name__ == "__main__":
    sys.exit(main())
