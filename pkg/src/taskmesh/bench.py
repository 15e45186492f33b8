"""Benchmark harness: barrier-free in-task timing, statistics, CSV emission.

Timing spans are captured inside task bodies (per rank and iteration) and
buffered without any added synchronization, so instrumentation changes
neither field contents nor the dependency graph.  A benchmark sweeps problem
size, strong-scaling, or weak-scaling configurations and writes one CSV row
per configuration point, carrying the aggregate statistics and the exact
communication counters of that run.

Aggregation mirrors the two applications' reporting styles: the Poisson app
averages all iteration samples and attaches the 95% confidence interval of
the mean (normal approximation); the hydrodynamics app reports the median of
per-run medians with min/max bars.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass

from . import poisson as poisson_app
from .executors import ASYNC_DAG, BINOMIAL_TREE, SEQUENTIAL, STAR, ExecutorConfig
from .hydro import HydroConfig, run_hydro

CSV_COLUMNS = (
    "app", "mode", "executor", "collective", "ranks", "workers",
    "global_size", "per_rank_size", "run", "metric", "value", "unit",
    "mean", "median", "min", "max", "ci95", "count",
    "p2p_msgs", "coll_msg_ops", "coll_rounds",
)

APPS = ("poisson", "hydro", "hydro_norad")
MODES = ("size_sweep", "strong", "weak")


@dataclass(frozen=True)
class TimingSample:
    """One wall-clock span captured inside a task body."""

    run: int
    iteration: int | None
    label: str
    rank: int | None
    start_ns: int
    stop_ns: int

    def __post_init__(self):
        if self.stop_ns < self.start_ns:
            raise ValueError("sample stops before it starts")

    @property
    def seconds(self) -> float:
        return (self.stop_ns - self.start_ns) * 1e-9


class SpanRecorder:
    """Thread-safe per-run buffer of timing samples.

    Attached to a runtime as ``runtime.recorder``; task bodies feed it
    through ``ctx.span``.  The control thread bumps ``run_index`` between
    runs, after the previous run has fully finished.
    """

    def __init__(self):
        self.run_index = 0
        self._lock = threading.Lock()
        self._samples: list[TimingSample] = []

    def add_span(self, label, rank, iteration, start_ns, stop_ns) -> None:
        sample = TimingSample(self.run_index, iteration, label, rank, start_ns, stop_ns)
        with self._lock:
            self._samples.append(sample)

    @property
    def samples(self) -> list[TimingSample]:
        with self._lock:
            return list(self._samples)


def timed_task(runtime, recorder: SpanRecorder, fn, accesses, label,
               iteration=None):
    """Submit ``fn`` wrapped with clock captures around its whole body.

    The wrapper records exactly one sample per execution and adds no
    accesses, edges, or collectives.
    """

    def wrapped(ctx):
        start = time.perf_counter_ns()
        try:
            return fn(ctx)
        finally:
            recorder.add_span(label, None, iteration, start, time.perf_counter_ns())

    return runtime.submit(wrapped, accesses, label=label)


@dataclass(frozen=True)
class StatSummary:
    mean: float
    median: float
    min: float
    max: float
    ci95: float  # half-width of the 95% CI of the mean, normal approximation
    count: int

    def __post_init__(self):
        if math.isnan(self.mean):  # error rows carry nan statistics
            return
        if not self.min <= self.median <= self.max:
            raise ValueError("summary ordering violated")
        if self.ci95 < 0.0:
            raise ValueError("negative confidence interval")


def summarize(values, aggregation: str = "mean") -> StatSummary:
    """All summary statistics of a sample set.

    ``aggregation`` names the headline statistic ("mean" or "median") a
    caller will report; every field is always filled.
    """
    if aggregation not in ("mean", "median"):
        raise ValueError(f"unknown aggregation {aggregation!r}")
    values = [float(v) for v in values]
    n = len(values)
    if n == 0:
        raise ValueError("cannot summarize an empty sample set")
    mean = sum(values) / n
    ordered = sorted(values)
    mid = n // 2
    median = ordered[mid] if n % 2 == 1 else (ordered[mid - 1] + ordered[mid]) / 2
    if n > 1:
        var = sum((v - mean) ** 2 for v in values) / (n - 1)
        ci = 1.96 * (var**0.5) / (n**0.5)
    else:
        ci = 0.0
    return StatSummary(mean, median, ordered[0], ordered[-1], ci, n)


def headline(summary: StatSummary, aggregation: str) -> float:
    return summary.mean if aggregation == "mean" else summary.median


@dataclass
class BenchConfig:
    app: str = "poisson"
    mode: str = "weak"
    executor: str = SEQUENTIAL
    collective: str = BINOMIAL_TREE
    ranks: tuple[int, ...] = (1, 2, 4)
    workers: int = 1
    size: int = 2**16  # total cells (strong/size_sweep) or cells per rank (weak)
    sweep_points: int = 4
    runs: int = 3
    iterations: int = 5
    warmup: int = 0
    output: str = "bench.csv"

    def __post_init__(self):
        if self.app not in APPS:
            raise ValueError(f"unknown app {self.app!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.executor not in (SEQUENTIAL, ASYNC_DAG):
            raise ValueError(f"unknown executor {self.executor!r}")
        if self.collective not in (STAR, BINOMIAL_TREE):
            raise ValueError(f"unknown collective {self.collective!r}")
        ranks = tuple(int(r) for r in self.ranks)
        if not ranks or list(ranks) != sorted(ranks):
            raise ValueError("rank list must be ascending and non-empty")
        self.ranks = ranks
        if self.runs < 1 or self.iterations < 1:
            raise ValueError("runs and iterations must be >= 1")


def factor_grid(count: int, dims: int) -> tuple[int, ...]:
    """Split a rank count into a near-uniform Cartesian color grid."""
    grid = [1] * dims
    remaining = count
    factor = 2
    while remaining > 1:
        while remaining % factor == 0:
            axis = grid.index(min(grid))
            grid[axis] *= factor
            remaining //= factor
        factor += 1
    return tuple(grid)


def square_extents(cells: int, dims: int) -> tuple[int, ...]:
    """Near-square integer extents with the requested cell count."""
    extents = [1] * dims
    remaining = cells
    while remaining > 1:
        axis = extents.index(min(extents))
        if remaining % 2 == 0:
            extents[axis] *= 2
            remaining //= 2
        else:
            extents[axis] *= remaining
            remaining = 1
    return tuple(sorted(extents, reverse=True))


@dataclass
class BenchPoint:
    ranks: int
    global_size: int
    per_rank_size: int
    extents: tuple[int, ...]
    color_grid: tuple[int, ...]


def config_points(config: BenchConfig) -> list[BenchPoint]:
    dims = 2 if config.app == "poisson" else 3
    points = []
    if config.mode == "size_sweep":
        for j in range(config.sweep_points):
            size = config.size * 2**j
            points.append(
                BenchPoint(1, size, size, square_extents(size, dims), (1,) * dims)
            )
        return points
    for ranks in config.ranks:
        grid = factor_grid(ranks, dims)
        if config.mode == "weak":
            per_rank = config.size
            block = square_extents(per_rank, dims)
            extents = tuple(b * g for b, g in zip(block, grid))
            global_size = per_rank * ranks
        else:  # strong: fixed global size
            global_size = config.size
            per_rank = global_size // ranks
            extents = square_extents(global_size, dims)
        points.append(BenchPoint(ranks, global_size, per_rank, extents, grid))
    return points


def _executor_config(config: BenchConfig, ranks: int) -> ExecutorConfig:
    return ExecutorConfig(
        kind=config.executor, ranks=ranks,
        workers_per_rank=config.workers, collective=config.collective,
    )


def _iteration_durations(samples, run, label="step"):
    """Per-(iteration, rank) total span seconds for one run."""
    sums: dict[tuple, float] = {}
    for s in samples:
        if s.run != run or s.label != label:
            continue
        key = (s.iteration, s.rank)
        sums[key] = sums.get(key, 0.0) + s.seconds
    return sums


def _run_point(config: BenchConfig, point: BenchPoint):
    """All timing values (grouped per run) and comm stats for one point."""
    recorder = SpanRecorder()
    per_run_values = []
    stats = None
    total_iters = config.iterations + config.warmup
    for run in range(config.runs):
        recorder.run_index = run
        executor = _executor_config(config, point.ranks)
        if config.app == "poisson":
            app_config = poisson_app.PoissonConfig(
                extents=point.extents, color_grid=point.color_grid,
                benchmark_mode=True,
            )
            report = poisson_app.run_poisson(
                app_config, executor, recorder=recorder, fixed_tasks=total_iters
            )
            label = "solve"
        else:
            app_config = HydroConfig(
                scenario="rankine_hugoniot", extents=point.extents,
                color_grid=point.color_grid, t_end=math.inf,
                radiation=(config.app == "hydro"), erad_profile="gaussian",
                benchmark_mode=True,
            )
            report = run_hydro(
                app_config, executor, recorder=recorder, fixed_steps=total_iters
            )
            label = "step"
        stats = report.comm_stats
        durations = _iteration_durations(recorder.samples, run, label)
        values = [
            seconds for (iteration, _rank), seconds in sorted(
                durations.items(), key=lambda kv: (kv[0][0] or 0, kv[0][1] or 0)
            )
            if iteration is not None and iteration >= config.warmup
        ]
        per_run_values.append(values)
    return per_run_values, stats


def _point_summary(config: BenchConfig, per_run_values):
    if config.app == "poisson":
        flat = [v for run in per_run_values for v in run]
        return summarize(flat, "mean"), "mean"
    run_medians = [summarize(run, "median").median for run in per_run_values]
    return summarize(run_medians, "median"), "median"


def format_row(values) -> str:
    return ",".join(str(v) for v in values)


def run_benchmark(config: BenchConfig) -> str:
    """Execute every configuration point and write the CSV; returns the path.

    Application output is disabled throughout; an infeasible point is
    reported as an ``error`` row and the sweep continues.
    """
    rows = [format_row(CSV_COLUMNS)]
    for point in config_points(config):
        base = [
            config.app, config.mode, config.executor, config.collective,
            point.ranks, config.workers, point.global_size, point.per_rank_size,
            config.runs,
        ]
        try:
            per_run_values, stats = _run_point(config, point)
            summary, aggregation = _point_summary(config, per_run_values)
        except (ValueError, RuntimeError) as err:
            nan = float("nan")
            rows.append(format_row(
                base + ["error", nan, str(err).replace(",", ";")]
                + [nan] * 5 + [0, 0, 0, 0]
            ))
            continue
        rows.append(format_row(
            base + [
                "iteration_time", repr(headline(summary, aggregation)), "s",
                repr(summary.mean), repr(summary.median), repr(summary.min),
                repr(summary.max), repr(summary.ci95), summary.count,
                stats.total_p2p_sends, sum(stats.coll_msg_ops),
                stats.max_coll_rounds,
            ]
        ))
    with open(config.output, "w", encoding="utf-8") as handle:
        handle.write("\n".join(rows) + "\n")
    return config.output


def parse_csv(path):
    """Rows of a benchmark CSV as dicts keyed by the fixed header."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    header = tuple(lines[0].split(","))
    if header != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header!r}")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        rows.append(dict(zip(header, parts)))
    return rows


def row_summary(row) -> StatSummary:
    return StatSummary(
        float(row["mean"]), float(row["median"]), float(row["min"]),
        float(row["max"]), float(row["ci95"]), int(row["count"]),
    )
