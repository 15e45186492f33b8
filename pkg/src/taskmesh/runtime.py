"""Fields, access privileges, and implicit task-dependency construction.

Tasks declare which fields they touch and with what privilege; dependency
edges are inferred from those declarations, never written by hand.  A read
depends on the last writer of the field; a write additionally depends on every
reader since that writer (anti-dependencies), with the dominated writer-writer
edge pruned so the edge set stays transitively reduced.

Ghost layers are refreshed automatically: before a task that reads a field
whose owned cells changed since the last exchange, the runtime replays the
topology's exchange plan through the transport.  Declaring ``WRITE_DISCARD``
skips that refresh, mirroring write-only privilege semantics: prior contents
are neither preserved nor transferred, and the task is trusted (by convention,
not checked) to fully define whatever it reads later.

Reductions combine per-color contributions in ascending color order, which
makes results bitwise reproducible across executors.
"""

from __future__ import annotations

import itertools
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field as dataclass_field
from enum import Enum

import numpy as np

from . import executors
from .executors import ExecutorConfig, TaskError, Transport
from .topology import MeshTopology, exchange_plan, local_block

_REDUCE_CHUNKS = 16  # fixed chunk count keeps reductions worker-count independent


class Privilege(Enum):
    READ_ONLY = "ro"
    WRITE_DISCARD = "wo"
    READ_WRITE = "rw"


RO = Privilege.READ_ONLY
WO = Privilege.WRITE_DISCARD
RW = Privilege.READ_WRITE


@dataclass(frozen=True)
class FieldHandle:
    fid: int
    name: str
    components: int = 1


@dataclass(frozen=True)
class FieldAccess:
    field: FieldHandle
    privilege: Privilege


@dataclass
class FieldHistory:
    """Per-field slice of the submission-ordered access history."""

    last_writer: int | None = None
    readers_since: list[int] = dataclass_field(default_factory=list)


def infer_edges(history: dict[int, FieldHistory], accesses) -> frozenset[int]:
    """Dependency edges (predecessor task ids) implied by declared accesses.

    Readers depend on the last writer.  Writers depend on every reader since
    the last writer, or on the writer itself when nothing read in between
    (the writer-writer edge is dominated otherwise and dropped).
    """
    edges: set[int] = set()
    for access in accesses:
        h = history.get(access.field.fid)
        if h is None:
            continue
        if access.privilege is Privilege.READ_ONLY:
            if h.last_writer is not None:
                edges.add(h.last_writer)
        else:
            if h.readers_since:
                edges.update(h.readers_since)
            elif h.last_writer is not None:
                edges.add(h.last_writer)
    return frozenset(edges)


class _FieldStore:
    def __init__(self, handle: FieldHandle, arrays):
        self.handle = handle
        self.arrays = arrays
        self.lock = threading.Lock()
        self.ghost_epoch = 0  # bumped when a writer task completes
        self.exchanged_epoch = 0


class TaskResult:
    """Deferred handle to a task's completion and reduction value.

    Resolves exactly once; waiting after resolution returns the cached value
    (or re-raises its failure).
    """

    def __init__(self, runtime: "Runtime", node: "_TaskNode"):
        self._runtime = runtime
        self._node = node

    @property
    def task_id(self) -> int:
        return self._node.index

    @property
    def done(self) -> bool:
        return self._node.done

    def wait(self):
        self._runtime._engine.wait_for(self._node)
        if self._node.error is not None:
            raise self._node.error
        return self._node.value


class _TaskNode:
    __slots__ = (
        "index", "label", "accesses", "fn", "runtime", "edges",
        "done", "value", "error", "remaining", "dependents",
    )

    def __init__(self, index, label, accesses, fn, runtime, edges):
        self.index = index
        self.label = label
        self.accesses = accesses
        self.fn = fn
        self.runtime = runtime
        self.edges = edges
        self.done = False
        self.value = None
        self.error = None
        self.remaining = 0
        self.dependents = []

    def execute(self) -> None:
        start = time.perf_counter_ns()
        try:
            self.runtime._auto_exchange(self.accesses)
            value = self.fn(TaskContext(self.runtime, self))
        except BaseException as exc:
            err = exc if isinstance(exc, TaskError) else TaskError(
                self.index, self.label, exc
            )
            self.error = err
            self.runtime._log_execution(self, start)
            self.done = True
            raise err
        # Writers invalidate ghost layers before dependents are released.
        for access in self.accesses:
            if access.privilege is not Privilege.READ_ONLY:
                store = self.runtime._stores[access.field.fid]
                with store.lock:
                    store.ghost_epoch += 1
        self.value = value
        self.runtime._log_execution(self, start)
        self.done = True

    def cancel(self, err: TaskError) -> None:
        self.error = err
        self.done = True


class TaskContext:
    """Handed to a task body; the only sanctioned window onto field storage."""

    def __init__(self, runtime: "Runtime", node: _TaskNode):
        self._runtime = runtime
        self._node = node
        self._declared = {a.field.fid: a for a in node.accesses}

    @property
    def colors(self) -> range:
        return range(self._runtime.topology.n_colors)

    @property
    def topology(self) -> MeshTopology:
        return self._runtime.topology

    def block(self, color: int):
        return self._runtime.blocks[color]

    def local(self, handle: FieldHandle, color: int) -> np.ndarray:
        """Full local array of one color, halo layers included."""
        self._check_declared(handle)
        return self._runtime._stores[handle.fid].arrays[color]

    def owned(self, handle: FieldHandle, color: int) -> np.ndarray:
        block = self._runtime.blocks[color]
        return self.local(handle, color)[block.owned_slices()]

    def exchange(self, handle: FieldHandle) -> None:
        """Refresh ghost layers of ``handle`` from current owned values."""
        self._check_declared(handle)
        self._runtime._do_exchange(self._runtime._stores[handle.fid])

    def allreduce(self, contributions, op: str):
        """Reduce one contribution per color; identical result on every rank."""
        rt = self._runtime
        return executors.allreduce(
            list(contributions), op, rt.config.collective, rt.transport
        )

    def for_each_cell(self, color: int, bindings: dict, kernel, reduce: str | None = None):
        """Apply ``kernel(local_index, fields)`` to every owned cell.

        The kernel must touch one cell per invocation, independently of other
        cells, so chunks may run on the configured data-parallel workers.
        Reductions fold a fixed chunk decomposition in ascending order, making
        the result independent of worker count.
        """
        fields = {}
        for name, handle in bindings.items():
            self._check_declared(handle)
            fields[name] = self._runtime._stores[handle.fid].arrays[color]
        block = self._runtime.blocks[color]
        h = block.halo_depth
        cells = list(
            itertools.product(*[range(h, h + iv.size) for iv in block.owned])
        )
        chunk_count = min(_REDUCE_CHUNKS, len(cells)) or 1
        bounds = np.linspace(0, len(cells), chunk_count + 1).astype(int)
        chunks = [cells[bounds[i] : bounds[i + 1]] for i in range(chunk_count)]

        if reduce is None:
            def run_chunk(chunk):
                for idx in chunk:
                    kernel(idx, fields)
        else:
            if reduce not in ("sum", "min", "max"):
                raise ValueError(f"unsupported reduction {reduce!r}")

            def run_chunk(chunk):
                partial = None
                for idx in chunk:
                    v = kernel(idx, fields)
                    if partial is None:
                        partial = v
                    elif reduce == "sum":
                        partial = partial + v
                    elif reduce == "min":
                        partial = v if v < partial else partial
                    else:
                        partial = v if v > partial else partial
                return partial

        workers = self._runtime.config.workers_per_rank
        if workers == 1:
            partials = [run_chunk(c) for c in chunks]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                partials = list(pool.map(run_chunk, chunks))
        if reduce is None:
            return None
        partials = [p for p in partials if p is not None]
        if not partials:
            return None
        acc = partials[0]
        for p in partials[1:]:
            if reduce == "sum":
                acc = acc + p
            elif reduce == "min":
                acc = p if p < acc else acc
            else:
                acc = p if p > acc else acc
        return acc

    @contextmanager
    def span(self, label: str, color: int | None = None, iteration: int | None = None):
        """Record a barrier-free wall-clock span when benchmarking is on."""
        recorder = self._runtime.recorder
        if recorder is None:
            yield
            return
        start = time.perf_counter_ns()
        try:
            yield
        finally:
            recorder.add_span(label, color, iteration, start, time.perf_counter_ns())

    def _check_declared(self, handle: FieldHandle) -> None:
        access = self._declared.get(handle.fid)
        if access is None or access.field != handle:
            raise RuntimeError(
                f"task {self._node.index} did not declare access to field "
                f"{handle.name!r}"
            )


class Runtime:
    """Owns field storage, the task graph, the transport, and one engine.

    Submission happens on a single control thread; execution may be
    concurrent.  Field storage is partitioned per color and a task touches a
    color's arrays only through its :class:`TaskContext`, so cell data needs
    no locking.
    """

    def __init__(self, topology: MeshTopology, config: ExecutorConfig | None = None):
        if config is None:
            config = ExecutorConfig(ranks=topology.n_colors)
        if config.ranks != topology.n_colors:
            raise ValueError(
                f"config declares {config.ranks} ranks but the topology has "
                f"{topology.n_colors} colors"
            )
        self.topology = topology
        self.config = config
        self.blocks = [local_block(topology, c) for c in range(topology.n_colors)]
        self.plan = exchange_plan(topology)
        self.transport = Transport(config.ranks)
        self.recorder = None  # bench module attaches a span recorder here
        self._engine = executors.make_engine(config)
        self._stores: dict[int, _FieldStore] = {}
        self._names: set[str] = set()
        self._history: dict[int, FieldHistory] = {}
        self._edges: dict[int, frozenset[int]] = {}
        self._labels: dict[int, str | None] = {}
        self._next_task = 0
        self._next_field = 0
        self._log: list[tuple[int, int, int]] = []
        self._log_lock = threading.Lock()

    # ------------------------------------------------------------------ fields

    def register_field(self, name: str, components: int = 1) -> FieldHandle:
        """Allocate zero-initialized per-color storage (owned + halo cells)."""
        if name in self._names:
            raise ValueError(f"field {name!r} already registered")
        if components < 1:
            raise ValueError("components must be >= 1")
        handle = FieldHandle(self._next_field, name, components)
        self._next_field += 1
        arrays = []
        for block in self.blocks:
            shape = block.local_shape
            if components > 1:
                shape = shape + (components,)
            arrays.append(np.zeros(shape, dtype=np.float64))
        self._names.add(name)
        self._stores[handle.fid] = _FieldStore(handle, arrays)
        return handle

    # ------------------------------------------------------------------- tasks

    def submit(self, fn, accesses, label: str | None = None) -> TaskResult:
        """Append a task to the program order; never blocks on execution."""
        normalized = self._normalize_accesses(accesses)
        index = self._next_task
        self._next_task += 1
        edges = infer_edges(self._history, normalized)
        for access in normalized:
            h = self._history.setdefault(access.field.fid, FieldHistory())
            if access.privilege is Privilege.READ_ONLY:
                h.readers_since.append(index)
            else:
                h.last_writer = index
                h.readers_since = []
        node = _TaskNode(index, label, normalized, fn, self, edges)
        self._edges[index] = edges
        self._labels[index] = label
        self._engine.add(node)
        return TaskResult(self, node)

    def wait(self, result: TaskResult):
        """Block until ``result`` resolves; returns the reduction value."""
        return result.wait()

    def finish(self) -> None:
        """Run every submitted task to completion."""
        self._engine.drain()

    def close(self) -> None:
        self._engine.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # ------------------------------------------------------------- observation

    def comm_stats(self):
        return self.transport.stats()

    def reset_comm_stats(self) -> None:
        self.transport.reset_stats()

    def edges(self) -> dict[int, frozenset[int]]:
        return dict(self._edges)

    def execution_log(self) -> list[tuple[int, int, int]]:
        """Completed (task_id, start_ns, end_ns) records."""
        with self._log_lock:
            return list(self._log)

    def gather(self, handle: FieldHandle) -> np.ndarray:
        """Assemble the global owned array (control-plane use, after finish)."""
        shape = self.topology.global_extents
        if handle.components > 1:
            shape = shape + (handle.components,)
        out = np.zeros(shape, dtype=np.float64)
        store = self._stores[handle.fid]
        for color, block in enumerate(self.blocks):
            dest = tuple(slice(iv.lo, iv.hi) for iv in block.owned)
            out[dest] = store.arrays[color][block.owned_slices()]
        return out

    # --------------------------------------------------------------- internals

    def _normalize_accesses(self, accesses):
        normalized = []
        seen = set()
        for entry in accesses:
            if isinstance(entry, FieldAccess):
                access = entry
            else:
                handle, privilege = entry
                if not isinstance(privilege, Privilege):
                    privilege = Privilege(privilege)
                access = FieldAccess(handle, privilege)
            store = self._stores.get(access.field.fid)
            if store is None or store.handle != access.field:
                raise ValueError(f"unknown field handle {access.field!r}")
            if access.field.fid in seen:
                raise ValueError(
                    f"duplicate access to field {access.field.name!r}"
                )
            seen.add(access.field.fid)
            normalized.append(access)
        return tuple(normalized)

    def _auto_exchange(self, accesses) -> None:
        for access in accesses:
            if access.privilege is Privilege.WRITE_DISCARD:
                continue
            self._do_exchange(self._stores[access.field.fid], only_stale=True)

    def _do_exchange(self, store: _FieldStore, only_stale: bool = False) -> None:
        with store.lock:
            if only_stale and store.exchanged_epoch >= store.ghost_epoch:
                return
            executors.exchange_ghosts(
                store.arrays, self.blocks, self.plan, self.transport,
                tag=("ghost", store.handle.fid),
            )
            store.exchanged_epoch = store.ghost_epoch

    def _log_execution(self, node: _TaskNode, start_ns: int) -> None:
        with self._log_lock:
            self._log.append((node.index, start_ns, time.perf_counter_ns()))
