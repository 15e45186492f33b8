"""Execution engines and the simulated multi-rank transport.

Ranks are simulated inside one process as isolated per-color storage that
communicates only through :class:`Transport` mailboxes, so both engines
exercise identical communication paths.  Costs are modeled by exact message
and round counting rather than simulated wall-clock time, which keeps the
collective-bottleneck comparison deterministic.

Two interchangeable engines drive task execution:

* :class:`SequentialEngine` runs tasks strictly in submission order
  (bulk-synchronous analogue of an MPI-style backend).
* :class:`AsyncDagEngine` runs tasks as soon as their dependency edges
  resolve, dispatching ready tasks FIFO by submission index to a fixed
  worker pool, so independent tasks overlap in time.
"""

from __future__ import annotations

import heapq
import math
import threading
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .topology import ExchangePlan, LocalBlock

SEQUENTIAL = "sequential"
ASYNC_DAG = "async"
STAR = "star"
BINOMIAL_TREE = "tree"

_REDUCE_OPS = {
    "sum": lambda a, b: a + b,
    "max": lambda a, b: a if a >= b else b,
    "min": lambda a, b: a if a <= b else b,
}


@dataclass(frozen=True)
class ExecutorConfig:
    """Run configuration: engine kind, simulated ranks, workers, collectives."""

    kind: str = SEQUENTIAL
    ranks: int = 1
    workers_per_rank: int = 1
    collective: str = BINOMIAL_TREE

    def __post_init__(self):
        if self.kind not in (SEQUENTIAL, ASYNC_DAG):
            raise ValueError(f"unknown executor kind {self.kind!r}")
        if self.collective not in (STAR, BINOMIAL_TREE):
            raise ValueError(f"unknown collective algorithm {self.collective!r}")
        if self.ranks < 1:
            raise ValueError("ranks must be >= 1")
        if self.workers_per_rank < 1:
            raise ValueError("workers_per_rank must be >= 1")


@dataclass(frozen=True)
class MessageEnvelope:
    source: int
    dest: int
    tag: object
    payload: object


@dataclass
class CommStats:
    """Exact per-rank communication counters.

    ``coll_msg_ops`` counts messages sent plus received by a rank during
    collectives; ``coll_rounds`` counts the sequential communication steps on
    that rank's critical path.
    """

    p2p_sends: list[int] = field(default_factory=list)
    coll_msg_ops: list[int] = field(default_factory=list)
    coll_rounds: list[int] = field(default_factory=list)

    @property
    def total_p2p_sends(self) -> int:
        return sum(self.p2p_sends)

    @property
    def total_coll_messages(self) -> int:
        # every collective message is counted once at each endpoint
        return sum(self.coll_msg_ops) // 2

    @property
    def max_coll_rounds(self) -> int:
        return max(self.coll_rounds, default=0)


class TransportError(RuntimeError):
    pass


class Transport:
    """In-process mailboxes with exactly-once, per-(src, dst, tag) FIFO delivery.

    Safe for concurrent use by all rank workers; counters are updated under a
    lock so totals stay exact no matter how tasks interleave.
    """

    def __init__(self, ranks: int):
        if ranks < 1:
            raise ValueError("transport needs at least one rank")
        self.ranks = ranks
        self._lock = threading.Lock()
        self._queues: dict[tuple, deque] = {}
        self._coll_seq = 0
        self.reset_stats()

    def reset_stats(self) -> None:
        with self._lock:
            self._p2p_sends = [0] * self.ranks
            self._coll_ops = [0] * self.ranks
            self._coll_rounds = [0] * self.ranks

    def stats(self) -> CommStats:
        with self._lock:
            return CommStats(
                list(self._p2p_sends), list(self._coll_ops), list(self._coll_rounds)
            )

    def new_collective_tag(self) -> tuple:
        with self._lock:
            self._coll_seq += 1
            return ("collective", self._coll_seq)

    def send(self, source: int, dest: int, tag, payload, collective: bool = False):
        self._check_rank(source)
        self._check_rank(dest)
        envelope = MessageEnvelope(source, dest, tag, payload)
        with self._lock:
            self._queues.setdefault((source, dest, tag), deque()).append(envelope)
            if collective:
                self._coll_ops[source] += 1
                self._coll_ops[dest] += 1
            else:
                self._p2p_sends[source] += 1

    def recv(self, source: int, dest: int, tag, collective: bool = False):
        with self._lock:
            queue = self._queues.get((source, dest, tag))
            if not queue:
                raise TransportError(
                    f"no message from rank {source} to rank {dest} with tag {tag!r}"
                )
            envelope = queue.popleft()
        return envelope.payload

    def add_rounds(self, rank: int, count: int = 1) -> None:
        with self._lock:
            self._coll_rounds[rank] += count

    def _check_rank(self, rank: int) -> None:
        if not 0 <= rank < self.ranks:
            raise TransportError(f"rank {rank} outside [0, {self.ranks})")


def exchange_ghosts(arrays, blocks, plan: ExchangePlan, transport: Transport, tag):
    """Fill every ghost cell from its owner's current owned values.

    ``arrays`` holds one local array per color (cell axes first, optional
    component axis last).  All sends are posted before any receive so the
    transport carries real payload copies rather than aliased views.
    """
    for t in plan.transfers:
        src = _transfer_slices(blocks[t.send_color], blocks[t.recv_color], t, send=True)
        transport.send(
            t.send_color, t.recv_color, (tag, t.axis, t.side, t.raw.lo),
            np.copy(arrays[t.send_color][src]),
        )
    for t in plan.transfers:
        dst = _transfer_slices(blocks[t.send_color], blocks[t.recv_color], t, send=False)
        payload = transport.recv(
            t.send_color, t.recv_color, (tag, t.axis, t.side, t.raw.lo)
        )
        arrays[t.recv_color][dst] = payload


def _transfer_slices(send_block: LocalBlock, recv_block: LocalBlock, t, send: bool):
    slices = []
    block = send_block if send else recv_block
    origin = block.local_origin
    for axis in range(len(block.owned)):
        if axis == t.axis:
            iv = t.interval if send else t.raw
        else:
            iv = recv_block.owned[axis]
        slices.append(slice(iv.lo - origin[axis], iv.hi - origin[axis]))
    return tuple(slices)


def allreduce(contributions, op: str, algorithm: str, transport: Transport):
    """Reduce one contribution per rank; every rank ends with the same value.

    Contributions always combine in ascending rank order, so the result is
    bitwise identical for both algorithms and any rank count.  ``star`` routes
    everything through rank 0 (2(P-1) message ops and rounds at the root);
    ``tree`` reduces up and broadcasts down a binomial tree (max per-rank
    rounds 2*ceil(log2 P)).
    """
    ranks = transport.ranks
    if len(contributions) != ranks:
        raise ValueError(
            f"collective mismatch: {len(contributions)} contributions for "
            f"{ranks} ranks"
        )
    if op not in _REDUCE_OPS:
        raise ValueError(f"unknown reduction op {op!r}")
    if algorithm not in (STAR, BINOMIAL_TREE):
        raise ValueError(f"unknown collective algorithm {algorithm!r}")
    if ranks == 1:
        return contributions[0]
    tag = transport.new_collective_tag()
    if algorithm == STAR:
        return _allreduce_star(list(contributions), op, transport, tag)
    return _allreduce_tree(list(contributions), op, transport, tag)


def _fold(values, op):
    combine = _REDUCE_OPS[op]
    acc = values[0]
    for v in values[1:]:
        acc = combine(acc, v)
    return acc


def _allreduce_star(contributions, op, transport, tag):
    ranks = transport.ranks
    for r in range(1, ranks):
        transport.send(r, 0, tag, contributions[r], collective=True)
        transport.add_rounds(r)
    gathered = [contributions[0]]
    for r in range(1, ranks):
        gathered.append(transport.recv(r, 0, tag, collective=True))
        transport.add_rounds(0)
    result = _fold(gathered, op)
    for r in range(1, ranks):
        transport.send(0, r, tag, result, collective=True)
        transport.add_rounds(0)
    for r in range(1, ranks):
        transport.recv(0, r, tag, collective=True)
        transport.add_rounds(r)
    return result


def _allreduce_tree(contributions, op, transport, tag):
    ranks = transport.ranks
    # Reduce toward rank 0; each node accumulates (rank, value) pairs so the
    # final fold happens once, in ascending rank order.
    held = {r: [(r, contributions[r])] for r in range(ranks)}
    distance = 1
    while distance < ranks:
        for r in range(0, ranks, 2 * distance):
            peer = r + distance
            if peer >= ranks:
                continue
            transport.send(peer, r, tag, held.pop(peer), collective=True)
            transport.add_rounds(peer)
            held[r] = held[r] + transport.recv(peer, r, tag, collective=True)
            transport.add_rounds(r)
        distance *= 2
    entries = sorted(held[0])
    result = _fold([v for _, v in entries], op)
    # Broadcast back down the same tree.
    distance //= 2
    while distance >= 1:
        for r in range(0, ranks, 2 * distance):
            peer = r + distance
            if peer >= ranks:
                continue
            transport.send(r, peer, tag, result, collective=True)
            transport.add_rounds(r)
            transport.recv(r, peer, tag, collective=True)
            transport.add_rounds(peer)
        distance //= 2
    return result


def star_root_message_ops(ranks: int) -> int:
    return 2 * (ranks - 1)


def tree_max_rounds(ranks: int) -> int:
    return 0 if ranks == 1 else 2 * math.ceil(math.log2(ranks))


class TaskError(RuntimeError):
    """A task body raised; carries the failing task id."""

    def __init__(self, task_id: int, label, cause: BaseException):
        name = f" ({label})" if label else ""
        super().__init__(f"task {task_id}{name} failed: {cause}")
        self.task_id = task_id
        self.cause = cause


class SequentialEngine:
    """Runs tasks lazily in submission order; waiting drives execution."""

    def __init__(self):
        self._pending = deque()
        self.failure: TaskError | None = None

    def add(self, node) -> None:
        assert all(e < node.index for e in node.edges), "cycle in task graph"
        self._pending.append(node)

    def wait_for(self, node) -> None:
        while not node.done:
            if not self._pending:
                raise RuntimeError("waiting on a task that was never scheduled")
            self._step()

    def drain(self) -> None:
        while self._pending:
            self._step()
        self._raise_if_failed()

    def shutdown(self) -> None:
        self._pending.clear()

    def _step(self) -> None:
        node = self._pending.popleft()
        try:
            node.execute()
        except TaskError as err:
            self.failure = err
            for pending in self._pending:
                pending.cancel(err)
            self._pending.clear()

    def _raise_if_failed(self) -> None:
        if self.failure is not None:
            raise self.failure


class AsyncDagEngine:
    """Dependency-driven engine over a fixed pool of worker threads."""

    def __init__(self, workers: int):
        self._cv = threading.Condition()
        self._ready: list[tuple[int, object]] = []
        self._nodes: dict[int, object] = {}
        self._unfinished = 0
        self._stop = False
        self.failure: TaskError | None = None
        self._workers = [
            threading.Thread(target=self._worker, daemon=True, name=f"taskmesh-w{i}")
            for i in range(workers)
        ]
        for w in self._workers:
            w.start()

    def add(self, node) -> None:
        assert all(e < node.index for e in node.edges), "cycle in task graph"
        with self._cv:
            if self.failure is not None:
                node.cancel(self.failure)
                return
            node.remaining = 0
            node.dependents = []
            for e in node.edges:
                pred = self._nodes.get(e)
                if pred is not None and not pred.done:
                    pred.dependents.append(node)
                    node.remaining += 1
            self._nodes[node.index] = node
            self._unfinished += 1
            if node.remaining == 0:
                heapq.heappush(self._ready, (node.index, node))
            self._cv.notify_all()

    def wait_for(self, node) -> None:
        with self._cv:
            self._cv.wait_for(lambda: node.done)

    def drain(self) -> None:
        with self._cv:
            self._cv.wait_for(lambda: self._unfinished == 0 or self.failure is not None)
            if self.failure is not None:
                raise self.failure

    def shutdown(self) -> None:
        with self._cv:
            self._stop = True
            self._cv.notify_all()
        for w in self._workers:
            w.join(timeout=5.0)

    def _worker(self) -> None:
        while True:
            with self._cv:
                self._cv.wait_for(lambda: self._ready or self._stop)
                if self._stop and not self._ready:
                    return
                _, node = heapq.heappop(self._ready)
            try:
                node.execute()
            except TaskError as err:
                with self._cv:
                    self.failure = err
                    for other in self._nodes.values():
                        if not other.done:
                            other.cancel(err)
                    self._unfinished = 0
                    self._ready.clear()
                    self._cv.notify_all()
                continue
            with self._cv:
                for dependent in node.dependents:
                    dependent.remaining -= 1
                    if dependent.remaining == 0:
                        heapq.heappush(self._ready, (dependent.index, dependent))
                self._unfinished -= 1
                self._cv.notify_all()


def make_engine(config: ExecutorConfig):
    if config.kind == SEQUENTIAL:
        return SequentialEngine()
    return AsyncDagEngine(config.workers_per_rank)


def run_sequential(program, topology, config: ExecutorConfig | None = None) -> CommStats:
    """Run ``program(runtime)`` under the in-order engine; returns comm stats."""
    cfg = config or ExecutorConfig(ranks=topology.n_colors)
    cfg = ExecutorConfig(SEQUENTIAL, cfg.ranks, cfg.workers_per_rank, cfg.collective)
    return _run(program, topology, cfg)


def run_async(program, topology, config: ExecutorConfig | None = None) -> CommStats:
    """Run ``program(runtime)`` under the DAG engine; returns comm stats."""
    cfg = config or ExecutorConfig(ranks=topology.n_colors)
    cfg = ExecutorConfig(ASYNC_DAG, cfg.ranks, cfg.workers_per_rank, cfg.collective)
    return _run(program, topology, cfg)


def _run(program, topology, config: ExecutorConfig) -> CommStats:
    from .runtime import Runtime

    runtime = Runtime(topology, config)
    try:
        program(runtime)
        runtime.finish()
        return runtime.comm_stats()
    finally:
        runtime.close()
