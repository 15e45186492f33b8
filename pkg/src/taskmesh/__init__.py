"""Desk-scale task runtime with privilege-inferred dependencies.

Structured-grid fields live on a block-decomposed topology; tasks declare
field accesses and the runtime infers the dependency DAG, refreshes ghost
layers through a simulated multi-rank transport, and executes under either a
sequential (in-order) or an asynchronous (DAG) engine.  Two bundled
applications (a red-black Gauss-Seidel Poisson solver and a radiation
hydrodynamics mini-app) and a scaling benchmark harness drive it.
"""

from .executors import (
    ASYNC_DAG,
    BINOMIAL_TREE,
    SEQUENTIAL,
    STAR,
    CommStats,
    ExecutorConfig,
    MessageEnvelope,
    TaskError,
    Transport,
    allreduce,
    exchange_ghosts,
    run_async,
    run_sequential,
)
from .runtime import (
    RO,
    RW,
    WO,
    FieldAccess,
    FieldHandle,
    Privilege,
    Runtime,
    TaskResult,
    infer_edges,
)
from .topology import (
    ExchangePlan,
    Interval,
    LocalBlock,
    MeshTopology,
    decompose,
    exchange_plan,
    local_block,
)

__version__ = "0.1.0"
