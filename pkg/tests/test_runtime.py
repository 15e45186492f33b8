import numpy as np
import pytest

from taskmesh import (
    ExecutorConfig,
    FieldAccess,
    FieldHandle,
    Runtime,
    TaskError,
    decompose,
    infer_edges,
)
from taskmesh.runtime import RO, RW, WO, FieldHistory


@pytest.fixture
def runtime():
    rt = Runtime(decompose((8, 8), (2, 2), halo_depth=1))
    yield rt
    rt.close()


def access(fid, privilege):
    return FieldAccess(FieldHandle(fid, f"f{fid}"), privilege)


class TestInferEdges:
    def test_reader_depends_on_last_writer(self):
        history = {0: FieldHistory(last_writer=0)}
        assert infer_edges(history, [access(0, RO)]) == {0}

    def test_writer_after_readers_prunes_dominated_edge(self):
        history = {0: FieldHistory(last_writer=0, readers_since=[1, 2])}
        assert infer_edges(history, [access(0, WO)]) == {1, 2}

    def test_no_history_no_edges(self):
        assert infer_edges({}, [access(0, RO)]) == frozenset()

    def test_writer_writer_edge_kept_without_readers(self):
        history = {0: FieldHistory(last_writer=3)}
        assert infer_edges(history, [access(0, RW)]) == {3}


class TestRegisterField:
    def test_storage_covers_owned_plus_halo(self, runtime):
        handle = runtime.register_field("pressure")
        block = runtime.blocks[0]
        assert runtime._stores[handle.fid].arrays[0].shape == block.local_shape
        assert block.local_shape == (6, 6)

    def test_duplicate_name_rejected(self, runtime):
        runtime.register_field("pressure")
        with pytest.raises(ValueError, match="already registered"):
            runtime.register_field("pressure")

    def test_state_vector_field(self):
        rt = Runtime(decompose((4, 4, 4), (1, 1, 1), halo_depth=1))
        handle = rt.register_field("state", components=rt.topology.dims + 2)
        assert handle.components == 5
        assert rt._stores[handle.fid].arrays[0].shape == (6, 6, 6, 5)
        rt.close()


class TestSubmit:
    def test_reader_resolves_after_writer(self, runtime):
        f = runtime.register_field("u")
        order = []

        ra = runtime.submit(lambda ctx: order.append("A"), [(f, RW)], label="A")
        rb = runtime.submit(lambda ctx: order.append("B"), [(f, RO)], label="B")
        runtime.wait(rb)
        assert order == ["A", "B"]
        assert runtime.edges()[rb.task_id] == {ra.task_id}

    def test_plain_readers_have_no_mutual_edges(self, runtime):
        f = runtime.register_field("u")
        rb = runtime.submit(lambda ctx: None, [(f, RO)])
        rc = runtime.submit(lambda ctx: None, [(f, RO)])
        edges = runtime.edges()
        assert rb.task_id not in edges[rc.task_id]
        runtime.finish()

    def test_readers_commute(self):
        # permuting consecutive read-only tasks never changes field contents
        def run(order):
            rt = Runtime(decompose((8, 8), (2, 2), halo_depth=1))
            src = rt.register_field("src")
            outs = {name: rt.register_field(name) for name in ("a", "b")}

            def fill(ctx):
                for c in ctx.colors:
                    ctx.owned(src, c)[:] = c + 1.5

            def reader(name):
                def body(ctx):
                    for c in ctx.colors:
                        ctx.owned(outs[name], c)[:] = ctx.owned(src, c) * 2.0

                return body

            rt.submit(fill, [(src, WO)])
            for name in order:
                rt.submit(reader(name), [(src, RO), (outs[name], WO)])
            rt.finish()
            fields = {n: rt.gather(h) for n, h in outs.items()} | {
                "src": rt.gather(src)
            }
            rt.close()
            return fields

        forward = run(("a", "b"))
        reverse = run(("b", "a"))
        for name in ("src", "a", "b"):
            np.testing.assert_array_equal(forward[name], reverse[name])

    def test_rw_chain_completes_in_submission_order(self, runtime):
        f = runtime.register_field("u")
        results = [
            runtime.submit(lambda ctx: None, [(f, RW)]) for _ in range(10)
        ]
        runtime.finish()
        log = runtime.execution_log()
        assert [tid for tid, _, _ in log] == [r.task_id for r in results]
        for i in range(1, 10):
            assert runtime.edges()[results[i].task_id] == {results[i - 1].task_id}

    def test_unknown_field_rejected(self, runtime):
        stray = FieldHandle(99, "stray")
        with pytest.raises(ValueError, match="unknown field"):
            runtime.submit(lambda ctx: None, [(stray, RO)])

    def test_duplicate_access_rejected(self, runtime):
        f = runtime.register_field("u")
        with pytest.raises(ValueError, match="duplicate"):
            runtime.submit(lambda ctx: None, [(f, RO), (f, RW)])


class TestForEachCell:
    def test_writes_owned_only(self, runtime):
        f = runtime.register_field("u")

        def body(ctx):
            for c in ctx.colors:
                ctx.for_each_cell(
                    c, {"u": f}, lambda idx, a: a["u"].__setitem__(idx, 1.0)
                )

        runtime.submit(body, [(f, RW)])
        runtime.finish()
        store = runtime._stores[f.fid]
        for color, block in enumerate(runtime.blocks):
            arr = store.arrays[color]
            assert (arr[block.owned_slices()] == 1.0).all()
            assert arr.sum() == 16.0  # 4x4 owned cells; ghosts untouched

    def test_elementwise_map(self, runtime):
        fin = runtime.register_field("in")
        fout = runtime.register_field("out")

        def fill(ctx):
            for c in ctx.colors:
                ctx.owned(fin, c)[:] = 3.0

        def double(ctx):
            for c in ctx.colors:
                ctx.for_each_cell(
                    c,
                    {"a": fin, "b": fout},
                    lambda idx, f: f["b"].__setitem__(idx, f["a"][idx] * 2),
                )

        runtime.submit(fill, [(fin, WO)])
        runtime.submit(double, [(fin, RO), (fout, WO)])
        runtime.finish()
        assert (runtime.gather(fout) == 6.0).all()

    @pytest.mark.parametrize("workers", [1, 4])
    def test_sum_reduction_worker_independent(self, workers):
        rt = Runtime(
            decompose((10, 10), (1, 1)),
            ExecutorConfig(ranks=1, workers_per_rank=workers),
        )
        f = rt.register_field("u")

        def body(ctx):
            ctx.owned(f, 0)[:] = 1.0
            return ctx.for_each_cell(
                0, {"u": f}, lambda idx, a: a["u"][idx], reduce="sum"
            )

        assert rt.wait(rt.submit(body, [(f, RW)])) == 100.0
        rt.close()

    def test_undeclared_binding_rejected(self, runtime):
        f = runtime.register_field("u")
        g = runtime.register_field("v")

        def body(ctx):
            ctx.for_each_cell(0, {"v": g}, lambda idx, a: None)

        result = runtime.submit(body, [(f, RO)])
        with pytest.raises(TaskError, match="did not declare"):
            runtime.wait(result)


class TestWait:
    def test_wait_on_completed_task_returns_immediately(self, runtime):
        f = runtime.register_field("u")
        r = runtime.submit(lambda ctx: 7.0, [(f, RO)])
        runtime.finish()
        assert r.done
        assert runtime.wait(r) == 7.0

    def test_wait_twice_returns_cached_value(self, runtime):
        f = runtime.register_field("u")
        r = runtime.submit(lambda ctx: [1, 2], [(f, RO)])
        first = runtime.wait(r)
        assert runtime.wait(r) is first

    def test_wait_on_chain_tail_implies_predecessors_ran(self, runtime):
        f = runtime.register_field("u")
        seen = []
        results = [
            runtime.submit(lambda ctx, i=i: seen.append(i), [(f, RW)])
            for i in range(5)
        ]
        runtime.wait(results[-1])
        assert seen == [0, 1, 2, 3, 4]

    def test_failure_propagates_with_task_id(self, runtime):
        f = runtime.register_field("u")

        def explode(ctx):
            raise ValueError("boom")

        r = runtime.submit(explode, [(f, RW)], label="bad")
        with pytest.raises(TaskError, match="bad"):
            runtime.wait(r)


class TestGhostAutomation:
    def test_reader_sees_fresh_ghosts_without_explicit_exchange(self):
        rt = Runtime(decompose((8,), (2,), halo_depth=1, periodic=True))
        f = rt.register_field("u")

        def write(ctx):
            for c in ctx.colors:
                ctx.owned(f, c)[:] = 42.0

        def read(ctx):
            return ctx.local(f, 0)[0]  # low ghost of color 0

        rt.submit(write, [(f, RW)])
        assert rt.wait(rt.submit(read, [(f, RO)])) == 42.0
        rt.close()

    def test_write_discard_skips_ghost_refresh(self):
        rt = Runtime(decompose((8,), (2,), halo_depth=1, periodic=True))
        f = rt.register_field("u")
        rt.submit(lambda ctx: None, [(f, RW)])
        rt.finish()
        rt.reset_comm_stats()
        rt.submit(lambda ctx: None, [(f, WO)])
        rt.finish()
        assert rt.comm_stats().total_p2p_sends == 0
        rt.submit(lambda ctx: None, [(f, RO)])
        rt.finish()
        assert rt.comm_stats().total_p2p_sends == len(rt.plan)
        rt.close()
