import time

import numpy as np
import pytest

from taskmesh import (
    BINOMIAL_TREE,
    STAR,
    ExecutorConfig,
    Runtime,
    Transport,
    allreduce,
    decompose,
    exchange_ghosts,
    local_block,
    run_async,
    run_sequential,
)
from taskmesh.executors import star_root_message_ops, tree_max_rounds
from taskmesh.runtime import RO, RW
from taskmesh.topology import exchange_plan

from programs import assert_log_respects_edges, random_program, run_and_gather


class TestAllreduce:
    @pytest.mark.parametrize("algorithm", [STAR, BINOMIAL_TREE])
    def test_rank_id_sum(self, algorithm):
        transport = Transport(4)
        assert allreduce([0, 1, 2, 3], "sum", algorithm, transport) == 6

    @pytest.mark.parametrize("ranks", [1, 2, 3, 4, 8, 16])
    @pytest.mark.parametrize("op", ["sum", "max"])
    @pytest.mark.parametrize("algorithm", [STAR, BINOMIAL_TREE])
    def test_matches_direct_fold(self, ranks, op, algorithm):
        rng = np.random.RandomState(ranks * 7 + (op == "max"))
        values = list(rng.uniform(-5, 5, size=ranks))
        expected = values[0]
        for v in values[1:]:
            expected = expected + v if op == "sum" else max(expected, v)
        transport = Transport(ranks)
        assert allreduce(values, op, algorithm, transport) == expected

    def test_star_and_tree_agree_bitwise(self):
        values = list(np.random.RandomState(3).uniform(-1, 1, size=8))
        a = allreduce(values, "sum", STAR, Transport(8))
        b = allreduce(values, "sum", BINOMIAL_TREE, Transport(8))
        assert a == b

    def test_star_root_message_ops(self):
        transport = Transport(8)
        allreduce(list(range(8)), "sum", STAR, transport)
        stats = transport.stats()
        assert stats.coll_msg_ops[0] == 14 == star_root_message_ops(8)
        assert stats.coll_rounds[0] == 14

    def test_tree_max_rounds(self):
        transport = Transport(8)
        allreduce(list(range(8)), "sum", BINOMIAL_TREE, transport)
        assert transport.stats().max_coll_rounds == 6 == tree_max_rounds(8)

    @pytest.mark.parametrize("ranks", [4, 5, 8, 16])
    def test_star_strictly_worse_than_tree(self, ranks):
        star = Transport(ranks)
        allreduce(list(range(ranks)), "sum", STAR, star)
        tree = Transport(ranks)
        allreduce(list(range(ranks)), "sum", BINOMIAL_TREE, tree)
        assert star.stats().coll_rounds[0] > tree.stats().max_coll_rounds

    def test_contribution_count_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            allreduce([1, 2, 3], "sum", STAR, Transport(4))


class TestCommStats:
    def test_fresh_transport_all_zero(self):
        stats = Transport(4).stats()
        assert stats.p2p_sends == [0, 0, 0, 0]
        assert stats.total_coll_messages == 0
        assert stats.max_coll_rounds == 0

    def test_ghost_exchange_counts_plan_size(self):
        topo = decompose((8,), (2,), halo_depth=1, periodic=True)
        plan = exchange_plan(topo)
        blocks = [local_block(topo, c) for c in range(2)]
        arrays = [np.zeros(b.local_shape) for b in blocks]
        transport = Transport(2)
        exchange_ghosts(arrays, blocks, plan, transport, tag="t")
        assert transport.stats().total_p2p_sends == 4 == len(plan)

    def test_star_total_messages(self):
        transport = Transport(4)
        allreduce([0, 1, 2, 3], "sum", STAR, transport)
        assert transport.stats().total_coll_messages == 6

    def test_reset(self):
        transport = Transport(2)
        transport.send(0, 1, "x", None)
        transport.reset_stats()
        assert transport.stats().total_p2p_sends == 0


class TestExchangeGhosts:
    def test_periodic_neighbor_value(self):
        topo = decompose((8,), (2,), halo_depth=1, periodic=True)
        blocks = [local_block(topo, c) for c in range(2)]
        arrays = [np.zeros(b.local_shape) for b in blocks]
        arrays[1][blocks[1].owned_slices()] = np.arange(4, 8)
        exchange_ghosts(arrays, blocks, exchange_plan(topo), Transport(2), tag="t")
        assert arrays[0][-1] == 4.0  # rank 0's right ghost = rank 1's first owned

    def test_written_value_visible_after_exchange(self):
        rt = Runtime(decompose((8,), (2,), halo_depth=1, periodic=True))
        f = rt.register_field("u")

        def write(ctx):
            ctx.owned(f, 1)[0] = 42.0

        def read(ctx):
            return ctx.local(f, 0)[-1]

        rt.submit(write, [(f, RW)])
        assert rt.wait(rt.submit(read, [(f, RO)])) == 42.0
        rt.close()

    def test_brute_force_all_ghosts(self):
        topo = decompose((6, 9), (2, 3), halo_depth=2, periodic=(True, True))
        blocks = [local_block(topo, c) for c in range(topo.n_colors)]
        rng = np.random.RandomState(0)
        world = rng.uniform(size=topo.global_extents)
        arrays = []
        for b in blocks:
            a = np.full(b.local_shape, np.nan)
            a[b.owned_slices()] = world[tuple(slice(iv.lo, iv.hi) for iv in b.owned)]
            arrays.append(a)
        exchange_ghosts(arrays, blocks, exchange_plan(topo), Transport(6), tag="t")
        extents = topo.global_extents
        for b, arr in zip(blocks, arrays):
            for g in b.ghost_ranges:
                origin = b.local_origin
                for raw in range(g.raw.lo, g.raw.hi):
                    for other in range(b.owned[1 - g.axis].lo, b.owned[1 - g.axis].hi):
                        cell = [0, 0]
                        cell[g.axis] = raw
                        cell[1 - g.axis] = other
                        local = tuple(c - o for c, o in zip(cell, origin))
                        wrapped = tuple(c % n for c, n in zip(cell, extents))
                        assert arr[local] == world[wrapped]


def chain_program(label, count, duration, field_name):
    def program(rt):
        f = rt.register_field(field_name)
        for i in range(count):
            rt.submit(
                lambda ctx: time.sleep(duration), [(f, RW)], label=f"{label}{i}"
            )

    return program


class TestSequentialEngine:
    def test_pipeline_runs_in_submission_order(self):
        topo = decompose((4,), (1,))
        rt = Runtime(topo, ExecutorConfig(ranks=1))
        f = rt.register_field("u")
        results = [rt.submit(lambda ctx: None, [(f, RW)]) for _ in range(3)]
        rt.finish()
        assert [t for t, _, _ in rt.execution_log()] == [r.task_id for r in results]
        rt.close()

    def test_independent_tasks_still_ordered(self):
        topo = decompose((4,), (1,))
        rt = Runtime(topo, ExecutorConfig(ranks=1))
        f = rt.register_field("u")
        g = rt.register_field("v")
        ra = rt.submit(lambda ctx: None, [(f, RW)])
        rb = rt.submit(lambda ctx: None, [(g, RW)])
        rt.finish()
        log = rt.execution_log()
        assert [t for t, _, _ in log] == [ra.task_id, rb.task_id]
        assert log[0][2] <= log[1][1]  # no overlap
        rt.close()


class TestAsyncEngine:
    def test_single_chain_has_no_concurrency(self):
        topo = decompose((4,), (1,))
        program = chain_program("t", 4, 0.02, "u")
        t0 = time.perf_counter()
        run_sequential(program, topo)
        seq = time.perf_counter() - t0
        t0 = time.perf_counter()
        run_async(program, topo, ExecutorConfig(ranks=1, workers_per_rank=2))
        asy = time.perf_counter() - t0
        assert asy > 0.5 * seq  # a dependent chain cannot overlap

    def test_independent_chains_overlap(self):
        topo = decompose((4,), (1,))

        def program(rt):
            chain_program("a", 4, 0.05, "u")(rt)
            chain_program("b", 4, 0.05, "v")(rt)

        t0 = time.perf_counter()
        run_sequential(program, topo)
        seq = time.perf_counter() - t0
        t0 = time.perf_counter()
        run_async(program, topo, ExecutorConfig(ranks=1, workers_per_rank=2))
        asy = time.perf_counter() - t0
        assert asy <= 0.75 * seq

    @pytest.mark.parametrize("seed", range(40))
    def test_random_dags_match_sequential_bitwise(self, seed):
        program = random_program(seed)
        topo = decompose((6, 6), (2, 1), halo_depth=1, periodic=(True, True))
        seq_fields, seq_log, edges = run_and_gather(topo, program, "sequential")
        asy_fields, asy_log, asy_edges = run_and_gather(topo, program, "async")
        assert asy_edges == edges
        for a, b in zip(seq_fields, asy_fields):
            np.testing.assert_array_equal(a, b)
        assert_log_respects_edges(seq_log, edges)
        assert_log_respects_edges(asy_log, asy_edges)


class TestMessageDeterminism:
    def test_repeated_runs_identical_stats(self):
        from programs import build

        topo = decompose((8, 8), (2, 2), halo_depth=1, periodic=(True, True))
        program = random_program(11)
        config = ExecutorConfig(ranks=4, workers_per_rank=2)

        def builder(rt):
            build(rt, program)

        first = run_sequential(builder, topo, config)
        assert run_sequential(builder, topo, config) == first
        a1 = run_async(builder, topo, config)
        a2 = run_async(builder, topo, config)
        assert a1 == a2 == first
