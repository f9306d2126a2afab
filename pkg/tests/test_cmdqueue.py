"""Queue engine: context pool, callbacks, delivery, conservation."""

import random

import pytest

from crossio import (
    AgainError,
    BusyError,
    CommandContext,
    InvalidError,
    Queue,
    build_read,
    build_write,
    cmd_pass,
    dev_open,
    queue_init,
    ram_create,
    ram_get,
)
from crossio.cmdqueue import CtxState
from crossio.ramdev import FaultRule, LatencyRule


class TestQueueInit:
    def test_depth_32(self, ram_dev):
        q = queue_init(ram_dev, 32, 0)
        assert q.capacity == 32 and q.nfree == 32 and q.outstanding == 0
        q.term()

    def test_depth_1_minimum(self, ram_dev):
        q = Queue(ram_dev, 1)
        assert q.capacity == 1
        q.term()

    @pytest.mark.parametrize("capacity", [0, 33, 100, 8192, -4])
    def test_non_power_of_two_rejected(self, ram_dev, capacity):
        with pytest.raises(InvalidError):
            Queue(ram_dev, capacity)

    def test_reserved_flags(self, ram_dev):
        with pytest.raises(InvalidError):
            Queue(ram_dev, 8, flags=1)

    def test_closed_device_rejected(self, ram_dev):
        ram_dev.close()
        with pytest.raises(InvalidError):
            Queue(ram_dev, 8)


class TestContextPool:
    def test_pool_exhaustion_and_recycle(self, ram_dev):
        q = Queue(ram_dev, 32)
        q.set_cb(lambda ctx, arg: None)
        ctxs = [q.get_ctx() for _ in range(32)]
        with pytest.raises(BusyError):
            q.get_ctx()
        buf = ram_dev.buf_alloc(512)
        ctxs[0].cmd = build_read(0, 1)
        cmd_pass(ctxs[0], buf, 512)
        assert q.poke(0) == 1
        recycled = q.get_ctx()  # free again after the reap
        q.put_ctx(recycled)
        for ctx in ctxs[1:]:
            q.put_ctx(ctx)
        assert q.nfree == 32
        q.term()

    def test_get_zeroes_command(self, ram_dev):
        q = Queue(ram_dev, 2)
        ctx = q.get_ctx()
        ctx.cmd = build_write(5, 2)
        q.put_ctx(ctx)
        ctx2 = q.get_ctx()
        assert ctx2.cmd.opcode == 0 and ctx2.cmd.slba == 0 and ctx2.cmd.nlb == 0
        q.put_ctx(ctx2)
        q.term()

    def test_put_restores_pool(self, ram_dev):
        q = Queue(ram_dev, 4)
        ctx = q.get_ctx()
        assert q.nfree == 3
        q.put_ctx(ctx)
        assert q.nfree == 4
        q.term()

    def test_double_put_rejected(self, ram_dev):
        q = Queue(ram_dev, 4)
        ctx = q.get_ctx()
        q.put_ctx(ctx)
        with pytest.raises(InvalidError):
            q.put_ctx(ctx)
        q.term()

    def test_put_inflight_rejected(self, ram_dev):
        q = Queue(ram_dev, 4)
        q.set_cb(lambda ctx, arg: None)
        ctx = q.get_ctx()
        buf = ram_dev.buf_alloc(512)
        ctx.cmd = build_read(0, 1)
        cmd_pass(ctx, buf, 512)
        with pytest.raises(InvalidError):
            q.put_ctx(ctx)
        q.drain()
        q.term()


class TestCallbacks:
    def test_counting_callback(self, ram_dev):
        q = Queue(ram_dev, 8)
        hits = []
        q.set_cb(lambda ctx, arg: hits.append(arg), cb_arg="tag")
        buf = ram_dev.buf_alloc(512)
        for _ in range(5):
            ctx = q.get_ctx()
            ctx.cmd = build_read(0, 1)
            cmd_pass(ctx, buf, 512)
        assert q.drain() == 5
        assert hits == ["tag"] * 5
        q.term()

    def test_replacement_last_write_wins(self, ram_dev):
        q = Queue(ram_dev, 8)
        first, second = [], []
        q.set_cb(lambda ctx, arg: first.append(1))
        buf = ram_dev.buf_alloc(512)
        ctx = q.get_ctx()
        ctx.cmd = build_read(0, 1)
        cmd_pass(ctx, buf, 512)
        q.set_cb(lambda ctx, arg: second.append(1))
        q.drain()
        assert first == [] and second == [1]
        q.term()

    def test_submit_without_callback_is_again(self, ram_dev):
        q = Queue(ram_dev, 8)
        ctx = q.get_ctx()
        buf = ram_dev.buf_alloc(512)
        ctx.cmd = build_read(0, 1)
        with pytest.raises(AgainError):
            cmd_pass(ctx, buf, 512)
        assert ctx._state is CtxState.STAGED  # still resubmittable
        q.set_cb(lambda ctx, arg: None)
        cmd_pass(ctx, buf, 512)
        q.drain()
        q.term()

    def test_non_callable_rejected(self, ram_dev):
        q = Queue(ram_dev, 2)
        with pytest.raises(InvalidError):
            q.set_cb(None)
        q.term()

    def test_raising_callback_recycles_whole_batch(self, ram_dev):
        q = Queue(ram_dev, 8)
        seen = []

        def explode(ctx, arg):
            seen.append(ctx.cmd.slba)
            raise RuntimeError("callback bug")

        q.set_cb(explode)
        buf = ram_dev.buf_alloc(512)
        for i in range(4):
            ctx = q.get_ctx()
            ctx.cmd = build_read(i, 1)
            cmd_pass(ctx, buf, 512)
        with pytest.raises(RuntimeError):
            q.poke(0)
        # every completion was still delivered once and the pool survived
        assert sorted(seen) == [0, 1, 2, 3]
        assert q.nfree == 8 and q.outstanding == 0
        q.term()

    def test_poke_reentry_from_callback_rejected(self, ram_dev):
        q = Queue(ram_dev, 2)
        errors = []

        def reenter(ctx, arg):
            try:
                q.poke(0)
            except InvalidError as exc:
                errors.append(exc)

        q.set_cb(reenter)
        buf = ram_dev.buf_alloc(512)
        ctx = q.get_ctx()
        ctx.cmd = build_read(0, 1)
        cmd_pass(ctx, buf, 512)
        q.drain()
        assert len(errors) == 1
        q.term()


class TestCmdPass:
    def test_sync_read_of_preimaged_block(self, ram_name, conv_geo):
        ns = ram_create(ram_name, conv_geo)
        ns.execute(build_write(3, 1), bytearray(b"\xab" * 512))
        dev = dev_open(f"ram:{ram_name}")
        buf = dev.buf_alloc(512)
        ctx = CommandContext(dev=dev, cmd=build_read(3, 1))
        cmd_pass(ctx, buf, 512)
        assert ctx.cpl.status == 0
        assert buf.to_bytes() == b"\xab" * 512
        dev.close()

    def test_sync_device_error_returns_normally(self, ram_dev):
        ctx = CommandContext(dev=ram_dev, cmd=build_read(ram_dev.geometry.nsect, 1))
        buf = ram_dev.buf_alloc(512)
        cmd_pass(ctx, buf, 512)  # no raise: device errors live in cpl
        assert ctx.cpl.status != 0

    def test_size_contract_violation(self, ram_dev):
        buf = ram_dev.buf_alloc(1024)
        ctx = CommandContext(dev=ram_dev, cmd=build_read(0, 1))
        with pytest.raises(InvalidError):
            cmd_pass(ctx, buf, 1024)  # nbytes != (nlb+1)*512

    def test_async_full_ring_again_then_retry(self, ram_name, conv_geo):
        ram_create(ram_name, conv_geo)
        dev = dev_open(f"ram:{ram_name}", {"ram.pending": "2"})
        q = Queue(dev, 8)
        q.set_cb(lambda ctx, arg: None)
        buf = dev.buf_alloc(512)
        submitted = 0
        ctx3 = None
        for i in range(3):
            ctx = q.get_ctx()
            ctx.cmd = build_read(0, 1)
            try:
                cmd_pass(ctx, buf, 512)
                submitted += 1
            except AgainError:
                ctx3 = ctx
        assert submitted == 2 and ctx3 is not None
        assert q.poke(0) == 2  # one reap frees the ring ...
        cmd_pass(ctx3, buf, 512)  # ... and the retry succeeds
        q.drain()
        q.term()
        dev.close()


class TestPokeDrain:
    def test_poke_idle_queue(self, ram_dev):
        q = Queue(ram_dev, 4)
        q.set_cb(lambda ctx, arg: None)
        assert q.poke(0) == 0
        q.term()

    def test_poke_unbounded_and_bounded(self, ram_dev):
        q = Queue(ram_dev, 8)
        q.set_cb(lambda ctx, arg: None)
        buf = ram_dev.buf_alloc(512)
        for _ in range(5):
            ctx = q.get_ctx()
            ctx.cmd = build_read(0, 1)
            cmd_pass(ctx, buf, 512)
        assert q.outstanding == 5
        assert q.poke(2) == 2
        assert q.outstanding == 3
        assert q.poke(0) == 3
        q.term()

    def test_drain_conservation(self, ram_dev):
        q = Queue(ram_dev, 16)
        q.set_cb(lambda ctx, arg: None)
        buf = ram_dev.buf_alloc(512)
        total = 0
        for _ in range(100):
            while True:
                try:
                    ctx = q.get_ctx()
                except BusyError:
                    total += q.poke(0)
                    continue
                break
            ctx.cmd = build_read(0, 1)
            cmd_pass(ctx, buf, 512)
        total += q.drain()
        assert total == 100
        assert q.drain() == 0
        q.term()

    def test_drain_with_one_fault(self, ram_name, conv_geo):
        ns = ram_create(ram_name, conv_geo)
        ns.inject([FaultRule(status=0x0281, opcode=2, occurrence=4)])
        dev = dev_open(f"ram:{ram_name}")
        q = Queue(dev, 16)
        statuses = []
        q.set_cb(lambda ctx, arg: statuses.append(ctx.cpl.status))
        buf = dev.buf_alloc(512)
        for _ in range(10):
            ctx = q.get_ctx()
            ctx.cmd = build_read(0, 1)
            cmd_pass(ctx, buf, 512)
        assert q.drain() == 10
        assert len([s for s in statuses if s]) == 1
        q.term()
        dev.close()


class TestTerm:
    def test_term_then_unusable(self, ram_dev):
        q = Queue(ram_dev, 4)
        q.term()
        with pytest.raises(InvalidError):
            q.get_ctx()
        with pytest.raises(InvalidError):
            q.term()  # double term

    def test_term_with_inflight_is_busy(self, ram_name, conv_geo):
        ns = ram_create(ram_name, conv_geo)
        ns.set_latency([LatencyRule(delay_ns=200_000_000, occurrence=1)])
        dev = dev_open(f"ram:{ram_name}")
        q = Queue(dev, 4)
        q.set_cb(lambda ctx, arg: None)
        buf = dev.buf_alloc(512)
        ctx = q.get_ctx()
        ctx.cmd = build_read(0, 1)
        cmd_pass(ctx, buf, 512)
        with pytest.raises(BusyError):
            q.term()
        q.drain()
        q.term()
        dev.close()


class TestInvariants:
    def test_exactly_once_and_pool_conservation(self, ram_dev):
        q = Queue(ram_dev, 32)
        delivered = set()
        q.set_cb(lambda ctx, arg: delivered.add(ctx.cmd.slba))
        buf = ram_dev.buf_alloc(512)
        rng = random.Random(8)
        submitted = 0
        seq = 0
        while submitted < 1000:
            burst = rng.randint(1, 32)
            for _ in range(burst):
                if submitted >= 1000:
                    break
                try:
                    ctx = q.get_ctx()
                except BusyError:
                    q.poke(0)
                    continue
                ctx.cmd = build_write(seq % ram_dev.geometry.nsect, 1)
                seq += 1
                cmd_pass(ctx, buf, 512)
                submitted += 1
            q.poke(rng.randint(0, 8))
        q.drain()
        # free + staged(0) + inflight(0) == capacity, nothing lost or doubled
        assert q.nfree == 32 and q.outstanding == 0
        q.term()

    def test_distinct_queues_run_in_parallel(self, ram_dev):
        import threading

        results = {}

        def owner(tag):
            q = Queue(ram_dev, 16)
            count = [0]
            q.set_cb(lambda ctx, arg: count.__setitem__(0, count[0] + 1))
            buf = ram_dev.buf_alloc(512)
            for i in range(500):
                while True:
                    try:
                        ctx = q.get_ctx()
                        break
                    except BusyError:
                        q.poke(0)
                ctx.cmd = build_write((tag * 1000 + i) % ram_dev.geometry.nsect, 1)
                cmd_pass(ctx, buf, 512)
            q.drain()
            q.term()
            results[tag] = count[0]

        threads = [threading.Thread(target=owner, args=(t,)) for t in range(3)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert results == {0: 500, 1: 500, 2: 500}

    def test_sync_async_equivalence(self, conv_geo):
        rng = random.Random(616)
        script = []
        for _ in range(300):
            if rng.random() < 0.5:
                script.append(("w", rng.randrange(conv_geo.nsect),
                               bytes([rng.randrange(256)]) * 512))
            else:
                script.append(("r", rng.randrange(conv_geo.nsect), None))

        def run_sync(name):
            ram_create(name, conv_geo)
            dev = dev_open(f"ram:{name}")
            buf = dev.buf_alloc(512)
            cpls = []
            for kind, slba, data in script:
                if kind == "w":
                    buf.fill(data)
                    ctx = CommandContext(dev=dev, cmd=build_write(slba, 1))
                else:
                    ctx = CommandContext(dev=dev, cmd=build_read(slba, 1))
                cmd_pass(ctx, buf, 512)
                cpls.append((ctx.cpl.status, ctx.cpl.result))
            dev.close()
            return cpls, ram_get(name).snapshot()

        def run_async(name):
            ram_create(name, conv_geo)
            dev = dev_open(f"ram:{name}")
            q = Queue(dev, 1)
            cpls = []
            q.set_cb(lambda ctx, arg: cpls.append((ctx.cpl.status, ctx.cpl.result)))
            buf = dev.buf_alloc(512)
            for kind, slba, data in script:
                ctx = q.get_ctx()
                if kind == "w":
                    buf.fill(data)
                    ctx.cmd = build_write(slba, 1)
                else:
                    ctx.cmd = build_read(slba, 1)
                cmd_pass(ctx, buf, 512)
                q.drain()
            q.term()
            dev.close()
            return cpls, ram_get(name).snapshot()

        assert run_sync("eq-sync") == run_async("eq-async")
