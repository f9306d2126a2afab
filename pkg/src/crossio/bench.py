"""Micro-benchmark driver: seeded command streams at fixed queue depth.

The driver is the canonical queue-owner loop — submit until the depth
is reached, poke, refill — single-threaded by design. With the same
seed and mode on the emulator (latency model off) the LBA sequence is
identical run to run, so traces are reproducible.

Latency percentiles come from a fixed-bucket log-linear histogram (64
buckets per decade from 1 µs to 10 s): bounded memory, deterministic
bucketing, and by construction p50 <= p99 <= p999 <= max.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass

from .cmdqueue import Queue, cmd_pass
from .cmdsets import build_read, build_write
from .core import AgainError, BusyError, InvalidError, status_is_error
from .device import Device

__all__ = ["BenchReport", "LatencyHistogram", "MODES", "run_bench"]

MODES = ("randread", "randwrite", "seqread", "seqwrite")

_LOWEST_NS = 1000  # 1 us
_BUCKETS_PER_DECADE = 64
_DECADES = 7  # 1 us .. 10 s
_NBUCKETS = _BUCKETS_PER_DECADE * _DECADES


class LatencyHistogram:
    """Log-linear latency histogram with fixed bucket edges."""

    def __init__(self):
        # bucket 0: below 1 us; buckets 1..448 log-linear; 449: above 10 s
        self._counts = [0] * (_NBUCKETS + 2)
        self._total = 0
        self._max = 0

    def record(self, ns: int) -> None:
        self._counts[self._index(ns)] += 1
        self._total += 1
        if ns > self._max:
            self._max = ns

    @staticmethod
    def _index(ns: int) -> int:
        if ns < _LOWEST_NS:
            return 0
        idx = 1 + int(_BUCKETS_PER_DECADE * math.log10(ns / _LOWEST_NS))
        return min(idx, _NBUCKETS + 1)

    @staticmethod
    def _upper_bound(idx: int) -> int:
        if idx == 0:
            return _LOWEST_NS
        return int(_LOWEST_NS * 10 ** (idx / _BUCKETS_PER_DECADE))

    @property
    def max_ns(self) -> int:
        return self._max

    def value_at(self, quantile: float) -> int:
        """Upper bucket edge holding the given quantile, clamped to the
        exact observed maximum."""
        if self._total == 0:
            return 0
        rank = max(1, math.ceil(quantile * self._total))
        seen = 0
        for idx, count in enumerate(self._counts):
            seen += count
            if seen >= rank:
                if idx == _NBUCKETS + 1:
                    return self._max
                return min(self._upper_bound(idx), self._max)
        return self._max


@dataclass(frozen=True)
class BenchReport:
    """Outcome of one benchmark run; ops == completions always holds."""

    ops: int
    completions: int
    errors: int
    elapsed_ns: int
    iops: float
    bytes_per_sec: float
    latency_ns: dict

    def to_dict(self) -> dict:
        return {
            "ops": self.ops,
            "completions": self.completions,
            "errors": self.errors,
            "elapsed_ns": self.elapsed_ns,
            "iops": round(self.iops, 3),
            "bytes_per_sec": round(self.bytes_per_sec, 3),
            "latency_ns": dict(self.latency_ns),
        }


def run_bench(dev: Device, qd: int, nblocks: int, ops: int, mode: str,
              seed: int = 0, trace=None) -> BenchReport:
    """Drive ``ops`` commands at queue depth ``qd`` and report.

    ``mode`` picks the opcode and LBA pattern; ``seed`` fixes the random
    LBA sequence. ``trace``, when given, is called once per submission
    with a one-line description, in submission order.
    """
    if mode not in MODES:
        raise InvalidError(f"mode must be one of {MODES}, got {mode!r}")
    if ops < 1:
        raise InvalidError("ops must be >= 1")
    geo = dev.geometry
    if nblocks < 1 or nblocks > geo.nsect:
        raise InvalidError(f"nblocks={nblocks} does not fit the device")

    is_write = mode.endswith("write")
    sequential = mode.startswith("seq")
    build = build_write if is_write else build_read
    opname = "WRITE" if is_write else "READ"
    max_slba = geo.nsect - nblocks
    nbytes = nblocks * geo.lba_nbytes
    rng = random.Random(seed)

    queue = Queue(dev, qd)
    hist = LatencyHistogram()
    counters = {"completions": 0, "errors": 0}
    t0 = {}

    def on_complete(ctx, _arg):
        hist.record(time.monotonic_ns() - t0.pop(id(ctx)))
        if status_is_error(ctx.cpl):
            counters["errors"] += 1
        counters["completions"] += 1

    queue.set_cb(on_complete)

    buffers = {}
    seq_pos = 0
    submitted = 0
    staged = None  # (ctx, buffer) carried across AGAIN/BUSY retries

    started_ns = time.monotonic_ns()
    while counters["completions"] < ops:
        while submitted < ops:
            if staged is None:
                try:
                    ctx = queue.get_ctx()
                except BusyError:
                    break
                buf = buffers.get(id(ctx))
                if buf is None:
                    buf = buffers[id(ctx)] = dev.buf_alloc(nbytes)
                if sequential:
                    if seq_pos > max_slba:
                        seq_pos = 0
                    slba = seq_pos
                    seq_pos += nblocks
                else:
                    slba = rng.randint(0, max_slba)
                ctx.cmd = build(slba, nblocks)
                if trace is not None:
                    trace(f"{opname} slba={slba} nblocks={nblocks}")
                staged = (ctx, buf)
            ctx, buf = staged
            t0[id(ctx)] = time.monotonic_ns()
            try:
                cmd_pass(ctx, buf, nbytes)
            except (AgainError, BusyError):
                del t0[id(ctx)]
                break  # reap below, then retry the same staged context
            staged = None
            submitted += 1
        if queue.poke(0) == 0 and counters["completions"] < ops:
            queue._engine.wait(0.001)
    elapsed_ns = time.monotonic_ns() - started_ns

    queue.drain()
    queue.term()
    for buf in buffers.values():
        dev.buf_free(buf)

    elapsed_s = max(elapsed_ns, 1) / 1e9
    completions = counters["completions"]
    return BenchReport(
        ops=ops,
        completions=completions,
        errors=counters["errors"],
        elapsed_ns=elapsed_ns,
        iops=completions / elapsed_s,
        bytes_per_sec=completions * nbytes / elapsed_s,
        latency_ns={
            "p50": hist.value_at(0.50),
            "p99": hist.value_at(0.99),
            "p999": hist.value_at(0.999),
            "max": hist.max_ns,
        },
    )
