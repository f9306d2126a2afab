"""Backend adapter for the in-memory emulator, plus its queue engine.

The engine executes commands eagerly at submission (the emulator is
memory-speed) and stages completions in a bounded pending ring sized by
option "ram.pending" (default: the queue capacity). The latency model
only gates when a staged completion becomes visible to reaping, so data
state is independent of timing. A full pending ring refuses submission
with AGAIN, the transient signal of the standard retry loop.
"""

from __future__ import annotations

import time
from collections import deque

from .. import ramdev
from ..core import AgainError, Command, InvalidError, OPT_RAM_PENDING
from .base import BackendDescriptor, BackendDevice, MODE_ASYNC, MODE_SYNC


class RamBackendDevice(BackendDevice):
    def __init__(self, ident, opts: dict):
        self.ns = ramdev.ram_get(ident.name)
        self.geometry = self.ns.geometry
        self._opts = opts

    def exec_timed(self, cmd: Command, view, nbytes: int):
        return self.ns.execute(cmd, view, nbytes)

    def begin_io(self) -> None:
        self.ns.begin_io()

    def end_io(self) -> None:
        self.ns.end_io()

    def make_engine(self, capacity: int, opts: dict):
        pending = opts.get(OPT_RAM_PENDING)
        if pending is None:
            ring_size = capacity
        else:
            try:
                ring_size = int(pending)
            except ValueError:
                raise InvalidError(f"ram.pending={pending!r} is not an integer")
            if ring_size < 1:
                raise InvalidError("ram.pending must be >= 1")
        return RamEngine(self, ring_size)


class RamEngine:
    """Eager-execution engine with a bounded completion-staging ring."""

    def __init__(self, dev: RamBackendDevice, ring_size: int):
        self._dev = dev
        self._ring_size = ring_size
        self._ring: deque = deque()  # (ctx, completion, visible_at_ns)

    def submit(self, ctx, view, nbytes: int) -> None:
        if len(self._ring) >= self._ring_size:
            raise AgainError("pending ring is full, retry after reaping")
        self._dev.begin_io()
        try:
            cpl, delay = self._dev.exec_timed(ctx.cmd, view, nbytes)
        except BaseException:
            self._dev.end_io()
            raise
        visible_at = time.monotonic_ns() + delay if delay else 0
        self._ring.append((ctx, cpl, visible_at))

    def reap(self, max_n: int | None):
        """Pop up to max_n visible completions, submission order kept."""
        out = []
        if not self._ring:
            return out
        now = time.monotonic_ns()
        remaining = len(self._ring)
        while remaining and (max_n is None or len(out) < max_n):
            ctx, cpl, visible_at = self._ring.popleft()
            remaining -= 1
            if visible_at > now:
                self._ring.append((ctx, cpl, visible_at))
                continue
            ctx.cpl = cpl
            self._dev.end_io()
            out.append(ctx)
        return out

    def wait(self, timeout: float) -> None:
        """Sleep until the earliest staged completion could be visible."""
        if not self._ring:
            return
        now = time.monotonic_ns()
        earliest = min(entry[2] for entry in self._ring)
        if earliest > now:
            time.sleep(min(timeout, (earliest - now) / 1e9))

    def close(self) -> None:
        self._ring.clear()


DESCRIPTOR = BackendDescriptor(
    name="ram",
    modes=frozenset({MODE_SYNC, MODE_ASYNC}),
    ident_classes=frozenset({"ram"}),
    probe=lambda: True,
    factory=RamBackendDevice,
)
