"""Command contexts and the submission/completion queue engine.

A command context pairs one command with its completion, the target
device and (for asynchronous work) the owning queue. Synchronous
submission blocks until the backend executed the command and fills
``ctx.cpl`` in place; device failures live there, never in exceptions —
the two error channels of the library.

Asynchronous submission goes through a fixed-capacity queue owning a
pool of contexts. Completions are delivered only while the owner calls
``poke``/``drain``, one callback at a time on the calling thread; there
is no background dispatch. BUSY/AGAIN from submission are transient:
the context stays staged and resubmitting it is sufficient recovery.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Callable

from .core import (
    AgainError,
    BusyError,
    Command,
    Completion,
    InvalidError,
    validate_command,
)
from .device import Buffer, Device, _count

__all__ = ["CommandContext", "CtxState", "Queue", "cmd_pass", "queue_init"]

MODE_SYNC = "sync"
MODE_ASYNC = "async"

QUEUE_CAPACITY_MAX = 4096


class CtxState(enum.Enum):
    FREE = "free"
    STAGED = "staged"
    INFLIGHT = "inflight"
    COMPLETED = "completed"


@dataclass
class CommandContext:
    """One command/completion pair bound to a device.

    Caller-constructed contexts are synchronous; contexts handed out by
    a queue are asynchronous and belong to that queue's pool.
    """

    dev: Device
    cmd: Command = field(default_factory=Command)
    cpl: Completion = field(default_factory=Completion)
    queue: "Queue | None" = None
    _state: CtxState = CtxState.STAGED
    _payload: object = None

    @property
    def mode(self) -> str:
        return MODE_ASYNC if self.queue is not None else MODE_SYNC


class Queue:
    """Fixed-capacity asynchronous submission engine over one device."""

    def __init__(self, dev: Device, capacity: int, flags: int = 0):
        if flags != 0:
            raise InvalidError("queue flags are reserved and must be 0")
        if (
            not isinstance(capacity, int)
            or capacity < 1
            or capacity > QUEUE_CAPACITY_MAX
            or capacity & (capacity - 1)
        ):
            raise InvalidError(
                f"capacity must be a power of two in [1, {QUEUE_CAPACITY_MAX}]"
            )
        dev._check_open()
        self.dev = dev
        self.capacity = capacity
        self._engine = dev._async_be.make_engine(capacity, dev._opts)
        self._pool = [
            CommandContext(dev=dev, queue=self, _state=CtxState.FREE)
            for _ in range(capacity)
        ]
        self._free = list(self._pool)
        self._callback: Callable | None = None
        self._cb_arg = None
        self._outstanding = 0
        self._terminated = False
        self._dispatching = False
        dev._nqueues += 1
        _count("queues", +1)

    # -- introspection ---------------------------------------------------

    @property
    def outstanding(self) -> int:
        """Contexts submitted and not yet delivered to the callback."""
        return self._outstanding

    @property
    def nfree(self) -> int:
        return len(self._free)

    def _check_live(self) -> None:
        if self._terminated:
            raise InvalidError("queue is terminated")

    # -- context pool ------------------------------------------------------

    def set_cb(self, cb: Callable, cb_arg=None) -> None:
        """Install the completion callback ``cb(ctx, cb_arg)``.

        Replaces any prior callback; completions delivered afterwards go
        to the new one.
        """
        self._check_live()
        if not callable(cb):
            raise InvalidError("completion callback must be callable")
        self._callback = cb
        self._cb_arg = cb_arg

    def get_ctx(self) -> CommandContext:
        """Take a free context (staged, command zeroed) or fail BUSY."""
        self._check_live()
        if not self._free:
            raise BusyError("no free command context in the pool")
        ctx = self._free.pop()
        ctx.cmd = Command()
        ctx.cpl = Completion()
        ctx._state = CtxState.STAGED
        return ctx

    def put_ctx(self, ctx: CommandContext) -> None:
        """Return a staged context unused."""
        self._check_live()
        if ctx.queue is not self or ctx._state is not CtxState.STAGED:
            raise InvalidError("context is not staged on this queue")
        ctx._state = CtxState.FREE
        self._free.append(ctx)

    # -- completion delivery ----------------------------------------------

    def poke(self, max_completions: int = 0) -> int:
        """Dispatch up to ``max_completions`` pending completions (0 =
        no limit) to the callback on the calling thread; never blocks."""
        self._check_live()
        if max_completions < 0:
            raise InvalidError("max_completions must be >= 0")
        if self._dispatching:
            raise InvalidError("poke/drain re-entered from a completion callback")
        limit = max_completions if max_completions else None
        ready = self._engine.reap(limit)
        # every reaped context is delivered exactly once and recycled even
        # if a callback raises; the first callback exception surfaces after
        # the batch so no context is ever stranded
        failure = None
        for ctx in ready:
            self._outstanding -= 1
            ctx._state = CtxState.COMPLETED
            self._dispatching = True
            try:
                self._callback(ctx, self._cb_arg)
            except BaseException as exc:  # noqa: BLE001 - caller's bug, not ours
                if failure is None:
                    failure = exc
            finally:
                self._dispatching = False
                ctx._payload = None
                ctx._state = CtxState.FREE
                self._free.append(ctx)
        if failure is not None:
            raise failure
        return len(ready)

    def drain(self) -> int:
        """Block until nothing is outstanding; returns completions
        dispatched. Every callback runs before this returns."""
        total = 0
        while self._outstanding:
            n = self.poke(0)
            total += n
            if n == 0:
                self._engine.wait(0.005)
        return total

    def term(self) -> None:
        """Release the queue. Requires an empty pipeline (drain first)."""
        self._check_live()
        if self._outstanding:
            raise BusyError(f"{self._outstanding} context(s) still in flight")
        self._engine.close()
        self._terminated = True
        self.dev._nqueues -= 1
        _count("queues", -1)


def queue_init(dev: Device, capacity: int, flags: int = 0) -> Queue:
    """Create a queue with ``capacity`` free contexts and no callback."""
    return Queue(dev, capacity, flags)


def _resolve_view(payload, nbytes: int):
    if payload is None:
        return None
    if isinstance(payload, Buffer):
        if payload._freed:
            raise InvalidError("payload buffer was freed")
        return payload.data[:nbytes]
    view = memoryview(payload)
    if view.readonly:
        raise InvalidError("payload must be writable (device may fill it)")
    return view.cast("B")[:nbytes]


def cmd_pass(ctx: CommandContext, payload=None, nbytes: int | None = None) -> None:
    """Submit the context's command with ``nbytes`` of ``payload``.

    Synchronous contexts block until the backend executed the command;
    the call returns normally even when the device reports a failure —
    check ``ctx.cpl``. Asynchronous contexts are enqueued and become
    in-flight; their completion arrives only through the queue callback
    during poke/drain. Transient BUSY/AGAIN leaves the context staged
    and resubmittable.
    """
    dev = ctx.dev
    dev._check_open()
    if nbytes is None:
        nbytes = payload.nbytes if isinstance(payload, Buffer) else (
            len(payload) if payload is not None else 0
        )
    validate_command(ctx.cmd, dev.geometry, nbytes, payload)
    view = _resolve_view(payload, nbytes)

    queue = ctx.queue
    if queue is None:
        ctx._state = CtxState.INFLIGHT
        ctx.cpl = dev._sync_be.exec_cmd(ctx.cmd, view, nbytes)
        ctx._state = CtxState.COMPLETED
        return

    queue._check_live()
    if ctx._state is not CtxState.STAGED:
        raise InvalidError(f"context is {ctx._state.value}, not staged")
    if queue._callback is None:
        raise AgainError("no completion callback installed on the queue")
    queue._engine.submit(ctx, view, nbytes)  # AGAIN/BUSY leave ctx staged
    ctx._payload = payload
    ctx._state = CtxState.INFLIGHT
    queue._outstanding += 1
