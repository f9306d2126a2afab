"""Worker-pool asynchronous emulation over any synchronous executor.

This is the generic stand-in for platform-native async interfaces: a
small pool of worker threads executes commands through the underlying
synchronous backend (psync for files, the emulator for ram devices) and
stages results for delivery at the owner's next poke/drain — never
inline. Submissions land in a bounded pending ring; a full ring refuses
with AGAIN and background draining makes the plain retry loop
sufficient recovery. Completion order is whatever the workers produce.
"""

from __future__ import annotations

import threading
import time
from collections import deque

from ..core import (
    AgainError,
    Command,
    Completion,
    InvalidError,
    OPT_THRPOOL_PENDING,
    OPT_THRPOOL_WORKERS,
    Status,
)
from .base import BackendDescriptor, BackendDevice, MODE_ASYNC, MODE_SYNC
from .psync import FileDevice
from .ram import RamBackendDevice

DEFAULT_WORKERS = 4


def _int_opt(opts: dict, key: str, default: int, minimum: int) -> int:
    raw = opts.get(key)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise InvalidError(f"{key}={raw!r} is not an integer")
    if value < minimum:
        raise InvalidError(f"{key} must be >= {minimum}")
    return value


class ThrpoolDevice(BackendDevice):
    """Wraps the ident class's synchronous executor with a worker pool."""

    def __init__(self, ident, opts: dict):
        if ident.cls == "ram":
            self._inner = RamBackendDevice(ident, opts)
        else:
            self._inner = FileDevice(ident, opts)
        self.geometry = self._inner.geometry
        self._workers = _int_opt(opts, OPT_THRPOOL_WORKERS, DEFAULT_WORKERS, 1)

    def exec_timed(self, cmd: Command, view, nbytes: int):
        return self._inner.exec_timed(cmd, view, nbytes)

    def begin_io(self) -> None:
        self._inner.begin_io()

    def end_io(self) -> None:
        self._inner.end_io()

    def make_engine(self, capacity: int, opts: dict):
        pending = _int_opt(opts, OPT_THRPOOL_PENDING, capacity, 1)
        return ThrpoolEngine(self._inner, self._workers, pending)

    def close(self) -> None:
        self._inner.close()


class ThrpoolEngine:
    """Bounded-inbox thread-pool engine for one queue."""

    def __init__(self, inner: BackendDevice, nworkers: int, pending_size: int):
        self._inner = inner
        self._pending_size = pending_size
        self._lock = threading.Lock()
        self._inbox_ready = threading.Condition(self._lock)
        self._done_ready = threading.Condition(self._lock)
        self._inbox: deque = deque()
        self._done: deque = deque()  # (ctx, completion)
        self._stop = False
        self._threads = [
            threading.Thread(target=self._worker, daemon=True, name=f"crossio-w{i}")
            for i in range(nworkers)
        ]
        for t in self._threads:
            t.start()

    def submit(self, ctx, view, nbytes: int) -> None:
        with self._lock:
            if self._stop:
                raise InvalidError("engine is terminated")
            if len(self._inbox) >= self._pending_size:
                raise AgainError("pending ring is full, retry submission")
            self._inner.begin_io()
            self._inbox.append((ctx, view, nbytes))
            self._inbox_ready.notify()

    def _worker(self) -> None:
        while True:
            with self._lock:
                while not self._inbox and not self._stop:
                    self._inbox_ready.wait()
                if self._stop and not self._inbox:
                    return
                ctx, view, nbytes = self._inbox.popleft()
            try:
                cpl, delay = self._inner.exec_timed(ctx.cmd, view, nbytes)
            except Exception:
                # A submission-validated command failing to execute is a
                # backend transport problem, reported on the status channel.
                cpl, delay = Completion(status=Status.INTERNAL), 0
            if delay:
                time.sleep(delay / 1e9)
            with self._lock:
                self._done.append((ctx, cpl))
                self._done_ready.notify_all()

    def reap(self, max_n: int | None):
        out = []
        with self._lock:
            while self._done and (max_n is None or len(out) < max_n):
                ctx, cpl = self._done.popleft()
                ctx.cpl = cpl
                self._inner.end_io()
                out.append(ctx)
        return out

    def wait(self, timeout: float) -> None:
        with self._lock:
            if not self._done:
                self._done_ready.wait(timeout)

    def close(self) -> None:
        with self._lock:
            self._stop = True
            self._inbox_ready.notify_all()
        for t in self._threads:
            t.join(timeout=5.0)


# sync mode is served by the wrapped executor directly; the pool only
# exists for queues
DESCRIPTOR = BackendDescriptor(
    name="thrpool",
    modes=frozenset({MODE_SYNC, MODE_ASYNC}),
    ident_classes=frozenset({"ram", "file"}),
    probe=lambda: True,
    factory=ThrpoolDevice,
)
