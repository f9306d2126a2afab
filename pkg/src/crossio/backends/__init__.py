"""Storage backends and the default registry.

Priority order (first match wins when options are silent):

1. ``ram``      — the in-memory emulator, for ``ram:`` idents
2. ``io_uring`` — native Linux ring interface, for files (probe-gated)
3. ``psync``    — synchronous pread/pwrite through the fallback shim
4. ``thrpool``  — worker-pool async emulation, for ram and file idents

Naming a backend through the ``be.async``/``be.sync`` options is
binding; the library never substitutes another one silently.
"""

from __future__ import annotations

from .base import (
    BackendDescriptor,
    BackendDevice,
    BackendRegistry,
    MODE_ASYNC,
    MODE_SYNC,
)
from .shim import FileOp, shim_translate
from . import psync, ram, thrpool, uring

__all__ = [
    "BackendDescriptor",
    "BackendDevice",
    "BackendRegistry",
    "FileOp",
    "MODE_ASYNC",
    "MODE_SYNC",
    "default_registry",
    "shim_translate",
]

_default: BackendRegistry | None = None


def default_registry() -> BackendRegistry:
    """The process-wide registry, built once on first use."""
    global _default
    if _default is None:
        reg = BackendRegistry()
        reg.register(ram.DESCRIPTOR)
        reg.register(uring.DESCRIPTOR)
        reg.register(psync.DESCRIPTOR)
        reg.register(thrpool.DESCRIPTOR)
        _default = reg
    return _default
