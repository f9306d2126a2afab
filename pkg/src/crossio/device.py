"""Device identification, open/close lifecycle and payload buffers.

A device identifier is one of::

    ram:<name>[?nsect=N&lbads=B&zones=Z]   the in-memory emulator
    file:<path>                            a flat file image
    /bare/os/path                          shorthand for file:

Opening resolves a backend for each submission mode (an explicitly
named backend is binding), captures the geometry through the backend's
identify path, and freezes it for the life of the handle. Payload
buffers come from the device so they satisfy every in-scope backend's
direct-I/O alignment without per-backend negotiation.
"""

from __future__ import annotations

import ctypes
import glob
import mmap
import os
import threading
import urllib.parse
from dataclasses import dataclass
from types import MappingProxyType

from . import ramdev
from .backends import MODE_ASYNC, MODE_SYNC, default_registry
from .core import (
    AdminOpcode,
    BusyError,
    Command,
    Geometry,
    InvalidError,
    NoMemoryError,
    NotFoundError,
    OPT_BE_ASYNC,
    OPT_BE_SYNC,
    geometry_from_identify,
    status_is_error,
)

__all__ = [
    "Buffer",
    "Device",
    "DeviceIdent",
    "ENV_DEFAULT_BACKEND",
    "dev_open",
    "enumerate_devices",
    "handle_counts",
]

#: Lowest-precedence default for the "be.async" option key; explicit
#: options always win.
ENV_DEFAULT_BACKEND = "CROSSIO_BE"

BUFFER_MIN_ALIGNMENT = 4096

_counter_lock = threading.Lock()
_open_devices = 0
_live_queues = 0


def _count(what: str, delta: int) -> None:
    global _open_devices, _live_queues
    with _counter_lock:
        if what == "devices":
            _open_devices += delta
        else:
            _live_queues += delta


def handle_counts() -> dict[str, int]:
    """Live handle counters (open devices / live queues), for leak tests."""
    with _counter_lock:
        return {"devices": _open_devices, "queues": _live_queues}


@dataclass(frozen=True)
class DeviceIdent:
    """A parsed device identifier."""

    uri: str
    cls: str  # "ram" | "file"
    name: str  # ram namespace name, or file path
    params: MappingProxyType

    @classmethod
    def parse(cls, text: str) -> "DeviceIdent":
        if not text:
            raise InvalidError("empty device identifier")
        parts = urllib.parse.urlsplit(text)
        if parts.scheme == "ram":
            name = parts.path
            if not name:
                raise InvalidError(f"ram ident {text!r} has no namespace name")
            params = {}
            if parts.query:
                try:
                    params = dict(
                        urllib.parse.parse_qsl(parts.query, strict_parsing=True)
                    )
                except ValueError:
                    raise InvalidError(f"malformed ram URI query {parts.query!r}")
            return cls(uri=text, cls="ram", name=name,
                       params=MappingProxyType(params))
        if parts.scheme == "file":
            path = parts.path
        elif parts.scheme == "":
            path = text
        else:
            raise InvalidError(f"unknown device identifier scheme {parts.scheme!r}")
        if not path:
            raise InvalidError(f"file ident {text!r} has no path")
        return cls(uri=text, cls="file", name=path,
                   params=MappingProxyType({}))


class Buffer:
    """Alignment-aware payload buffer tied to the device it came from.

    Backed by an anonymous mapping, zero-initialized, with its start
    address a multiple of max(lba_nbytes, 4096). ``data`` is a writable
    memoryview of exactly the requested size.
    """

    def __init__(self, dev: "Device", nbytes: int, alignment: int):
        if nbytes <= 0:
            raise InvalidError("buffer size must be positive")
        try:
            self._mm = mmap.mmap(-1, nbytes + alignment)
        except (OSError, OverflowError, ValueError) as exc:
            raise NoMemoryError(f"cannot allocate {nbytes} bytes: {exc}")
        base = ctypes.addressof(ctypes.c_char.from_buffer(self._mm))
        offset = (-base) % alignment
        self.data = memoryview(self._mm)[offset : offset + nbytes]
        self.nbytes = nbytes
        self.alignment = alignment
        self.address = base + offset
        self._dev = dev
        self._freed = False

    def __len__(self) -> int:
        return self.nbytes

    def to_bytes(self) -> bytes:
        return bytes(self.data)

    def fill(self, data: bytes) -> None:
        """Copy ``data`` into the front of the buffer."""
        if len(data) > self.nbytes:
            raise InvalidError("data larger than buffer")
        self.data[: len(data)] = data

    def _release(self) -> None:
        self.data.release()
        self._mm.close()
        self._freed = True


class Device:
    """An open device handle: resolved backends plus frozen geometry."""

    def __init__(self, ident: DeviceIdent, backend: str, geometry: Geometry,
                 sync_be, async_be, opts: dict):
        self.ident = ident
        self.backend = backend
        self.geometry = geometry
        self._sync_be = sync_be
        self._async_be = async_be
        self._opts = opts
        self._buffers: set[int] = set()
        self._buffer_objs: list[Buffer] = []
        self._nqueues = 0
        self._closed = False
        _count("devices", +1)

    # -- lifecycle -------------------------------------------------------

    @property
    def is_open(self) -> bool:
        return not self._closed

    def _check_open(self) -> None:
        if self._closed:
            raise InvalidError(f"device {self.ident.uri!r} is closed")

    def close(self) -> None:
        """Release the handle. Idempotent; fails BUSY with live queues."""
        if self._closed:
            return
        if self._nqueues:
            raise BusyError(f"{self._nqueues} queue(s) still reference the device")
        for buf in self._buffer_objs:
            if not buf._freed:
                buf._release()
        self._buffers.clear()
        self._buffer_objs.clear()
        self._sync_be.close()
        if self._async_be is not self._sync_be:
            self._async_be.close()
        self._closed = True
        _count("devices", -1)

    def __enter__(self) -> "Device":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- geometry & buffers ------------------------------------------------

    @property
    def geo(self) -> Geometry:
        """The geometry captured at open (INVAL once closed)."""
        self._check_open()
        return self.geometry

    def buf_alloc(self, nbytes: int) -> Buffer:
        """Zero-initialized buffer satisfying the device's alignment."""
        self._check_open()
        alignment = max(self.geometry.lba_nbytes, BUFFER_MIN_ALIGNMENT)
        buf = Buffer(self, nbytes, alignment)
        self._buffers.add(id(buf))
        self._buffer_objs.append(buf)
        return buf

    def buf_free(self, buf: Buffer) -> None:
        """Release a buffer allocated from this device exactly once."""
        self._check_open()
        if not isinstance(buf, Buffer) or id(buf) not in self._buffers:
            raise InvalidError("buffer does not belong to this device")
        if buf._freed:
            raise InvalidError("buffer already freed")
        buf._release()
        self._buffers.discard(id(buf))
        self._buffer_objs.remove(buf)


def _effective_options(opts) -> dict:
    merged: dict = {}
    env_default = os.environ.get(ENV_DEFAULT_BACKEND)
    if env_default:
        merged[OPT_BE_ASYNC] = env_default
    if opts:
        merged.update(opts)
    return merged


def dev_open(ident: str | DeviceIdent, opts=None, *, registry=None) -> Device:
    """Open a device identifier and return a live handle.

    Backend selection honours ``be.async``/``be.sync`` when present
    (NODEV for an unknown name, NOSYS when the named backend's probe
    fails on this platform) and otherwise picks the highest-priority
    available backend for the identifier class. Geometry comes from the
    resolved backend's identify path and never changes afterwards.
    """
    if not isinstance(ident, DeviceIdent):
        ident = DeviceIdent.parse(ident)
    opts = _effective_options(opts)
    registry = registry or default_registry()

    if ident.cls == "ram":
        ramdev.open_from_ident(ident)

    async_desc = registry.resolve(ident, opts, MODE_ASYNC)
    sync_desc = registry.resolve(ident, opts, MODE_SYNC)

    async_be = async_desc.factory(ident, opts)
    sync_be = async_be if sync_desc.name == async_desc.name else sync_desc.factory(ident, opts)

    geometry = _identify_geometry(sync_be)

    # The reported name is the backend the caller pinned, else the
    # resolved asynchronous path (the library's primary identity).
    if OPT_BE_ASYNC in opts:
        backend = opts[OPT_BE_ASYNC]
    elif OPT_BE_SYNC in opts:
        backend = opts[OPT_BE_SYNC]
    else:
        backend = async_desc.name

    return Device(ident, backend, geometry, sync_be, async_be, opts)


def _identify_geometry(backend_dev) -> Geometry:
    nbytes = 4096
    payload = bytearray(nbytes)
    cmd = Command(opcode=AdminOpcode.IDENTIFY, admin_cns=0x00)
    cpl = backend_dev.exec_cmd(cmd, memoryview(payload), nbytes)
    if status_is_error(cpl):
        raise NotFoundError(
            f"identify failed with status 0x{cpl.status:04x}"
        )
    return geometry_from_identify(payload)


def enumerate_devices() -> list[str]:
    """Every currently openable identifier, lexicographically sorted.

    Registered ram namespaces plus NVMe block nodes readable without
    elevated privileges. Never raises; may be empty.
    """
    idents = [f"ram:{name}" for name in ramdev.ram_list()]
    for path in glob.glob("/dev/nvme*n*"):
        if os.access(path, os.R_OK):
            idents.append(path)
    return sorted(idents)
