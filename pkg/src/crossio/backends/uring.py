"""Native Linux io_uring backend (optional, probe-gated).

Talks to the kernel ring interface directly through raw syscalls and
mmap; no external library. Requires a kernel with IORING_OP_READ/WRITE
(5.6+), discovered via the register-probe interface. On anything older,
or with CROSSIO_NATIVE=0 set, the probe reports unavailable and the
backend degrades to NOSYS at open while the rest of the library keeps
working — availability changes, the API never does.

Submission maps READ/WRITE/FLUSH onto ring SQEs against the flat file
image; IDENTIFY and range violations are answered locally and staged
for the next reap so completions still only surface during poke/drain.
"""

from __future__ import annotations

import ctypes
import mmap
import os
import struct
import sys
import time
from collections import deque

from ..core import (
    AdminOpcode,
    AgainError,
    BusyError,
    Completion,
    Status,
    TransportError,
)
from .base import BackendDescriptor, MODE_ASYNC, MODE_SYNC
from .psync import FileDevice
from .shim import shim_translate

_SYS_SETUP = 425
_SYS_ENTER = 426
_SYS_REGISTER = 427

_OFF_SQ_RING = 0
_OFF_CQ_RING = 0x8000000
_OFF_SQES = 0x10000000

_OP_FSYNC = 3
_OP_READ = 22
_OP_WRITE = 23

_ENTER_GETEVENTS = 1
_REGISTER_PROBE = 8

# struct io_uring_params: 10 u32 (sq_entries..resv[3]) + two offset
# blocks of 8 u32 + 1 u64 each; 120 bytes total.
_PARAMS_FMT = "<10I" + "8IQ" + "8IQ"
_PARAMS_SIZE = struct.calcsize(_PARAMS_FMT)
assert _PARAMS_SIZE == 120

_SQE_SIZE = 64
_CQE_SIZE = 16

_libc = None


def _syscall(number: int, *args) -> int:
    global _libc
    if _libc is None:
        _libc = ctypes.CDLL(None, use_errno=True)
        _libc.syscall.restype = ctypes.c_long
    res = _libc.syscall(ctypes.c_long(number), *args)
    if res < 0:
        raise OSError(ctypes.get_errno(), os.strerror(ctypes.get_errno()))
    return res


class _Params:
    """Decoded io_uring_params (the fields this backend needs)."""

    def __init__(self, raw: bytes):
        vals = struct.unpack(_PARAMS_FMT, raw)
        self.sq_entries = vals[0]
        self.cq_entries = vals[1]
        sq = vals[10:19]
        cq = vals[19:28]
        (self.sq_head, self.sq_tail, self.sq_ring_mask, self.sq_ring_entries,
         _, _, self.sq_array, _, _) = sq
        (self.cq_head, self.cq_tail, self.cq_ring_mask, self.cq_ring_entries,
         _, self.cq_cqes, _, _, _) = cq


def _setup(entries: int):
    raw = ctypes.create_string_buffer(_PARAMS_SIZE)
    fd = _syscall(_SYS_SETUP, ctypes.c_uint(entries), raw)
    return fd, _Params(raw.raw)


def _kernel_supports_rw(fd: int) -> bool:
    nops = 64
    buf = ctypes.create_string_buffer(16 + nops * 8)
    try:
        _syscall(_SYS_REGISTER, ctypes.c_uint(fd), ctypes.c_uint(_REGISTER_PROBE),
                 buf, ctypes.c_uint(nops))
    except OSError:
        return False
    last_op = buf.raw[0]
    if last_op < _OP_WRITE:
        return False
    for opcode in (_OP_READ, _OP_WRITE, _OP_FSYNC):
        flags = struct.unpack_from("<H", buf.raw, 16 + opcode * 8 + 2)[0]
        if not flags & 1:  # IO_URING_OP_SUPPORTED
            return False
    return True


_probe_result: bool | None = None


def probe() -> bool:
    """True when this kernel offers a usable ring (cached per process)."""
    global _probe_result
    if os.environ.get("CROSSIO_NATIVE") == "0":
        return False
    if _probe_result is None:
        if not sys.platform.startswith("linux"):
            _probe_result = False
            return False
        try:
            fd, _ = _setup(2)
        except OSError:
            _probe_result = False
            return False
        try:
            _probe_result = _kernel_supports_rw(fd)
        finally:
            os.close(fd)
    return _probe_result


class UringDevice(FileDevice):
    """File device whose queues submit through an io_uring."""

    def make_engine(self, capacity: int, opts: dict):
        return UringEngine(self, capacity)


class UringEngine:
    def __init__(self, dev: UringDevice, capacity: int):
        self._dev = dev
        self._fd = dev._fd
        self._local: deque = deque()  # completions answered without the ring
        self._inflight: dict[int, tuple] = {}  # user_data -> (ctx, expected_len, kind)
        self._next_token = 1
        try:
            self._ring_fd, p = _setup(capacity)
        except OSError as exc:
            raise TransportError(f"io_uring setup failed: {exc}")
        self._p = p
        sq_size = p.sq_array + p.sq_ring_entries * 4
        cq_size = p.cq_cqes + p.cq_ring_entries * _CQE_SIZE
        flags = mmap.MAP_SHARED | getattr(mmap, "MAP_POPULATE", 0)
        self._sq_mm = mmap.mmap(self._ring_fd, sq_size, flags=flags,
                                offset=_OFF_SQ_RING)
        self._cq_mm = mmap.mmap(self._ring_fd, cq_size, flags=flags,
                                offset=_OFF_CQ_RING)
        self._sqes = mmap.mmap(self._ring_fd, p.sq_ring_entries * _SQE_SIZE,
                               flags=flags, offset=_OFF_SQES)

    # ring accessors; CPython's bytecode boundary doubles as our compiler
    # barrier, and x86 store ordering covers the device side at desk scale
    def _load_u32(self, mm, off: int) -> int:
        return struct.unpack_from("<I", mm, off)[0]

    def _store_u32(self, mm, off: int, value: int) -> None:
        struct.pack_into("<I", mm, off, value)

    def submit(self, ctx, view, nbytes: int) -> None:
        cmd = ctx.cmd
        if cmd.opcode == AdminOpcode.IDENTIFY:
            cpl, _ = self._dev.exec_timed(cmd, view, nbytes)
            self._dev.begin_io()
            self._local.append((ctx, cpl))
            return
        op = shim_translate(cmd, self._dev.geometry)
        if op.offset + op.length > self._dev.geometry.nbytes:
            self._dev.begin_io()
            self._local.append((ctx, Completion(status=Status.LBA_OUT_OF_RANGE)))
            return

        p = self._p
        head = self._load_u32(self._sq_mm, p.sq_head)
        tail = self._load_u32(self._sq_mm, p.sq_tail)
        if tail - head >= p.sq_ring_entries:
            raise AgainError("submission ring is full")

        if op.kind == "read":
            ring_op, addr, length, off = _OP_READ, _addr_of(view), op.length, op.offset
        elif op.kind == "write":
            ring_op, addr, length, off = _OP_WRITE, _addr_of(view), op.length, op.offset
        else:
            ring_op, addr, length, off = _OP_FSYNC, 0, 0, 0

        token = self._next_token
        self._next_token += 1
        idx = tail & p.sq_ring_mask
        sqe = struct.pack(
            "<BBHiQQIIQ", ring_op, 0, 0, self._fd, off, addr, length, 0, token
        )
        base = idx * _SQE_SIZE
        self._sqes[base : base + len(sqe)] = sqe
        self._sqes[base + len(sqe) : base + _SQE_SIZE] = bytes(
            _SQE_SIZE - len(sqe)
        )
        self._store_u32(self._sq_mm, p.sq_array + idx * 4, idx)
        self._store_u32(self._sq_mm, p.sq_tail, tail + 1)
        try:
            _syscall(_SYS_ENTER, ctypes.c_uint(self._ring_fd), ctypes.c_uint(1),
                     ctypes.c_uint(0), ctypes.c_uint(0), None, ctypes.c_size_t(0))
        except OSError as exc:
            self._store_u32(self._sq_mm, p.sq_tail, tail)  # roll back
            if exc.errno in (11, 16):  # EAGAIN, EBUSY
                raise (AgainError if exc.errno == 11 else BusyError)(
                    f"ring submission refused: {exc}"
                )
            raise TransportError(f"io_uring_enter failed: {exc}")
        self._dev.begin_io()
        self._inflight[token] = (ctx, length, op.kind)

    def reap(self, max_n: int | None):
        out = []
        while self._local and (max_n is None or len(out) < max_n):
            ctx, cpl = self._local.popleft()
            ctx.cpl = cpl
            self._dev.end_io()
            out.append(ctx)
        p = self._p
        head = self._load_u32(self._cq_mm, p.cq_head)
        tail = self._load_u32(self._cq_mm, p.cq_tail)
        while head != tail and (max_n is None or len(out) < max_n):
            base = p.cq_cqes + (head & p.cq_ring_mask) * _CQE_SIZE
            token, res = struct.unpack_from("<Qi", self._cq_mm, base)
            head += 1
            self._store_u32(self._cq_mm, p.cq_head, head)
            entry = self._inflight.pop(token, None)
            if entry is None:
                continue
            ctx, expected, kind = entry
            ctx.cpl = _completion_from_res(res, expected, kind)
            self._dev.end_io()
            out.append(ctx)
        return out

    def wait(self, timeout: float) -> None:
        if not self._inflight:
            return
        try:
            _syscall(_SYS_ENTER, ctypes.c_uint(self._ring_fd), ctypes.c_uint(0),
                     ctypes.c_uint(1), ctypes.c_uint(_ENTER_GETEVENTS), None,
                     ctypes.c_size_t(0))
        except OSError:
            time.sleep(min(timeout, 0.0005))

    def close(self) -> None:
        for mm in (self._sqes, self._cq_mm, self._sq_mm):
            mm.close()
        os.close(self._ring_fd)


def _addr_of(view) -> int:
    c_view = (ctypes.c_char * len(view)).from_buffer(view)
    return ctypes.addressof(c_view)


def _completion_from_res(res: int, expected: int, kind: str) -> Completion:
    if res == expected or (kind == "flush" and res >= 0):
        return Completion()
    if kind == "read":
        return Completion(status=Status.UNRECOVERED_READ_ERROR)
    if kind == "write":
        return Completion(status=Status.WRITE_FAULT)
    return Completion(status=Status.INTERNAL)


# sync mode falls back to plain positional file I/O (FileDevice)
DESCRIPTOR = BackendDescriptor(
    name="io_uring",
    modes=frozenset({MODE_SYNC, MODE_ASYNC}),
    ident_classes=frozenset({"file"}),
    probe=probe,
    factory=UringDevice,
)
