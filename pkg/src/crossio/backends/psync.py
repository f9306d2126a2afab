"""Synchronous file backend (pread/pwrite/fsync through the shim)."""

from __future__ import annotations

import os

from ..core import (
    AdminOpcode,
    Command,
    Completion,
    Geometry,
    InvalidError,
    NotFoundError,
    NvmOpcode,
    OPT_FILE_LBADS,
    Status,
    geometry_to_identify,
    validate_command,
)
from .base import BackendDescriptor, BackendDevice, MODE_SYNC
from .shim import shim_translate


class FileDevice(BackendDevice):
    """A plain file exposed as a conventional namespace.

    Geometry is synthesized from the file size: lba_nbytes defaults to
    512 (option "file.lbads" overrides, as log2 of the block size) and
    nsect = floor(filesize / lba_nbytes). IDENTIFY is answered from that
    synthesized geometry; everything else goes through the shim.
    """

    def __init__(self, ident, opts: dict):
        path = ident.name
        if not os.path.isfile(path):
            raise NotFoundError(f"no such file: {path}")
        lbads = opts.get(OPT_FILE_LBADS, "9")
        try:
            lbads = int(lbads)
        except ValueError:
            raise InvalidError(f"file.lbads={lbads!r} is not an integer")
        if not 9 <= lbads <= 20:
            raise InvalidError("file.lbads must be in [9, 20]")
        self._fd = os.open(path, os.O_RDWR)
        nbytes = os.fstat(self._fd).st_size
        self.geometry = Geometry(lba_nbytes=1 << lbads, nsect=nbytes >> lbads)
        self.path = path

    def exec_timed(self, cmd: Command, view, nbytes: int):
        validate_command(cmd, self.geometry, nbytes, view)
        if cmd.opcode == AdminOpcode.IDENTIFY:
            if cmd.admin_cns != 0x00:
                return Completion(status=Status.INVALID_FIELD), 0
            view[:nbytes] = geometry_to_identify(self.geometry, nbytes)
            return Completion(), 0
        op = shim_translate(cmd, self.geometry)
        if op.offset + op.length > self.geometry.nbytes:
            return Completion(status=Status.LBA_OUT_OF_RANGE), 0
        try:
            if op.kind == "read":
                data = os.pread(self._fd, op.length, op.offset)
                if len(data) != op.length:
                    return Completion(status=Status.UNRECOVERED_READ_ERROR), 0
                view[: op.length] = data
            elif op.kind == "write":
                written = os.pwrite(self._fd, view[: op.length], op.offset)
                if written != op.length:
                    return Completion(status=Status.WRITE_FAULT), 0
            else:
                os.fsync(self._fd)
        except OSError:
            status = (
                Status.UNRECOVERED_READ_ERROR
                if op.kind == "read"
                else Status.WRITE_FAULT if op.kind == "write" else Status.INTERNAL
            )
            return Completion(status=status), 0
        return Completion(), 0

    def close(self) -> None:
        if self._fd >= 0:
            os.close(self._fd)
            self._fd = -1


DESCRIPTOR = BackendDescriptor(
    name="psync",
    modes=frozenset({MODE_SYNC}),
    ident_classes=frozenset({"file"}),
    probe=lambda: True,
    factory=FileDevice,
)
