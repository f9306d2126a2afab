"""NVMe-to-file fallback shim.

Maps the in-scope NVM commands onto plain positional file operations,
treating the file as a flat LBA image with no header. Anything outside
{READ, WRITE, FLUSH} is rejected: plain files have no zones and no
admin surface (IDENTIFY is synthesized one level up, by the backend).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..core import Command, Geometry, InvalidError, NvmOpcode

__all__ = ["FileOp", "shim_translate"]


@dataclass(frozen=True)
class FileOp:
    """One translated file operation."""

    kind: str  # "read" | "write" | "flush"
    offset: int
    length: int


def shim_translate(cmd: Command, geo: Geometry) -> FileOp:
    """Translate an NVMe command into a positional file operation.

    READ/WRITE become pread/pwrite at offset slba*lba_nbytes for
    (nlb+1)*lba_nbytes bytes; FLUSH becomes a durability sync. Whether
    the resulting range fits the file is the executor's business: an
    out-of-range offset is a device-reported status, not a translation
    failure.
    """
    if cmd.opcode == NvmOpcode.READ:
        kind = "read"
    elif cmd.opcode == NvmOpcode.WRITE:
        kind = "write"
    elif cmd.opcode == NvmOpcode.FLUSH:
        return FileOp(kind="flush", offset=0, length=0)
    else:
        raise InvalidError(
            f"opcode 0x{cmd.opcode:02x} has no file-operation mapping"
        )
    return FileOp(
        kind=kind,
        offset=cmd.slba * geo.lba_nbytes,
        length=cmd.nblocks * geo.lba_nbytes,
    )
