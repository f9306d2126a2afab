"""Command-construction and completion-decoding helpers.

Builders hide the NVMe off-by-one: they take a one-based block count at
the API surface and store the zero-based ``nlb`` in the wire record.
All builders are pure and return value-type commands; nothing here
touches a device.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

from .core import AdminOpcode, Command, Completion, InvalidError, NvmOpcode
from .ramdev import ZM_ACTION_RESET, ZONE_RECORD_NBYTES, ZRA_REPORT

__all__ = [
    "ReportedZone",
    "StatusClass",
    "StatusInfo",
    "build_flush",
    "build_identify",
    "build_read",
    "build_write",
    "build_zone_append",
    "build_zone_report",
    "build_zone_reset",
    "decode_status",
    "decode_zone_report",
    "zone_report_nbytes",
]

NBLOCKS_MAX = 65536  # nlb is 16-bit and zero-based

CNS_NAMESPACE = 0x00


def _check_lba(slba: int) -> None:
    if not isinstance(slba, int) or slba < 0 or slba > 0xFFFF_FFFF_FFFF_FFFF:
        raise InvalidError(f"slba {slba!r} out of range")


def _check_nblocks(nblocks: int) -> None:
    if not isinstance(nblocks, int) or not 1 <= nblocks <= NBLOCKS_MAX:
        raise InvalidError(f"nblocks must be in [1, {NBLOCKS_MAX}], got {nblocks!r}")


def build_read(slba: int, nblocks: int) -> Command:
    """READ of ``nblocks`` blocks starting at ``slba``."""
    _check_lba(slba)
    _check_nblocks(nblocks)
    return Command(opcode=NvmOpcode.READ, slba=slba, nlb=nblocks - 1)


def build_write(slba: int, nblocks: int) -> Command:
    """WRITE of ``nblocks`` blocks starting at ``slba``."""
    _check_lba(slba)
    _check_nblocks(nblocks)
    return Command(opcode=NvmOpcode.WRITE, slba=slba, nlb=nblocks - 1)


def build_flush() -> Command:
    return Command(opcode=NvmOpcode.FLUSH)


def build_identify(cns: int = CNS_NAMESPACE) -> Command:
    if not 0 <= cns <= 0xFF:
        raise InvalidError(f"identify selector {cns!r} out of range")
    return Command(opcode=AdminOpcode.IDENTIFY, admin_cns=cns)


def build_zone_append(zslba: int, nblocks: int) -> Command:
    """Append ``nblocks`` blocks at the write pointer of the zone
    starting at ``zslba``; the assigned LBA comes back in the result."""
    _check_lba(zslba)
    _check_nblocks(nblocks)
    return Command(opcode=NvmOpcode.ZONE_APPEND, slba=zslba, nlb=nblocks - 1)


def build_zone_reset(zslba: int) -> Command:
    _check_lba(zslba)
    return Command(
        opcode=NvmOpcode.ZONE_MGMT_SEND, slba=zslba, zm_action=ZM_ACTION_RESET
    )


def build_zone_report() -> Command:
    return Command(opcode=NvmOpcode.ZONE_MGMT_RECV, zra=ZRA_REPORT)


def zone_report_nbytes(nzones: int) -> int:
    """Payload size needed to report ``nzones`` zones."""
    return 8 + nzones * ZONE_RECORD_NBYTES


_ZONE_STATE_NAMES = {0: "EMPTY", 1: "OPEN", 2: "FULL"}


@dataclass(frozen=True)
class ReportedZone:
    """One zone record as decoded from a zone-report payload."""

    zslba: int
    wp: int
    state: int

    @property
    def state_name(self) -> str:
        return _ZONE_STATE_NAMES.get(self.state, f"UNKNOWN({self.state})")


def decode_zone_report(payload) -> tuple[int, list[ReportedZone]]:
    """Decode a zone-report payload into (total zones, reported zones).

    The total may exceed the reported list when the payload only had
    room for a prefix.
    """
    view = memoryview(payload)
    if len(view) < 8:
        raise InvalidError("zone report payload too short")
    (total,) = struct.unpack_from("<Q", view, 0)
    nfit = (len(view) - 8) // ZONE_RECORD_NBYTES
    zones = []
    for i in range(min(total, nfit)):
        zslba, wp, state = struct.unpack_from("<QQB", view, 8 + i * ZONE_RECORD_NBYTES)
        zones.append(ReportedZone(zslba=zslba, wp=wp, state=state))
    return total, zones


class StatusClass(enum.Enum):
    SUCCESS = "success"
    MEDIA = "media"
    RANGE = "range"
    ZONE = "zone"
    GENERIC = "generic"


@dataclass(frozen=True)
class StatusInfo:
    klass: StatusClass
    status: int
    text: str


_SCT_COMMAND_SPECIFIC = 0x1
_SCT_MEDIA = 0x2
_ZONE_SC_RANGE = range(0xB8, 0xC0)

_STATUS_TEXT = {
    0x0000: "success",
    0x0001: "invalid command opcode",
    0x0002: "invalid field in command",
    0x0006: "internal error",
    0x0080: "LBA out of range",
    0x01B8: "zone boundary error",
    0x01B9: "zone is full",
    0x01BA: "zone is read only",
    0x01BB: "zone is offline",
    0x01BC: "zone invalid write",
    0x0280: "write fault",
    0x0281: "unrecovered read error",
}


def decode_status(cpl: Completion) -> StatusInfo:
    """Classify a completion status; total over all 16-bit values.

    Unknown codes land in the generic class with the raw value kept in
    the text.
    """
    status = cpl.status
    text = _STATUS_TEXT.get(status, f"unknown status 0x{status:04x}")
    if status == 0:
        return StatusInfo(StatusClass.SUCCESS, status, text)
    sct = (status >> 8) & 0x7
    sc = status & 0xFF
    if status == 0x0080:
        return StatusInfo(StatusClass.RANGE, status, text)
    if sct == _SCT_MEDIA:
        return StatusInfo(StatusClass.MEDIA, status, text)
    if sct == _SCT_COMMAND_SPECIFIC and sc in _ZONE_SC_RANGE:
        return StatusInfo(StatusClass.ZONE, status, text)
    return StatusInfo(StatusClass.GENERIC, status, text)
