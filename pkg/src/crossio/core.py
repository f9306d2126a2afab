"""Core vocabulary: commands, completions, geometry, options and errors.

Everything here is a plain value type. Commands travel from the caller
down to a backend, completions travel back up. Failures use two disjoint
channels that never alias:

* submission-path failures raise :class:`IoError` subclasses, and
* device-reported failures come back as a nonzero :class:`Completion`
  status, never as an exception.

Opcode and status numerics follow the published NVMe Base and Zoned
Namespace command-set tables. The 16-bit status value packs the status
code type into bits 10:8 and the status code into bits 7:0, i.e.
``(sct << 8) | sc``.
"""

from __future__ import annotations

import enum
import errno
import re
import struct
from dataclasses import dataclass

__all__ = [
    "AdminOpcode",
    "Command",
    "Completion",
    "ErrorCode",
    "Geometry",
    "GeometryKind",
    "IoError",
    "InvalidError",
    "NotFoundError",
    "NoDeviceError",
    "BusyError",
    "AgainError",
    "TransportError",
    "NotSupportedError",
    "NoMemoryError",
    "NvmOpcode",
    "Status",
    "OPT_BE_ASYNC",
    "OPT_BE_SYNC",
    "OPT_FILE_LBADS",
    "OPT_RAM_PENDING",
    "OPT_THRPOOL_PENDING",
    "OPT_THRPOOL_WORKERS",
    "geometry_from_identify",
    "geometry_to_identify",
    "options_default",
    "options_parse",
    "options_render",
    "status_is_error",
    "validate_command",
]


class ErrorCode(enum.IntEnum):
    """Closed set of submission-error classes, negative-errno valued."""

    INVAL = -errno.EINVAL
    NOENT = -errno.ENOENT
    NODEV = -errno.ENODEV
    BUSY = -errno.EBUSY
    AGAIN = -errno.EAGAIN
    IO = -errno.EIO
    NOSYS = -errno.ENOSYS
    NOMEM = -errno.ENOMEM


class IoError(Exception):
    """Base class for submission-path failures.

    Device-reported failures never raise; they are delivered as a nonzero
    ``Completion.status`` instead.
    """

    code: ErrorCode

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return f"[{self.code.name}] {self.message}"


class InvalidError(IoError):
    code = ErrorCode.INVAL


class NotFoundError(IoError):
    code = ErrorCode.NOENT


class NoDeviceError(IoError):
    code = ErrorCode.NODEV


class BusyError(IoError):
    code = ErrorCode.BUSY


class AgainError(IoError):
    code = ErrorCode.AGAIN


class TransportError(IoError):
    code = ErrorCode.IO


class NotSupportedError(IoError):
    code = ErrorCode.NOSYS


class NoMemoryError(IoError):
    code = ErrorCode.NOMEM


class NvmOpcode(enum.IntEnum):
    """I/O command set opcodes (NVM + zoned)."""

    FLUSH = 0x00
    WRITE = 0x01
    READ = 0x02
    ZONE_MGMT_SEND = 0x79
    ZONE_MGMT_RECV = 0x7A
    ZONE_APPEND = 0x7D


class AdminOpcode(enum.IntEnum):
    """Admin command set opcodes.

    GET_LOG_PAGE shares the numeric value 0x02 with NVM READ; the two
    live in different command sets. This library routes all execution
    through a single submission path, so an executed 0x02 always means
    READ and GET_LOG_PAGE is defined for completeness only.
    """

    GET_LOG_PAGE = 0x02
    IDENTIFY = 0x06


class Status(enum.IntEnum):
    """Completion status values, ``(sct << 8) | sc`` packed."""

    SUCCESS = 0x0000
    INVALID_OPCODE = 0x0001
    INVALID_FIELD = 0x0002
    INTERNAL = 0x0006
    LBA_OUT_OF_RANGE = 0x0080
    ZONE_BOUNDARY_ERROR = 0x01B8
    ZONE_IS_FULL = 0x01B9
    ZONE_IS_READ_ONLY = 0x01BA
    ZONE_IS_OFFLINE = 0x01BB
    ZONE_INVALID_WRITE = 0x01BC
    WRITE_FAULT = 0x0280
    UNRECOVERED_READ_ERROR = 0x0281


_U8 = 0xFF
_U16 = 0xFFFF
_U32 = 0xFFFF_FFFF
_U64 = 0xFFFF_FFFF_FFFF_FFFF

# Opcodes that move (nlb+1) blocks of data.
_DATA_OPCODES = frozenset(
    {NvmOpcode.READ, NvmOpcode.WRITE, NvmOpcode.ZONE_APPEND}
)
_ZONED_OPCODES = frozenset(
    {NvmOpcode.ZONE_MGMT_SEND, NvmOpcode.ZONE_MGMT_RECV, NvmOpcode.ZONE_APPEND}
)
_KNOWN_OPCODES = frozenset(int(op) for op in NvmOpcode) | {
    int(AdminOpcode.IDENTIFY)
}

#: Minimum payload size accepted for an IDENTIFY command (the encoded
#: geometry record; anything beyond it is zero-filled).
IDENTIFY_MIN_NBYTES = 25

#: Minimum payload size for a zone report (the 8-byte zone count header).
ZONE_REPORT_MIN_NBYTES = 8


@dataclass(frozen=True)
class Command:
    """One NVMe-style command record, the unit of all I/O and admin work.

    ``nlb`` is zero-based per NVMe convention: a value of n transfers n+1
    logical blocks for READ/WRITE/ZONE_APPEND. Admin fields are ignored
    by I/O opcodes and vice versa.
    """

    opcode: int = 0
    nsid: int = 0
    slba: int = 0
    nlb: int = 0
    admin_cns: int = 0
    zm_action: int = 0
    zra: int = 0

    def __post_init__(self):
        for name, limit in (
            ("opcode", _U8),
            ("nsid", _U32),
            ("slba", _U64),
            ("nlb", _U16),
            ("admin_cns", _U8),
            ("zm_action", _U8),
            ("zra", _U8),
        ):
            value = getattr(self, name)
            if not isinstance(value, int) or not 0 <= value <= limit:
                raise InvalidError(f"command field {name}={value!r} out of range")
        if self.opcode in _DATA_OPCODES and self.slba + self.nlb + 1 > _U64 + 1:
            raise InvalidError("slba + (nlb+1) overflows 64 bits")

    @property
    def nblocks(self) -> int:
        """One-based block count for data-bearing opcodes."""
        return self.nlb + 1


@dataclass(frozen=True)
class Completion:
    """Device-reported outcome of one command.

    ``status`` of zero means success and makes ``result`` meaningful for
    the opcode (e.g. the assigned LBA for ZONE_APPEND); nonzero status
    leaves data buffers unspecified.
    """

    status: int = 0
    result: int = 0

    def __post_init__(self):
        if not 0 <= self.status <= _U16:
            raise InvalidError(f"completion status {self.status!r} out of range")
        if not 0 <= self.result <= _U64:
            raise InvalidError(f"completion result {self.result!r} out of range")


def status_is_error(cpl: Completion) -> bool:
    """True iff the completion carries a device-reported failure."""
    return cpl.status != 0


class GeometryKind(enum.IntEnum):
    CONVENTIONAL = 0
    ZONED = 1


@dataclass(frozen=True)
class Geometry:
    """Immutable description of an open device's addressable space."""

    lba_nbytes: int
    nsect: int
    nzones: int = 0
    zone_nsect: int = 0
    kind: GeometryKind = GeometryKind.CONVENTIONAL

    def __post_init__(self):
        if self.lba_nbytes < 512 or self.lba_nbytes & (self.lba_nbytes - 1):
            raise InvalidError(
                f"lba_nbytes={self.lba_nbytes} must be a power of two >= 512"
            )
        if self.nsect < 0:
            raise InvalidError("nsect must be non-negative")
        if self.kind == GeometryKind.ZONED:
            if self.nzones < 1 or self.zone_nsect < 1:
                raise InvalidError("zoned geometry needs nzones >= 1 and zone_nsect >= 1")
            if self.nzones * self.zone_nsect != self.nsect:
                raise InvalidError(
                    f"nzones*zone_nsect ({self.nzones}*{self.zone_nsect}) != nsect ({self.nsect})"
                )
        elif self.nzones != 0 or self.zone_nsect != 0:
            raise InvalidError("conventional geometry must have zero zones")

    @property
    def nbytes(self) -> int:
        return self.nsect * self.lba_nbytes


# IDENTIFY payload layout (little-endian):
#   bytes 0-7   nsect
#   bytes 8-11  lba_nbytes
#   bytes 12-15 nzones
#   bytes 16-23 zone_nsect
#   byte  24    kind (0 conventional, 1 zoned)
# Remaining payload bytes are zero. Bit-exact across language bindings.
_IDENTIFY_STRUCT = struct.Struct("<QIIQB")


def geometry_to_identify(geo: Geometry, nbytes: int = IDENTIFY_MIN_NBYTES) -> bytes:
    """Encode a geometry into an IDENTIFY payload of ``nbytes`` bytes."""
    if nbytes < IDENTIFY_MIN_NBYTES:
        raise InvalidError(f"identify payload needs >= {IDENTIFY_MIN_NBYTES} bytes")
    out = bytearray(nbytes)
    _IDENTIFY_STRUCT.pack_into(
        out, 0, geo.nsect, geo.lba_nbytes, geo.nzones, geo.zone_nsect, int(geo.kind)
    )
    return bytes(out)


def geometry_from_identify(payload: bytes | bytearray | memoryview) -> Geometry:
    """Decode an IDENTIFY payload back into a Geometry."""
    if len(payload) < IDENTIFY_MIN_NBYTES:
        raise InvalidError("identify payload too short")
    nsect, lba_nbytes, nzones, zone_nsect, kind = _IDENTIFY_STRUCT.unpack_from(
        payload, 0
    )
    return Geometry(
        lba_nbytes=lba_nbytes,
        nsect=nsect,
        nzones=nzones,
        zone_nsect=zone_nsect,
        kind=GeometryKind(kind),
    )


# --- Options ----------------------------------------------------------

#: Reserved option keys. Present keys are binding: open fails rather
#: than silently substituting another backend.
OPT_BE_ASYNC = "be.async"
OPT_BE_SYNC = "be.sync"
OPT_FILE_LBADS = "file.lbads"
OPT_THRPOOL_WORKERS = "thrpool.workers"
OPT_THRPOOL_PENDING = "thrpool.pending"
OPT_RAM_PENDING = "ram.pending"

_OPT_TOKEN = re.compile(r"[A-Za-z0-9._/:-]+\Z")

Options = dict


def options_default() -> dict[str, str]:
    """Empty binding set: every key absent, the library decides."""
    return {}


def options_parse(text: str) -> dict[str, str]:
    """Parse a comma-separated ``key=value`` list into an option map.

    Later duplicates override earlier ones. Raises InvalidError on a
    pair without '=' or with characters outside ``[A-Za-z0-9._/:-]``.
    """
    opts: dict[str, str] = {}
    if not text:
        return opts
    for pair in text.split(","):
        key, sep, value = pair.partition("=")
        if not sep:
            raise InvalidError(f"malformed option pair {pair!r} (missing '=')")
        if not _OPT_TOKEN.match(key) or not _OPT_TOKEN.match(value):
            raise InvalidError(f"malformed option pair {pair!r}")
        opts[key] = value
    return opts


def options_render(opts: dict[str, str]) -> str:
    """Render an option map back into the comma-separated grammar.

    Keys are emitted in sorted order so the output is deterministic;
    ``options_parse(options_render(o)) == o`` for every well-formed map.
    """
    for key, value in opts.items():
        if not _OPT_TOKEN.match(key) or not _OPT_TOKEN.match(str(value)):
            raise InvalidError(f"option {key!r}={value!r} not renderable")
    return ",".join(f"{k}={opts[k]}" for k in sorted(opts))


# --- Shared command validation ----------------------------------------


def _payload_len(payload) -> int:
    if payload is None:
        return 0
    if hasattr(payload, "nbytes") and not isinstance(payload, memoryview):
        return payload.nbytes  # Buffer
    return len(memoryview(payload))


def validate_command(cmd: Command, geo: Geometry, nbytes: int, payload=None) -> None:
    """Check a command against a device geometry and its payload size.

    Raises InvalidError for anything malformed at submission time:
    unknown opcode, zone opcode on a conventional device, payload size
    not matching the command, or a payload smaller than ``nbytes``.
    Runtime conditions (out-of-range LBA, write-pointer violations)
    are not checked here; those are device-reported statuses.
    """
    if cmd.opcode not in _KNOWN_OPCODES:
        raise InvalidError(f"opcode 0x{cmd.opcode:02x} is not executable")
    if cmd.opcode in _ZONED_OPCODES and geo.kind != GeometryKind.ZONED:
        raise InvalidError(
            f"opcode 0x{cmd.opcode:02x} requires a zoned device"
        )
    if nbytes < 0:
        raise InvalidError("nbytes must be non-negative")

    if cmd.opcode in _DATA_OPCODES:
        expect = cmd.nblocks * geo.lba_nbytes
        if nbytes != expect:
            raise InvalidError(
                f"payload nbytes={nbytes} != (nlb+1)*lba_nbytes={expect}"
            )
    elif cmd.opcode in (NvmOpcode.FLUSH, NvmOpcode.ZONE_MGMT_SEND):
        if nbytes != 0:
            raise InvalidError("opcode carries no data; nbytes must be 0")
    elif cmd.opcode == NvmOpcode.ZONE_MGMT_RECV:
        if nbytes < ZONE_REPORT_MIN_NBYTES:
            raise InvalidError(
                f"zone report payload needs >= {ZONE_REPORT_MIN_NBYTES} bytes"
            )
    elif cmd.opcode == AdminOpcode.IDENTIFY:
        if nbytes < IDENTIFY_MIN_NBYTES:
            raise InvalidError(
                f"identify payload needs >= {IDENTIFY_MIN_NBYTES} bytes"
            )

    if nbytes > 0:
        if payload is None:
            raise InvalidError("command moves data but no payload was given")
        if _payload_len(payload) < nbytes:
            raise InvalidError(
                f"payload holds {_payload_len(payload)} bytes, command needs {nbytes}"
            )
