"""Deterministic in-memory NVMe namespace emulator.

This is the always-available reference device. It keeps a flat byte
store plus one write pointer per zone, executes the NVM and zoned
command sets, and supports deterministic fault injection and an
artificial latency model for error-path and reordering tests.

Identical (geometry, fault schedule, command sequence) always produces
identical completions and an identical snapshot digest. Execution is
serialized internally, so multiple queues may target one namespace
concurrently; the internal execution order is the completion-schedule
ground truth.
"""

from __future__ import annotations

import hashlib
import struct
import threading
from array import array
from dataclasses import dataclass, field

from . import _kernels
from .core import (
    AdminOpcode,
    BusyError,
    Command,
    Completion,
    Geometry,
    GeometryKind,
    InvalidError,
    NotFoundError,
    NvmOpcode,
    Status,
    geometry_to_identify,
    validate_command,
)

__all__ = [
    "FaultRule",
    "LatencyRule",
    "RamNamespace",
    "ZoneState",
    "ZONE_STATE_EMPTY",
    "ZONE_STATE_OPEN",
    "ZONE_STATE_FULL",
    "ZM_ACTION_RESET",
    "ZRA_REPORT",
    "ram_create",
    "ram_destroy",
    "ram_get",
    "ram_list",
]

# Zone management send action (NVMe ZSA value) and receive action in scope.
ZM_ACTION_RESET = 0x04
ZRA_REPORT = 0x00

# Zone state encoding used in the zone-report payload (artifact-defined).
ZONE_STATE_EMPTY = 0
ZONE_STATE_OPEN = 1
ZONE_STATE_FULL = 2

_ZONE_STATE_NAMES = {
    ZONE_STATE_EMPTY: "EMPTY",
    ZONE_STATE_OPEN: "OPEN",
    ZONE_STATE_FULL: "FULL",
}

# Zone-report payload layout (little-endian): an 8-byte total zone
# count, then per reported zone 24 bytes: zslba(8) wp(8) state(1) pad(7).
# As many zone records as fit the payload are emitted. Bit-exact across
# language bindings.
_ZONE_RECORD = struct.Struct("<QQB7x")
ZONE_RECORD_NBYTES = _ZONE_RECORD.size


@dataclass(frozen=True)
class ZoneState:
    """Observable state of one zone, derived from its write pointer."""

    zslba: int
    wp: int
    zone_nsect: int

    @property
    def state(self) -> int:
        if self.wp == self.zslba:
            return ZONE_STATE_EMPTY
        if self.wp == self.zslba + self.zone_nsect:
            return ZONE_STATE_FULL
        return ZONE_STATE_OPEN

    @property
    def state_name(self) -> str:
        return _ZONE_STATE_NAMES[self.state]


@dataclass
class FaultRule:
    """One scheduled fault: the Nth command matching the filter completes
    with ``status`` instead of executing (no side effects).

    ``opcode`` of None matches any opcode; ``slba_range`` is an inclusive
    (lo, hi) filter on the command's slba; ``occurrence`` counts matching
    commands starting at 1. A rule fires once and is then consumed.
    """

    status: int
    opcode: int | None = None
    slba_range: tuple[int, int] | None = None
    occurrence: int = 1
    _seen: int = field(default=0, repr=False)
    _consumed: bool = field(default=False, repr=False)

    def _matches(self, cmd: Command) -> bool:
        if self.opcode is not None and cmd.opcode != self.opcode:
            return False
        if self.slba_range is not None:
            lo, hi = self.slba_range
            if not lo <= cmd.slba <= hi:
                return False
        return True

    def _fire(self, cmd: Command) -> bool:
        if self._consumed or not self._matches(cmd):
            return False
        self._seen += 1
        if self._seen == self.occurrence:
            self._consumed = True
            return True
        return False


@dataclass
class LatencyRule:
    """Artificial completion-visibility delay for matching commands.

    Delays when a completion becomes observable, never what the command
    did to the store, so data state stays deterministic. ``occurrence``
    of None applies to every match; an integer applies to the Nth match
    only.
    """

    delay_ns: int
    opcode: int | None = None
    occurrence: int | None = 1
    _seen: int = field(default=0, repr=False)

    def _delay_for(self, cmd: Command) -> int:
        if self.opcode is not None and cmd.opcode != self.opcode:
            return 0
        if self.occurrence is None:
            return self.delay_ns
        self._seen += 1
        return self.delay_ns if self._seen == self.occurrence else 0


class RamNamespace:
    """One emulated namespace: geometry, byte store, zones, fault plan."""

    def __init__(self, name: str, geometry: Geometry):
        self.name = name
        self.geometry = geometry
        self._store = bytearray(geometry.nbytes)
        nz = geometry.nzones
        self._wp = array("Q", (z * geometry.zone_nsect for z in range(nz)))
        self._faults: list[FaultRule] = []
        self._latency: list[LatencyRule] = []
        self._lock = threading.Lock()
        self._inflight = 0

    # -- test/observability surface ------------------------------------

    def zones(self) -> list[ZoneState]:
        """Snapshot of all zone states (empty list when conventional)."""
        zsz = self.geometry.zone_nsect
        with self._lock:
            return [
                ZoneState(zslba=i * zsz, wp=wp, zone_nsect=zsz)
                for i, wp in enumerate(self._wp)
            ]

    def inject(self, schedule: list[FaultRule]) -> None:
        """Replace the fault schedule; occurrence counters start fresh."""
        with self._lock:
            self._faults = list(schedule)
            for rule in self._faults:
                rule._seen = 0
                rule._consumed = False

    def set_latency(self, schedule: list[LatencyRule]) -> None:
        """Replace the latency model (empty list turns it off)."""
        with self._lock:
            self._latency = list(schedule)
            for rule in self._latency:
                rule._seen = 0

    def snapshot(self) -> str:
        """Deterministic digest of store plus zone state.

        Equal digests mean equal observable state. For a conventional
        namespace the digest covers exactly the store bytes, so it is
        directly comparable with a digest of a flat file image.
        """
        with self._lock:
            if self._inflight:
                raise BusyError(
                    f"{self._inflight} command(s) in flight on ram:{self.name}"
                )
            h = hashlib.sha256()
            h.update(self._store)
            zsz = self.geometry.zone_nsect
            for i, wp in enumerate(self._wp):
                zone = ZoneState(zslba=i * zsz, wp=wp, zone_nsect=zsz)
                h.update(_ZONE_RECORD.pack(zone.zslba, zone.wp, zone.state))
            return h.hexdigest()

    # -- engine hooks ----------------------------------------------------

    def begin_io(self) -> None:
        with self._lock:
            self._inflight += 1

    def end_io(self) -> None:
        with self._lock:
            self._inflight -= 1

    # -- execution ---------------------------------------------------------

    def execute(self, cmd: Command, payload=None, nbytes: int | None = None):
        """Execute one command; returns (Completion, visibility_delay_ns).

        Submission-shape problems (unknown opcode, size mismatch, zone
        opcode on a conventional namespace) raise InvalidError; every
        device-level failure is a Completion status.
        """
        view = _as_view(payload)
        if nbytes is None:
            nbytes = len(view) if view is not None else 0
        validate_command(cmd, self.geometry, nbytes, view)
        # wildcard (opcode=None) rules target the I/O stream; admin
        # commands like the identify issued at open never consume them
        is_admin = cmd.opcode == AdminOpcode.IDENTIFY
        with self._lock:
            delay = 0
            for lrule in self._latency:
                if lrule.opcode is None and is_admin:
                    continue
                delay = max(delay, lrule._delay_for(cmd))
            for frule in self._faults:
                if frule.opcode is None and is_admin:
                    continue
                if frule._fire(cmd):
                    return Completion(status=frule.status), delay
            return self._dispatch(cmd, view, nbytes), delay

    def _dispatch(self, cmd: Command, view, nbytes: int) -> Completion:
        geo = self.geometry
        op = cmd.opcode

        if op == NvmOpcode.FLUSH:
            # The store is always durable; flush has nothing to do.
            return Completion()

        if op == NvmOpcode.READ:
            status = _kernels.nvm_rw(
                self._store, geo.lba_nbytes, geo.nsect, cmd.slba, cmd.nblocks,
                view, False,
            )
            return Completion(status=status)

        if op == NvmOpcode.WRITE:
            if geo.kind == GeometryKind.ZONED:
                status = _kernels.zoned_write(
                    self._store, geo.lba_nbytes, geo.nsect, geo.zone_nsect,
                    self._wp, cmd.slba, cmd.nblocks, view,
                )
            else:
                status = _kernels.nvm_rw(
                    self._store, geo.lba_nbytes, geo.nsect, cmd.slba,
                    cmd.nblocks, view, True,
                )
            return Completion(status=status)

        if op == NvmOpcode.ZONE_APPEND:
            zidx, status = self._zone_index(cmd.slba, require_start=True)
            if status:
                return Completion(status=status)
            status, assigned = _kernels.zone_append(
                self._store, geo.lba_nbytes, geo.zone_nsect, self._wp,
                zidx, cmd.nblocks, view,
            )
            return Completion(status=status, result=assigned)

        if op == NvmOpcode.ZONE_MGMT_SEND:
            if cmd.zm_action != ZM_ACTION_RESET:
                return Completion(status=Status.INVALID_FIELD)
            zidx, status = self._zone_index(cmd.slba, require_start=True)
            if status:
                return Completion(status=status)
            _kernels.zone_reset(
                self._store, geo.lba_nbytes, geo.zone_nsect, self._wp, zidx
            )
            return Completion()

        if op == NvmOpcode.ZONE_MGMT_RECV:
            if cmd.zra != ZRA_REPORT:
                return Completion(status=Status.INVALID_FIELD)
            self._fill_zone_report(view, nbytes)
            return Completion()

        if op == AdminOpcode.IDENTIFY:
            if cmd.admin_cns != 0x00:
                return Completion(status=Status.INVALID_FIELD)
            view[:nbytes] = geometry_to_identify(self.geometry, nbytes)
            return Completion()

        # validate_command admits only the opcodes above
        raise InvalidError(f"opcode 0x{op:02x} is not executable")

    def _zone_index(self, slba: int, require_start: bool) -> tuple[int, int]:
        geo = self.geometry
        if slba >= geo.nsect:
            return 0, Status.LBA_OUT_OF_RANGE
        if require_start and slba % geo.zone_nsect:
            return 0, Status.INVALID_FIELD
        return slba // geo.zone_nsect, 0

    def _fill_zone_report(self, view, nbytes: int) -> None:
        geo = self.geometry
        struct.pack_into("<Q", view, 0, geo.nzones)
        nfit = (nbytes - 8) // ZONE_RECORD_NBYTES
        zsz = geo.zone_nsect
        for i in range(min(nfit, geo.nzones)):
            zone = ZoneState(zslba=i * zsz, wp=self._wp[i], zone_nsect=zsz)
            _ZONE_RECORD.pack_into(view, 8 + i * ZONE_RECORD_NBYTES,
                                   zone.zslba, zone.wp, zone.state)


def _as_view(payload):
    if payload is None:
        return None
    if hasattr(payload, "data") and isinstance(getattr(payload, "data"), memoryview):
        return payload.data  # device.Buffer
    return memoryview(payload)


# --- process-global namespace registry ---------------------------------

_registry: dict[str, RamNamespace] = {}
_registry_lock = threading.Lock()


def ram_create(name: str, geometry: Geometry) -> RamNamespace:
    """Create and register a namespace openable as ``ram:<name>``.

    The store starts zero-filled with every zone EMPTY. A duplicate
    name is a contract violation (InvalidError).
    """
    if not name:
        raise InvalidError("ram namespace name must be non-empty")
    ns = RamNamespace(name, geometry)
    with _registry_lock:
        if name in _registry:
            raise InvalidError(f"ram namespace {name!r} already exists")
        _registry[name] = ns
    return ns


def ram_get(name: str) -> RamNamespace:
    with _registry_lock:
        ns = _registry.get(name)
    if ns is None:
        raise NotFoundError(f"no ram namespace named {name!r}")
    return ns


def ram_destroy(name: str) -> None:
    """Drop a namespace from the registry (test hygiene, not NVMe)."""
    with _registry_lock:
        _registry.pop(name, None)


def ram_list() -> list[str]:
    with _registry_lock:
        return sorted(_registry)


def open_from_ident(ident) -> RamNamespace:
    """Resolve a ``ram:`` ident, creating the namespace from URI params.

    Without params the name must already be registered. With params an
    existing namespace is reused only when the geometry agrees.
    """
    geo = _geometry_from_params(ident.params) if ident.params else None
    with _registry_lock:
        ns = _registry.get(ident.name)
        if ns is None:
            if geo is None:
                raise NotFoundError(
                    f"ram namespace {ident.name!r} is not registered and the "
                    "URI carries no geometry parameters"
                )
            ns = RamNamespace(ident.name, geo)
            _registry[ident.name] = ns
        elif geo is not None and geo != ns.geometry:
            raise InvalidError(
                f"ram:{ident.name} exists with different geometry"
            )
    return ns


def _geometry_from_params(params) -> Geometry:
    def _positive(key: str, default: int | None = None) -> int | None:
        raw = params.get(key)
        if raw is None:
            return default
        try:
            value = int(raw)
        except ValueError:
            raise InvalidError(f"ram URI parameter {key}={raw!r} is not an integer")
        if value <= 0:
            raise InvalidError(f"ram URI parameter {key}={raw!r} must be positive")
        return value

    for key in params:
        if key not in ("nsect", "lbads", "zones"):
            raise InvalidError(f"unknown ram URI parameter {key!r}")
    nsect = _positive("nsect")
    if nsect is None:
        raise InvalidError("ram URI parameters must include nsect")
    lbads = _positive("lbads", 9)
    if lbads < 9:
        raise InvalidError("lbads must be >= 9 (512-byte blocks)")
    nzones = _positive("zones", 0)
    if nzones:
        if nsect % nzones:
            raise InvalidError(f"zones={nzones} does not divide nsect={nsect}")
        return Geometry(
            lba_nbytes=1 << lbads,
            nsect=nsect,
            nzones=nzones,
            zone_nsect=nsect // nzones,
            kind=GeometryKind.ZONED,
        )
    return Geometry(lba_nbytes=1 << lbads, nsect=nsect)
