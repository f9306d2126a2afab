"""Backend contract and registry.

A backend is one concrete storage I/O path behind the unified API. Each
registered backend carries a descriptor: a unique name, the submission
modes it can fill ("sync", "async"), the device-identifier classes it
serves, a side-effect-free availability probe, and a factory producing a
per-device instance.

Resolution is a pure function of (registry contents, probe outcomes,
ident, options): an explicitly named backend is binding and never
silently substituted; with no name given, priority order decides among
the available candidates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

from ..core import (
    Command,
    Completion,
    Geometry,
    InvalidError,
    NoDeviceError,
    NotFoundError,
    NotSupportedError,
    OPT_BE_ASYNC,
    OPT_BE_SYNC,
)

if TYPE_CHECKING:
    from ..device import DeviceIdent

MODE_SYNC = "sync"
MODE_ASYNC = "async"

_MODE_KEYS = {MODE_ASYNC: OPT_BE_ASYNC, MODE_SYNC: OPT_BE_SYNC}


class BackendDevice:
    """Per-device backend instance: geometry plus command execution."""

    geometry: Geometry

    def exec_cmd(self, cmd: Command, view, nbytes: int) -> Completion:
        """Execute one command synchronously against the device."""
        cpl, _ = self.exec_timed(cmd, view, nbytes)
        return cpl

    def exec_timed(self, cmd: Command, view, nbytes: int):
        """Like exec_cmd but also returns the artificial visibility
        delay in nanoseconds (0 for backends without a latency model)."""
        raise NotImplementedError

    def make_engine(self, capacity: int, opts: dict):
        """Create the asynchronous submission engine for one queue."""
        raise NotSupportedError("backend cannot serve asynchronous queues")

    # in-flight accounting hooks; only stateful devices care
    def begin_io(self) -> None:
        pass

    def end_io(self) -> None:
        pass

    def close(self) -> None:
        pass


@dataclass(frozen=True)
class BackendDescriptor:
    """Registry entry describing one backend."""

    name: str
    modes: frozenset
    ident_classes: frozenset
    probe: Callable[[], bool]
    factory: Callable


class BackendRegistry:
    """Priority-ordered backend table with capability probing."""

    def __init__(self):
        self._descs: list[BackendDescriptor] = []

    def register(self, desc: BackendDescriptor, index: int | None = None) -> None:
        """Append at lowest priority, or insert at ``index``."""
        if any(d.name == desc.name for d in self._descs):
            raise InvalidError(f"backend {desc.name!r} already registered")
        if index is None:
            self._descs.append(desc)
        else:
            self._descs.insert(index, desc)

    def names(self) -> list[str]:
        return [d.name for d in self._descs]

    def get(self, name: str) -> BackendDescriptor | None:
        for desc in self._descs:
            if desc.name == name:
                return desc
        return None

    def resolve(self, ident, opts: dict, mode: str = MODE_ASYNC) -> BackendDescriptor:
        """Pick the backend serving ``ident`` in ``mode``.

        An opts-named backend wins unconditionally or fails loudly:
        NODEV for an unknown name, NOSYS when its probe fails on this
        platform (the graceful-degradation signal), INVAL when it cannot
        serve the requested mode or ident class. With no name, the
        highest-priority available candidate is chosen; NOENT when there
        is none.
        """
        if mode not in _MODE_KEYS:
            raise InvalidError(f"unknown resolution mode {mode!r}")
        named = opts.get(_MODE_KEYS[mode])
        if named is not None:
            desc = self.get(named)
            if desc is None:
                raise NoDeviceError(f"backend {named!r} is not registered")
            if mode not in desc.modes:
                raise InvalidError(f"backend {named!r} cannot serve {mode} submission")
            if ident.cls not in desc.ident_classes:
                raise InvalidError(
                    f"backend {named!r} does not handle {ident.cls!r} devices"
                )
            if not desc.probe():
                raise NotSupportedError(
                    f"backend {named!r} is not available on this platform"
                )
            return desc
        for desc in self._descs:
            if mode in desc.modes and ident.cls in desc.ident_classes and desc.probe():
                return desc
        raise NotFoundError(
            f"no available backend serves {ident.cls!r} devices in {mode} mode"
        )
