"""Data-plane kernel selection.

The emulator's per-command block moves and write-pointer arithmetic live
in a small kernel with two interchangeable implementations: a compiled
Cython extension and a pure-Python twin. The compiled one is preferred
when importable; set CROSSIO_PURE=1 to force the Python implementation
(used by the kernel comparison benchmark and by CI without a compiler).

Both implementations expose the same functions with identical semantics,
including the exact status-code decision order; tests drive them A/B.
"""

import os

from . import pure

if os.environ.get("CROSSIO_PURE") == "1":
    _impl = pure
else:
    try:
        from . import _cykernel as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = pure

KERNEL_NAME = _impl.KERNEL_NAME

nvm_rw = _impl.nvm_rw
zoned_write = _impl.zoned_write
zone_append = _impl.zone_append
zone_reset = _impl.zone_reset


def kernel_backend() -> str:
    """Name of the kernel implementation selected at import."""
    return KERNEL_NAME
