"""Pure-Python data-plane kernel.

Reference twin of the compiled kernel in ``_cykernel.pyx``. The two must
stay behaviourally identical bit for bit; any change here needs the same
change there. Status numerics are duplicated literally on purpose so the
kernels do not depend on the rest of the package.
"""

KERNEL_NAME = "python"

_SC_LBA_OUT_OF_RANGE = 0x0080
_SC_ZONE_BOUNDARY = 0x01B8
_SC_ZONE_IS_FULL = 0x01B9
_SC_ZONE_INVALID_WRITE = 0x01BC


def nvm_rw(store, lba_nbytes, nsect, slba, nblocks, payload, write):
    """Copy ``nblocks`` blocks between ``store`` and ``payload``.

    Returns a 16-bit completion status; 0 on success. The payload must
    hold at least nblocks*lba_nbytes bytes (callers validate).
    """
    # slba checked alone first so the compiled twin cannot wrap at 2^64
    if slba >= nsect or slba + nblocks > nsect:
        return _SC_LBA_OUT_OF_RANGE
    off = slba * lba_nbytes
    ln = nblocks * lba_nbytes
    if write:
        store[off : off + ln] = payload[:ln]
    else:
        payload[:ln] = store[off : off + ln]
    return 0


def zoned_write(store, lba_nbytes, nsect, zone_nsect, wp, slba, nblocks, payload):
    """Sequential-write-required WRITE against a zoned store.

    Decision order: LBA range, zone boundary, write pointer. ``wp`` is
    the per-zone write-pointer array, updated in place on success.
    """
    if slba >= nsect or slba + nblocks > nsect:
        return _SC_LBA_OUT_OF_RANGE
    zidx = slba // zone_nsect
    zend = (zidx + 1) * zone_nsect
    if slba + nblocks > zend:
        return _SC_ZONE_BOUNDARY
    if slba != wp[zidx]:
        return _SC_ZONE_INVALID_WRITE
    off = slba * lba_nbytes
    ln = nblocks * lba_nbytes
    store[off : off + ln] = payload[:ln]
    wp[zidx] = slba + nblocks
    return 0


def zone_append(store, lba_nbytes, zone_nsect, wp, zidx, nblocks, payload):
    """Append at the zone's write pointer; returns (status, assigned LBA)."""
    zend = (zidx + 1) * zone_nsect
    cur = wp[zidx]
    if cur >= zend:
        return _SC_ZONE_IS_FULL, 0
    if cur + nblocks > zend:
        return _SC_ZONE_BOUNDARY, 0
    off = cur * lba_nbytes
    ln = nblocks * lba_nbytes
    store[off : off + ln] = payload[:ln]
    wp[zidx] = cur + nblocks
    return 0, cur


def zone_reset(store, lba_nbytes, zone_nsect, wp, zidx):
    """Reset one zone: write pointer back to the start, data zeroed."""
    zslba = zidx * zone_nsect
    off = zslba * lba_nbytes
    ln = zone_nsect * lba_nbytes
    store[off : off + ln] = bytes(ln)
    wp[zidx] = zslba
    return 0
