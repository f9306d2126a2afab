# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled data-plane kernel.

Behavioural twin of ``pure.py``; keep the two in lockstep. Buffers are
C-contiguous unsigned-byte views (bytearray, mmap-backed memoryview),
write pointers a C-contiguous uint64 view (array('Q')).
"""

from libc.string cimport memcpy, memset

KERNEL_NAME = "cython"

cdef int _SC_LBA_OUT_OF_RANGE = 0x0080
cdef int _SC_ZONE_BOUNDARY = 0x01B8
cdef int _SC_ZONE_IS_FULL = 0x01B9
cdef int _SC_ZONE_INVALID_WRITE = 0x01BC


def nvm_rw(unsigned char[::1] store, unsigned long long lba_nbytes,
           unsigned long long nsect, unsigned long long slba,
           unsigned long long nblocks, unsigned char[::1] payload,
           bint write):
    if slba >= nsect or slba + nblocks > nsect:
        return _SC_LBA_OUT_OF_RANGE
    cdef size_t off = <size_t> (slba * lba_nbytes)
    cdef size_t ln = <size_t> (nblocks * lba_nbytes)
    if write:
        memcpy(&store[off], &payload[0], ln)
    else:
        memcpy(&payload[0], &store[off], ln)
    return 0


def zoned_write(unsigned char[::1] store, unsigned long long lba_nbytes,
                unsigned long long nsect, unsigned long long zone_nsect,
                unsigned long long[::1] wp, unsigned long long slba,
                unsigned long long nblocks, unsigned char[::1] payload):
    if slba >= nsect or slba + nblocks > nsect:
        return _SC_LBA_OUT_OF_RANGE
    cdef unsigned long long zidx = slba // zone_nsect
    cdef unsigned long long zend = (zidx + 1) * zone_nsect
    if slba + nblocks > zend:
        return _SC_ZONE_BOUNDARY
    if slba != wp[zidx]:
        return _SC_ZONE_INVALID_WRITE
    cdef size_t off = <size_t> (slba * lba_nbytes)
    cdef size_t ln = <size_t> (nblocks * lba_nbytes)
    memcpy(&store[off], &payload[0], ln)
    wp[zidx] = slba + nblocks
    return 0


def zone_append(unsigned char[::1] store, unsigned long long lba_nbytes,
                unsigned long long zone_nsect, unsigned long long[::1] wp,
                unsigned long long zidx, unsigned long long nblocks,
                unsigned char[::1] payload):
    cdef unsigned long long zend = (zidx + 1) * zone_nsect
    cdef unsigned long long cur = wp[zidx]
    if cur >= zend:
        return _SC_ZONE_IS_FULL, 0
    if cur + nblocks > zend:
        return _SC_ZONE_BOUNDARY, 0
    cdef size_t off = <size_t> (cur * lba_nbytes)
    cdef size_t ln = <size_t> (nblocks * lba_nbytes)
    memcpy(&store[off], &payload[0], ln)
    wp[zidx] = cur + nblocks
    return 0, cur


def zone_reset(unsigned char[::1] store, unsigned long long lba_nbytes,
               unsigned long long zone_nsect, unsigned long long[::1] wp,
               unsigned long long zidx):
    cdef unsigned long long zslba = zidx * zone_nsect
    cdef size_t off = <size_t> (zslba * lba_nbytes)
    cdef size_t ln = <size_t> (zone_nsect * lba_nbytes)
    memset(&store[off], 0, ln)
    wp[zidx] = zslba
    return 0
