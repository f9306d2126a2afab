import itertools
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from crossio import Geometry, GeometryKind, dev_open, ramdev

_name_seq = itertools.count()


@pytest.fixture(autouse=True)
def _ram_registry_hygiene():
    """Drop every namespace a test registered, keeping runs independent."""
    before = set(ramdev.ram_list())
    yield
    for name in set(ramdev.ram_list()) - before:
        ramdev.ram_destroy(name)


@pytest.fixture
def ram_name():
    return f"ns{next(_name_seq)}"


@pytest.fixture
def conv_geo():
    return Geometry(lba_nbytes=512, nsect=8192)


@pytest.fixture
def zoned_geo():
    return Geometry(
        lba_nbytes=512, nsect=4096, nzones=4, zone_nsect=1024, kind=GeometryKind.ZONED
    )


@pytest.fixture
def ram_dev(ram_name, conv_geo):
    ramdev.ram_create(ram_name, conv_geo)
    dev = dev_open(f"ram:{ram_name}")
    yield dev
    if dev.is_open:
        dev.close()


@pytest.fixture
def zoned_dev(ram_name, zoned_geo):
    ramdev.ram_create(ram_name, zoned_geo)
    dev = dev_open(f"ram:{ram_name}")
    yield dev
    if dev.is_open:
        dev.close()


@pytest.fixture
def file_image(tmp_path):
    """4 MiB zero-filled flat image (nsect=8192 at 512-byte blocks)."""
    path = tmp_path / "img.bin"
    path.write_bytes(bytes(4 * 2**20))
    return str(path)
