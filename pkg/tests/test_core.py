"""Core vocabulary: options grammar, opcodes, statuses, geometry codec."""

import random

import pytest

from crossio import (
    AdminOpcode,
    Command,
    Completion,
    ErrorCode,
    Geometry,
    GeometryKind,
    InvalidError,
    NvmOpcode,
    geometry_from_identify,
    geometry_to_identify,
    options_default,
    options_parse,
    options_render,
    status_is_error,
)
from crossio.core import validate_command


class TestOpcodes:
    def test_io_set_matches_published_tables(self):
        # NVMe Base + ZNS command set opcode values, transcribed from the
        # published tables.
        assert NvmOpcode.FLUSH == 0x00
        assert NvmOpcode.WRITE == 0x01
        assert NvmOpcode.READ == 0x02
        assert NvmOpcode.ZONE_MGMT_SEND == 0x79
        assert NvmOpcode.ZONE_MGMT_RECV == 0x7A
        assert NvmOpcode.ZONE_APPEND == 0x7D

    def test_admin_set_matches_published_tables(self):
        assert AdminOpcode.IDENTIFY == 0x06
        assert AdminOpcode.GET_LOG_PAGE == 0x02

    def test_unknown_opcode_is_representable_but_rejected_at_execution(self, conv_geo):
        cmd = Command(opcode=0x55)
        with pytest.raises(InvalidError):
            validate_command(cmd, conv_geo, 0)


class TestCommand:
    def test_field_widths_enforced(self):
        with pytest.raises(InvalidError):
            Command(opcode=0x100)
        with pytest.raises(InvalidError):
            Command(nlb=0x10000)
        with pytest.raises(InvalidError):
            Command(slba=2**64)

    def test_lba_span_overflow_rejected(self):
        Command(opcode=NvmOpcode.READ, slba=2**64 - 1, nlb=0)  # exactly fits
        with pytest.raises(InvalidError):
            Command(opcode=NvmOpcode.READ, slba=2**64 - 1, nlb=1)

    def test_admin_fields_do_not_constrain_io_span(self):
        # the overflow rule applies to data opcodes only
        Command(opcode=AdminOpcode.IDENTIFY, slba=2**64 - 1, nlb=5)


class TestCompletionStatus:
    def test_success_is_not_error(self):
        assert not status_is_error(Completion(status=0))

    def test_nonzero_is_error(self):
        assert status_is_error(Completion(status=0x0002))

    def test_full_zone_write_status_is_error(self, ram_name):
        # device-produced status observed through the emulator
        from crossio import CommandContext, build_write, cmd_pass, dev_open, ram_create

        geo = Geometry(lba_nbytes=512, nsect=1024, nzones=1, zone_nsect=1024,
                       kind=GeometryKind.ZONED)
        ram_create(ram_name, geo)
        dev = dev_open(f"ram:{ram_name}")
        buf = dev.buf_alloc(1024 * 512)
        ctx = CommandContext(dev=dev, cmd=build_write(0, 1024))
        cmd_pass(ctx, buf, 1024 * 512)  # fill the only zone
        assert not status_is_error(ctx.cpl)
        ctx = CommandContext(dev=dev, cmd=build_write(0, 1))
        cmd_pass(ctx, buf, 512)
        assert status_is_error(ctx.cpl)
        dev.close()


class TestOptions:
    def test_default_is_empty(self):
        assert options_default() == {}
        assert options_default() == options_default()

    def test_single_insertion(self):
        opts = options_default()
        opts["be.async"] = "ram"
        assert opts == {"be.async": "ram"}

    def test_parse_empty(self):
        assert options_parse("") == {}

    def test_parse_two_keys(self):
        assert options_parse("be.async=ram,be.sync=ram") == {
            "be.async": "ram",
            "be.sync": "ram",
        }

    def test_parse_missing_equals(self):
        with pytest.raises(InvalidError):
            options_parse("be.async")

    def test_later_duplicate_overrides(self):
        assert options_parse("k=a,k=b") == {"k": "b"}

    def test_bad_characters_rejected(self):
        with pytest.raises(InvalidError):
            options_parse("sp ace=1")

    def test_render_parse_round_trip_randomized(self):
        rng = random.Random(1234)
        alphabet = "abcdefghijklmnopqrstuvwxyz0123456789._/:-"
        for _ in range(200):
            opts = {
                "".join(rng.choices(alphabet, k=rng.randint(1, 12))):
                "".join(rng.choices(alphabet, k=rng.randint(1, 12)))
                for _ in range(rng.randint(0, 6))
            }
            assert options_parse(options_render(opts)) == opts


class TestGeometry:
    def test_zoned_product_invariant(self):
        with pytest.raises(InvalidError):
            Geometry(lba_nbytes=512, nsect=4096, nzones=3, zone_nsect=1024,
                     kind=GeometryKind.ZONED)

    def test_lba_nbytes_power_of_two(self):
        with pytest.raises(InvalidError):
            Geometry(lba_nbytes=600, nsect=10)
        with pytest.raises(InvalidError):
            Geometry(lba_nbytes=256, nsect=10)

    def test_conventional_must_have_no_zones(self):
        with pytest.raises(InvalidError):
            Geometry(lba_nbytes=512, nsect=10, nzones=2, zone_nsect=5)


class TestIdentifyCodec:
    # frozen from the documented little-endian layout, verified by hand
    CONV_HEX = "00200000000000000002000000000000000000000000000000"
    ZONED_HEX = "00100000000000000002000004000000000400000000000001"

    def test_conventional_golden_bytes(self):
        geo = Geometry(lba_nbytes=512, nsect=8192)
        assert geometry_to_identify(geo).hex() == self.CONV_HEX

    def test_zoned_golden_bytes(self):
        geo = Geometry(lba_nbytes=512, nsect=4096, nzones=4, zone_nsect=1024,
                       kind=GeometryKind.ZONED)
        assert geometry_to_identify(geo).hex() == self.ZONED_HEX

    def test_round_trip(self):
        geo = Geometry(lba_nbytes=4096, nsect=65536, nzones=16, zone_nsect=4096,
                       kind=GeometryKind.ZONED)
        assert geometry_from_identify(geometry_to_identify(geo, 4096)) == geo

    def test_remainder_zero_filled(self):
        geo = Geometry(lba_nbytes=512, nsect=1)
        blob = geometry_to_identify(geo, 100)
        assert len(blob) == 100 and not any(blob[25:])


class TestValidateCommand:
    def test_size_contract_for_data_opcodes(self, conv_geo):
        buf = bytearray(1024)
        cmd = Command(opcode=NvmOpcode.READ, nlb=0)
        validate_command(cmd, conv_geo, 512, buf)
        with pytest.raises(InvalidError):
            validate_command(cmd, conv_geo, 1024, buf)

    def test_flush_carries_no_data(self, conv_geo):
        with pytest.raises(InvalidError):
            validate_command(Command(opcode=NvmOpcode.FLUSH), conv_geo, 512, bytearray(512))

    def test_zone_opcode_needs_zoned_device(self, conv_geo):
        cmd = Command(opcode=NvmOpcode.ZONE_APPEND, nlb=0)
        with pytest.raises(InvalidError):
            validate_command(cmd, conv_geo, 512, bytearray(512))

    def test_payload_must_cover_nbytes(self, conv_geo):
        cmd = Command(opcode=NvmOpcode.READ, nlb=1)
        with pytest.raises(InvalidError):
            validate_command(cmd, conv_geo, 1024, bytearray(512))


def test_error_codes_are_negative_errno():
    import errno

    assert ErrorCode.INVAL == -errno.EINVAL
    assert ErrorCode.NOENT == -errno.ENOENT
    assert ErrorCode.NODEV == -errno.ENODEV
    assert ErrorCode.BUSY == -errno.EBUSY
    assert ErrorCode.AGAIN == -errno.EAGAIN
    assert ErrorCode.IO == -errno.EIO
    assert ErrorCode.NOSYS == -errno.ENOSYS
    assert ErrorCode.NOMEM == -errno.ENOMEM
