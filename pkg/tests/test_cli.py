"""xio CLI: JSON output stability, exit codes, round-trips."""

import hashlib
import json
import subprocess
import sys

import pytest

from crossio import ram_create, Geometry, GeometryKind
from crossio.cli import run


@pytest.fixture
def capjson(capsys):
    def _invoke(argv, expect=0):
        code = run(argv)
        captured = capsys.readouterr()
        assert code == expect, captured.err
        return json.loads(captured.out) if captured.out.strip() else None

    return _invoke


class TestInfoEnum:
    def test_info_golden(self, capjson, ram_name):
        payload = capjson(["info", f"ram:{ram_name}?nsect=8192&lbads=9"])
        assert payload == {
            "uri": f"ram:{ram_name}?nsect=8192&lbads=9",
            "backend": "ram",
            "geometry": {
                "lba_nbytes": 512,
                "nsect": 8192,
                "nzones": 0,
                "zone_nsect": 0,
                "kind": "conventional",
            },
        }

    def test_enum_lists_ram(self, capjson, ram_name, conv_geo):
        ram_create(ram_name, conv_geo)
        listing = capjson(["enum"])
        assert f"ram:{ram_name}" in listing
        assert listing == sorted(listing)

    def test_info_file_backend_flag(self, capjson, file_image):
        payload = capjson(["info", file_image, "--be", "thrpool"])
        assert payload["backend"] == "thrpool"
        assert payload["geometry"]["nsect"] == 8192

    def test_opt_passes_arbitrary_keys(self, capjson, file_image):
        payload = capjson(["info", file_image, "--opt", "file.lbads=12",
                           "--opt", "be.sync=psync"])
        assert payload["geometry"]["lba_nbytes"] == 4096
        assert payload["backend"] == "psync"

    def test_malformed_opt_is_usage_error(self, capsys, file_image):
        assert run(["info", file_image, "--opt", "nonsense"]) == 1
        assert "usage error" in capsys.readouterr().err


class TestExitCodes:
    def test_usage_error_is_1(self, capsys):
        assert run(["read", "ram:x"]) == 1  # missing required flags
        assert "usage" in capsys.readouterr().err

    def test_unknown_subcommand_is_1(self, capsys):
        assert run(["frobnicate"]) == 1
        capsys.readouterr()

    def test_device_error_is_2(self, capsys):
        assert run(["info", "ram:does-not-exist"]) == 2
        assert "error[NOENT]" in capsys.readouterr().err

    def test_nosys_vs_nodev_in_stderr(self, capsys, file_image, monkeypatch):
        monkeypatch.setenv("CROSSIO_NATIVE", "0")
        assert run(["info", file_image, "--be", "io_uring"]) == 2
        assert "error[NOSYS]" in capsys.readouterr().err
        assert run(["info", file_image, "--be", "bogus"]) == 2
        assert "error[NODEV]" in capsys.readouterr().err

    def test_completion_failure_is_2_with_class(self, capsys, ram_name, tmp_path):
        out = tmp_path / "o.bin"
        ident = f"ram:{ram_name}?nsect=64&lbads=9"
        assert run(["read", ident, "--slba", "64", "--nblocks", "1",
                    "--output", str(out)]) == 2
        assert "error[STATUS:range]" in capsys.readouterr().err


class TestRoundTrip:
    @pytest.mark.parametrize("size", [1, 512, 4096, 1024 * 1024])
    def test_write_then_read_in_process(self, capsys, ram_name, tmp_path, size):
        # one process: both invocations share the ram registry
        src = tmp_path / "src.bin"
        dst = tmp_path / "dst.bin"
        data = bytes(range(256)) * (size // 256) + bytes(size % 256)
        src.write_bytes(data[:size])
        ident = f"ram:{ram_name}?nsect=8192&lbads=9"
        nblocks = -(-size // 512)
        assert run(["write", ident, "--slba", "0", "--input", str(src)]) == 0
        assert run(["read", ident, "--slba", "0", "--nblocks", str(nblocks),
                    "--output", str(dst)]) == 0
        capsys.readouterr()
        out = dst.read_bytes()
        assert out == src.read_bytes().ljust(nblocks * 512, b"\x00")

    def test_file_device_round_trip_across_processes(self, tmp_path, file_image):
        src = tmp_path / "payload.bin"
        dst = tmp_path / "back.bin"
        src.write_bytes(b"subprocess round trip!\n" * 100)

        def xio(*args):
            return subprocess.run(
                [sys.executable, "-m", "crossio.cli", *args],
                capture_output=True, text=True,
            )

        res = xio("write", file_image, "--slba", "8", "--input", str(src))
        assert res.returncode == 0, res.stderr
        nblocks = -(-src.stat().st_size // 512)
        res = xio("read", file_image, "--slba", "8", "--nblocks", str(nblocks),
                  "--output", str(dst))
        assert res.returncode == 0, res.stderr
        assert dst.read_bytes()[: src.stat().st_size] == src.read_bytes()


class TestZoneCli:
    def test_report_reset_append(self, capjson, capsys, ram_name, tmp_path):
        ident = f"ram:{ram_name}?nsect=4096&lbads=9&zones=4"
        payload = tmp_path / "z.bin"
        payload.write_bytes(b"Z" * 600)  # 2 blocks after padding

        out = capjson(["zone", "append", ident, "--zslba", "1024",
                       "--input", str(payload)])
        assert out == {"append": {"zslba": 1024, "nblocks": 2, "result_slba": 1024}}

        report = capjson(["zone", "report", ident])
        assert report["nzones"] == 4
        assert report["zones"][1] == {"zslba": 1024, "wp": 1026, "state": "OPEN"}
        assert report["zones"][0] == {"zslba": 0, "wp": 0, "state": "EMPTY"}

        assert capjson(["zone", "reset", ident, "--zslba", "1024"]) == {
            "reset": {"zslba": 1024}
        }
        report = capjson(["zone", "report", ident])
        assert report["zones"][1]["state"] == "EMPTY"

    def test_zone_on_conventional_fails(self, capsys, ram_name):
        assert run(["zone", "report", f"ram:{ram_name}?nsect=64&lbads=9"]) == 2
        assert "error[INVAL]" in capsys.readouterr().err


class TestBenchCli:
    def test_report_shape_and_conservation(self, capjson, ram_name):
        report = capjson(["bench", f"ram:{ram_name}?nsect=8192&lbads=9",
                          "--qd", "32", "--nblocks", "8", "--ops", "2000",
                          "--mode", "randread", "--seed", "9"])
        assert report["ops"] == report["completions"] == 2000
        assert report["errors"] == 0
        lat = report["latency_ns"]
        assert lat["p50"] <= lat["p99"] <= lat["p999"] <= lat["max"]
        assert set(report) == {"ops", "completions", "errors", "elapsed_ns",
                               "iops", "bytes_per_sec", "latency_ns"}

    def test_trace_identical_across_runs(self, capsys, ram_name, conv_geo):
        ram_create(ram_name, conv_geo)
        args = ["bench", f"ram:{ram_name}", "--qd", "4", "--ops", "50",
                "--mode", "randread", "--seed", "21", "--trace"]
        assert run(args) == 0
        first = [l for l in capsys.readouterr().err.splitlines() if l.startswith("trace:")]
        assert run(args) == 0
        second = [l for l in capsys.readouterr().err.splitlines() if l.startswith("trace:")]
        assert first == second and len(first) == 50
