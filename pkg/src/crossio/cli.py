"""xio: command-line toolset over the library API.

Every subcommand is a thin composition of library calls; no I/O logic
lives here. Machine-readable JSON goes to stdout, diagnostics to
stderr. Exit codes: 0 success, 1 usage error, 2 I/O or device error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bench import MODES, run_bench
from .cmdqueue import CommandContext, cmd_pass
from .cmdsets import (
    build_read,
    build_write,
    build_zone_append,
    build_zone_report,
    build_zone_reset,
    decode_status,
    decode_zone_report,
    zone_report_nbytes,
)
from .core import (
    GeometryKind,
    InvalidError,
    IoError,
    OPT_BE_ASYNC,
    OPT_BE_SYNC,
    options_parse,
    status_is_error,
)
from .device import dev_open, enumerate_devices

__all__ = ["main", "run"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the xio contract wants 1
    def error(self, message):
        raise _UsageError(message)


class DeviceFailure(Exception):
    """A command completed with a nonzero device status."""

    def __init__(self, cpl):
        info = decode_status(cpl)
        super().__init__(f"{info.text} (status=0x{info.status:04x})")
        self.info = info


def _build_parser() -> _Parser:
    parser = _Parser(prog="xio", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, ident=True):
        p = sub.add_parser(name, help=help_text)
        if ident:
            p.add_argument("ident", help="device identifier (ram:..., file:..., /dev/...)")
            p.add_argument("--be", metavar="NAME", help="pin both be.async and be.sync")
            p.add_argument("--opt", metavar="K=V", action="append", default=[],
                           help="extra option key=value (repeatable)")
        return p

    add("enum", "list openable device identifiers", ident=False)
    add("info", "print device geometry and resolved backend")

    p = add("read", "read blocks to a file")
    p.add_argument("--slba", type=int, required=True)
    p.add_argument("--nblocks", type=int, required=True)
    p.add_argument("--output", required=True)

    p = add("write", "write a file's bytes (zero-padded to block size)")
    p.add_argument("--slba", type=int, required=True)
    p.add_argument("--input", required=True)

    p = sub.add_parser("zone", help="zone management")
    p.add_argument("action", choices=["report", "reset", "append"])
    p.add_argument("ident", help="device identifier")
    p.add_argument("--be", metavar="NAME", help="pin both be.async and be.sync")
    p.add_argument("--opt", metavar="K=V", action="append", default=[],
                   help="extra option key=value (repeatable)")
    p.add_argument("--zslba", type=int, default=None)
    p.add_argument("--input", default=None)

    p = add("bench", "seeded micro-benchmark at fixed queue depth")
    p.add_argument("--qd", type=int, default=1)
    p.add_argument("--nblocks", type=int, default=1)
    p.add_argument("--ops", type=int, default=1000)
    p.add_argument("--mode", choices=list(MODES), default="randread")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", action="store_true",
                   help="log each submission to stderr")
    return parser


def _gather_opts(args) -> dict:
    opts: dict = {}
    if getattr(args, "be", None):
        opts[OPT_BE_ASYNC] = args.be
        opts[OPT_BE_SYNC] = args.be
    for pair in getattr(args, "opt", []):
        try:
            opts.update(options_parse(pair))
        except InvalidError as exc:
            raise _UsageError(f"--opt {pair!r}: {exc.message}")
    return opts


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _sync_exec(dev, cmd, payload=None, nbytes: int | None = None):
    ctx = CommandContext(dev=dev, cmd=cmd)
    cmd_pass(ctx, payload, nbytes)
    if status_is_error(ctx.cpl):
        raise DeviceFailure(ctx.cpl)
    return ctx.cpl


def _geometry_dict(dev) -> dict:
    geo = dev.geometry
    return {
        "lba_nbytes": geo.lba_nbytes,
        "nsect": geo.nsect,
        "nzones": geo.nzones,
        "zone_nsect": geo.zone_nsect,
        "kind": "zoned" if geo.kind == GeometryKind.ZONED else "conventional",
    }


def _cmd_enum(_args) -> int:
    _emit(enumerate_devices())
    return EXIT_OK


def _cmd_info(args) -> int:
    with dev_open(args.ident, _gather_opts(args)) as dev:
        _emit({"uri": args.ident, "backend": dev.backend,
               "geometry": _geometry_dict(dev)})
    return EXIT_OK


def _cmd_read(args) -> int:
    if args.nblocks < 1:
        raise _UsageError("--nblocks must be >= 1")
    with dev_open(args.ident, _gather_opts(args)) as dev:
        nbytes = args.nblocks * dev.geometry.lba_nbytes
        buf = dev.buf_alloc(nbytes)
        try:
            _sync_exec(dev, build_read(args.slba, args.nblocks), buf, nbytes)
            with open(args.output, "wb") as fp:
                fp.write(buf.to_bytes())
        finally:
            dev.buf_free(buf)
    _emit({"read": {"slba": args.slba, "nblocks": args.nblocks,
                    "nbytes": nbytes, "output": args.output}})
    return EXIT_OK


def _read_padded(path: str, lba_nbytes: int) -> tuple[bytes, int]:
    with open(path, "rb") as fp:
        data = fp.read()
    if not data:
        raise _UsageError(f"input file {path!r} is empty")
    nblocks = -(-len(data) // lba_nbytes)
    return data.ljust(nblocks * lba_nbytes, b"\x00"), nblocks


def _cmd_write(args) -> int:
    with dev_open(args.ident, _gather_opts(args)) as dev:
        data, nblocks = _read_padded(args.input, dev.geometry.lba_nbytes)
        buf = dev.buf_alloc(len(data))
        try:
            buf.fill(data)
            _sync_exec(dev, build_write(args.slba, nblocks), buf, len(data))
        finally:
            dev.buf_free(buf)
    _emit({"write": {"slba": args.slba, "nblocks": nblocks,
                     "nbytes": len(data), "input": args.input}})
    return EXIT_OK


def _cmd_zone(args) -> int:
    with dev_open(args.ident, _gather_opts(args)) as dev:
        if args.action == "report":
            nbytes = zone_report_nbytes(dev.geometry.nzones)
            buf = dev.buf_alloc(nbytes)
            try:
                _sync_exec(dev, build_zone_report(), buf, nbytes)
                total, zones = decode_zone_report(buf.data)
            finally:
                dev.buf_free(buf)
            _emit({"nzones": total,
                   "zones": [{"zslba": z.zslba, "wp": z.wp,
                              "state": z.state_name} for z in zones]})
        elif args.action == "reset":
            if args.zslba is None:
                raise _UsageError("zone reset requires --zslba")
            _sync_exec(dev, build_zone_reset(args.zslba))
            _emit({"reset": {"zslba": args.zslba}})
        else:  # append
            if args.zslba is None or args.input is None:
                raise _UsageError("zone append requires --zslba and --input")
            data, nblocks = _read_padded(args.input, dev.geometry.lba_nbytes)
            buf = dev.buf_alloc(len(data))
            try:
                buf.fill(data)
                cpl = _sync_exec(
                    dev, build_zone_append(args.zslba, nblocks), buf, len(data)
                )
            finally:
                dev.buf_free(buf)
            _emit({"append": {"zslba": args.zslba, "nblocks": nblocks,
                              "result_slba": cpl.result}})
    return EXIT_OK


def _cmd_bench(args) -> int:
    trace = None
    if args.trace:
        trace = lambda line: print(f"trace: {line}", file=sys.stderr)
    with dev_open(args.ident, _gather_opts(args)) as dev:
        report = run_bench(dev, qd=args.qd, nblocks=args.nblocks,
                           ops=args.ops, mode=args.mode, seed=args.seed,
                           trace=trace)
    _emit(report.to_dict())
    return EXIT_OK


_COMMANDS = {
    "enum": _cmd_enum,
    "info": _cmd_info,
    "read": _cmd_read,
    "write": _cmd_write,
    "zone": _cmd_zone,
    "bench": _cmd_bench,
}


def run(argv=None) -> int:
    """Execute one xio invocation; returns the process exit code."""
    parser = _build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help and friends
            return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"xio: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DeviceFailure as exc:
        print(f"xio: error[STATUS:{exc.info.klass.value}]: {exc}", file=sys.stderr)
        return EXIT_IO
    except IoError as exc:
        print(f"xio: error[{exc.code.name}]: {exc.message}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"xio: error[OS]: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
