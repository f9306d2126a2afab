#!/usr/bin/env python3
"""Compare the compiled emulator kernel against the pure-Python twin.

Two views of the same question:

1. function level — raw nvm_rw calls against a bytearray store;
2. end to end — ``xio bench`` in a subprocess, once with the compiled
   kernel (default) and once with CROSSIO_PURE=1.

Usage: python benchmarks/compare_kernels.py [--ops N] [--nblocks N]
"""

import argparse
import json
import os
import subprocess
import sys
import time

from crossio._kernels import pure

try:
    from crossio._kernels import _cykernel
except ImportError:
    _cykernel = None


def bench_function_level(ops: int, nblocks: int) -> None:
    nsect, bs = 4096, 512
    store = bytearray(nsect * bs)
    payload = bytearray(nblocks * bs)
    impls = [("python", pure)]
    if _cykernel is not None:
        impls.append(("cython", _cykernel))
    print(f"-- function level: {ops} nvm_rw calls of {nblocks} block(s) --")
    results = {}
    for name, impl in impls:
        fn = impl.nvm_rw
        start = time.perf_counter()
        for i in range(ops):
            fn(store, bs, nsect, (i * nblocks) % (nsect - nblocks), nblocks,
               payload, i & 1)
        elapsed = time.perf_counter() - start
        results[name] = elapsed
        print(f"{name:>8}: {elapsed:.3f}s  ({ops / elapsed:,.0f} calls/s)")
    if len(results) == 2:
        print(f"speedup: {results['python'] / results['cython']:.2f}x")


def bench_end_to_end(ops: int, nblocks: int) -> None:
    print(f"\n-- end to end: xio bench, {ops} ops at qd=32 --")
    results = {}
    for name, env_extra in (("cython", {}), ("python", {"CROSSIO_PURE": "1"})):
        if name == "cython" and _cykernel is None:
            continue
        env = dict(os.environ, **env_extra)
        out = subprocess.run(
            [sys.executable, "-m", "crossio.cli", "bench",
             "ram:kbench?nsect=65536&lbads=9", "--qd", "32",
             "--nblocks", str(nblocks), "--ops", str(ops),
             "--mode", "randwrite", "--seed", "1"],
            capture_output=True, text=True, env=env, check=True,
        )
        report = json.loads(out.stdout)
        results[name] = report["iops"]
        print(f"{name:>8}: {report['iops']:>12,.0f} iops   "
              f"p50={report['latency_ns']['p50']}ns  "
              f"p99={report['latency_ns']['p99']}ns")
    if len(results) == 2:
        print(f"speedup: {results['cython'] / results['python']:.2f}x")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--ops", type=int, default=200_000)
    parser.add_argument("--nblocks", type=int, default=8)
    args = parser.parse_args()
    if _cykernel is None:
        print("note: compiled kernel not importable; showing python only")
    bench_function_level(args.ops, args.nblocks)
    bench_end_to_end(args.ops, args.nblocks)


if __name__ == "__main__":
    main()
