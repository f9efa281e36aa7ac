"""Benchmark the numba kernels against the pure-numpy fallback.

Micro-benchmarks call both backend implementations directly; the end-to-end
decode benchmark re-runs this interpreter with SNCLAB_BACKEND set so each
backend is measured as actually dispatched.

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from snclab import kernels


def bench(fn, *args, repeat=5, inner=10):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def micro(quick: bool):
    rng = np.random.default_rng(0)
    cases = [
        ("rref 24x72 q2 (decoder-size)", rng.integers(0, 2, (24, 72), dtype=np.int64), 2),
        ("rref 72x36 q2 (population DE)", rng.integers(0, 2, (72, 36), dtype=np.int64), 2),
        ("rref 468x864 q2 (encode system)", rng.integers(0, 2, (468, 864), dtype=np.int64), 2),
        ("rref 120x240 q3", rng.integers(0, 3, (120, 240), dtype=np.int64), 3),
    ]
    if quick:
        cases = cases[:2]
    print(f"{'case':36s} {'numba':>12s} {'numpy':>12s} {'speedup':>9s}")
    for name, a, q in cases:
        if kernels.HAS_NUMBA:
            kernels._rref_numba(a, q)  # compile outside the timer
            t_nb = bench(kernels._rref_numba, a, q)
        else:
            t_nb = float("nan")
        t_np = bench(kernels._rref_numpy, a, q)
        print(f"{name:36s} {t_nb * 1e3:10.3f}ms {t_np * 1e3:10.3f}ms {t_np / t_nb:8.1f}x")

    a = rng.integers(0, 2, (36, 36), dtype=np.int64)
    b = rng.integers(0, 2, (36, 36), dtype=np.int64)
    if kernels.HAS_NUMBA:
        kernels._matmul_numba(a, b, 2)
        t_nb = bench(kernels._matmul_numba, a, b, 2, inner=100)
    else:
        t_nb = float("nan")
    t_np = bench(kernels._matmul_numpy, a, b, 2, inner=100)
    print(f"{'matmul 36x36 q2':36s} {t_nb * 1e6:10.1f}us {t_np * 1e6:10.1f}us {t_np / t_nb:8.1f}x")


DECODE_SNIPPET = r"""
import time
import numpy as np
from fractions import Fraction
from snclab import kernels
from snclab.channel import validate_params, transmit
from snclab.ensemble import build_code, encode
from snclab.decoder import decode, DecoderConfig

p = validate_params(2, 48, Fraction(1, 2), Fraction(1, 3))
rng = np.random.default_rng([1])
code = build_code(p, 3, 6, rng)  # warm the jit outside the timer
decode(transmit(encode(code, np.zeros(code.info_length(), dtype=np.int64)), p, rng).y,
       code, DecoderConfig(max_iters=20))
t0 = time.perf_counter()
n = 10
for i in range(n):
    rng = np.random.default_rng([2, i])
    code = build_code(p, 3, 6, rng)
    info = rng.integers(0, 2, size=code.info_length(), dtype=np.int64)
    x = encode(code, info)
    out = transmit(x, p, rng)
    decode(out.y, code, DecoderConfig(max_iters=20))
print(f"{kernels.BACKEND}: {(time.perf_counter() - t0) / n * 1e3:.1f} ms/trial (N=48 build+encode+decode)")
"""


def macro():
    for backend in ("numba", "numpy"):
        env = dict(os.environ, SNCLAB_BACKEND=backend)
        subprocess.run([sys.executable, "-c", DECODE_SNIPPET], env=env, check=True)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="skip the larger cases")
    args = ap.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    micro(args.quick)
    if not args.quick:
        macro()


if __name__ == "__main__":
    main()
