"""Benchmark the serializer kernels: compiled Cython vs pure Python.

Both backends implement byte-aligned signed Exp-Golomb coding of int32
arrays.  This script times encode and decode on synthetic residuals at a
few realistic scales, checks the outputs agree bit for bit, and prints a
throughput table.

Usage::

    python3 benchmarks/bench_bitio.py [--sizes 1000,100000,1000000] [--repeats 5]
"""

import argparse
import time

import numpy as np

from stereocodec._kernels import load_backend


def synth_residuals(rng: np.random.Generator, n: int) -> np.ndarray:
    """Quantized-gaussian residuals, mostly zero with occasional spikes."""
    values = np.round(rng.normal(0.0, 0.7, n)).astype(np.int32)
    spikes = rng.random(n) < 0.001
    values[spikes] = rng.integers(-50_000, 50_000, int(spikes.sum()),
                                  dtype=np.int32)
    return values


def time_call(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="1000,100000,1000000",
                        help="comma-separated element counts")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats; best run wins")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    backends = {}
    for name in ("cython", "pure"):
        try:
            backends[name] = load_backend(name)
        except ImportError:
            print(f"backend {name!r} unavailable, skipping")
    if not backends:
        print("no backends importable")
        return 1

    rng = np.random.default_rng(0)
    header = f"{'n':>9}  {'backend':<8} {'encode MB/s':>12} {'decode MB/s':>12}"
    print(header)
    print("-" * len(header))
    ok = True
    for n in sizes:
        values = synth_residuals(rng, n)
        encoded = {}
        for name, impl in backends.items():
            blob = impl.encode_signed(values)
            encoded[name] = blob
            enc_s = time_call(lambda: impl.encode_signed(values), args.repeats)
            dec_s = time_call(lambda: impl.decode_signed(blob, 0, n),
                              args.repeats)
            decoded, end = impl.decode_signed(blob, 0, n)
            if end != len(blob) or not np.array_equal(decoded, values):
                print(f"MISMATCH: {name} round trip failed at n={n}")
                ok = False
            mb = len(blob) / 1e6
            print(f"{n:>9}  {name:<8} {mb / enc_s:>12.1f} {mb / dec_s:>12.1f}")
        if len(set(encoded.values())) > 1:
            print(f"MISMATCH: backends disagree at n={n}")
            ok = False
    if ok and len(backends) == 2:
        n = sizes[-1]
        values = synth_residuals(rng, n)
        blob = backends["cython"].encode_signed(values)
        cy = time_call(lambda: backends["cython"].encode_signed(values),
                       args.repeats)
        py = time_call(lambda: backends["pure"].encode_signed(values),
                       args.repeats)
        print(f"\ncompiled encode speedup at n={n}: {py / cy:.1f}x")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
