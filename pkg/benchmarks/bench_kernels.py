"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel on representative workloads under both backends and
prints a timing table. Usage:

    python benchmarks/bench_kernels.py [--repeat 5]

The active simulation backend is chosen by ADHOCSIM_NUMBA; this script
always imports both implementations directly.
"""

import argparse
import time

import numpy as np

from adhocsim.kernels import numpy_impl

try:
    from adhocsim.kernels import numba_impl
except ImportError:
    numba_impl = None


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def make_workloads():
    rng = np.random.default_rng(0)
    g_small = np.geomspace(0.01, 2000.0, 2_000)
    g_big = np.geomspace(0.01, 2000.0, 200_000)
    x_big = rng.uniform(0.0, 300.0, 1_000_000)
    a = rng.uniform(0.0, 15.0, 20_000)
    b = rng.uniform(0.0, 25.0, 20_000)
    m = 64
    fi = rng.uniform(0, 1200, m)
    pi_ = rng.uniform(-np.pi, np.pi, m)
    fq = rng.uniform(0, 1200, m)
    pq = rng.uniform(-np.pi, np.pi, m)
    t = np.arange(1_000_000) * 1e-4
    d2 = np.array([8.0, 12.0, 16.0, 20.0, 24.0, 32.0])
    mult = np.array([24.0, 16.0, 174.0, 16.0, 24.0, 1.0])

    return [
        ("j0(1e6)", lambda impl: impl.j0(x_big)),
        ("i0e(1e6)", lambda impl: impl.i0e(x_big)),
        ("marcum_q1(2e4)", lambda impl: impl.marcum_q1(a, b)),
        ("ber_dqpsk(2e5)", lambda impl: impl.ber_dqpsk(g_big)),
        ("cck_bit_error(2e5)", lambda impl: impl.cck_bit_error(g_big, d2, mult, 1 / 11, 8.0)),
        (
            "packet_success(2e5)",
            lambda impl: impl.packet_success(impl.ber_dbpsk(g_big), 2384.0),
        ),
        (
            "fading_sample(1e6, M=64)",
            lambda impl: impl.fading_sample(t, fi, pi_, fq, pq, 0.125),
        ),
        ("ber_dqpsk(2e3) small", lambda impl: impl.ber_dqpsk(g_small)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    impls = [("numpy", numpy_impl)]
    if numba_impl is not None:
        impls.append(("numba", numba_impl))
    else:
        print("numba unavailable; benchmarking the numpy fallback only")

    workloads = make_workloads()
    # warm-up pass (also triggers jit compilation)
    for _, fn in workloads:
        for _, impl in impls:
            fn(impl)

    width = max(len(name) for name, _ in workloads)
    header = f"{'workload':<{width}}  " + "  ".join(f"{n:>10}" for n, _ in impls)
    if len(impls) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, fn in workloads:
        times = [_time(lambda impl=impl: fn(impl), args.repeat) for _, impl in impls]
        row = f"{name:<{width}}  " + "  ".join(f"{t*1e3:>8.2f}ms" for t in times)
        if len(times) == 2:
            row += f"  {times[0]/times[1]:>7.1f}x"
        print(row)

    # cross-check: identical results up to floating-point noise
    if len(impls) == 2:
        g = np.geomspace(0.05, 1000, 5000)
        a_ = numba_impl.ber_dqpsk(g)
        b_ = numpy_impl.ber_dqpsk(g)
        # below ~1e-18 the expression's two terms cancel; packet-success
        # equivalent to zero there, so compare only the meaningful range
        assert np.allclose(a_, b_, rtol=1e-7, atol=1e-18)
        print("\nbackends agree on ber_dqpsk to 1e-7 relative above 1e-18")


if __name__ == "__main__":
    main()
