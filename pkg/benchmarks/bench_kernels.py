"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Run from the repo root:

    python3 benchmarks/bench_kernels.py

Sizes mirror the live engine: 64² attention grid, 512² canvas, 24 px
feather band, 500-sample gaze windows.
"""

import time

import numpy as np

from gazescape import _kernels as K

if not K._HAVE_NUMBA:
    raise SystemExit("numba path not loaded; run without GAZESCAPE_KERNELS=numpy")


def bench(label, fn, *args, repeat=20):
    fn(*args)  # warm (JIT compile / cache touch)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)

    grid = np.zeros((64, 64))
    splat_args = (0.41, 0.77, 0.033, 0.04)

    sup = np.zeros((512, 512), dtype=np.uint8)
    sup[200:260, 180:240] = 1
    sup[400:420, 60:90] = 1

    base = rng.integers(0, 256, (512, 512, 3), dtype=np.uint8)
    over = rng.integers(0, 256, (512, 512, 3), dtype=np.uint8)
    cov = rng.random((512, 512))

    t = np.cumsum(rng.integers(5, 40, 500)).astype(np.int64)
    x = np.clip(np.cumsum(rng.normal(0, 0.01, 500)) + 0.5, 0, 1)
    y = np.clip(np.cumsum(rng.normal(0, 0.01, 500)) + 0.5, 0, 1)

    cases = [
        ("gaussian splat 64²",
         lambda: K._splat_add_nb(grid, *splat_args),
         lambda: K._splat_add_np(grid, *splat_args)),
        ("chebyshev band 512², d=24",
         lambda: K._cheb_band_nb(sup, 24),
         lambda: K._cheb_band_np(sup, 24)),
        ("masked blend 512²",
         lambda: K._blend_u8_nb(base, over, cov),
         lambda: K._blend_u8_np(base, over, cov)),
        ("scalar blend 512²",
         lambda: K._blend_u8_scalar_nb(base, over, 0.4),
         lambda: K._blend_u8_scalar_np(base, over, 0.4)),
        ("fbm grid 512², 5 octaves",
         lambda: K._fbm_grid_nb(512, 512, 7, 5.0, 5, 0.5, 2.0),
         lambda: K._fbm_grid_np(512, 512, 7, 5.0, 5, 0.5, 2.0)),
        ("idt scan, 500 samples",
         lambda: K._idt_scan_nb(t, x, y, 0.03, 100),
         lambda: K._idt_scan_np(t, x, y, 0.03, 100)),
    ]

    print(f"{'kernel':<28} {'numba':>10} {'numpy':>10} {'speedup':>9}")
    print("-" * 60)
    for label, nb, np_ in cases:
        t_nb = bench(label, lambda: nb())
        t_np = bench(label, lambda: np_())
        print(f"{label:<28} {t_nb * 1e3:>8.2f}ms {t_np * 1e3:>8.2f}ms "
              f"{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
