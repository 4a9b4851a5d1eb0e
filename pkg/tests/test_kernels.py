"""Both kernel paths must agree bit-for-bit; the jit path is the fast one."""

import numpy as np
import pytest

from gazescape import _kernels as K

pytestmark = pytest.mark.skipif(not K._HAVE_NUMBA,
                                reason="numba unavailable; single path only")


def test_splat_paths_bit_equal(rng):
    for _ in range(50):
        cx, cy = rng.random(), rng.random()
        sigma = 0.002 + rng.random() * 0.15
        w = 0.01 + rng.random()
        a = rng.random((64, 64))
        b = a.copy()
        K._splat_add_nb(a, cx, cy, w, sigma)
        K._splat_add_np(b, cx, cy, w, sigma)
        assert np.array_equal(a, b)


def test_cheb_band_paths_bit_equal(rng):
    for density in (0.002, 0.02, 0.2):
        sup = (rng.random((96, 80)) < density).astype(np.uint8)
        if not sup.any():
            sup[3, 4] = 1
        a = K._cheb_band_nb(sup, 17)
        b = K._cheb_band_np(sup, 17)
        assert np.array_equal(a, b)


def test_blend_paths_bit_equal(rng):
    base = rng.integers(0, 256, (40, 50, 3), dtype=np.uint8)
    over = rng.integers(0, 256, (40, 50, 3), dtype=np.uint8)
    cov = rng.random((40, 50))
    assert np.array_equal(K._blend_u8_nb(base, over, cov),
                          K._blend_u8_np(base, over, cov))
    for alpha in (0.0, 0.25, 0.5, 0.999, 1.0):
        assert np.array_equal(K._blend_u8_scalar_nb(base, over, alpha),
                              K._blend_u8_scalar_np(base, over, alpha))


def test_fbm_paths_bit_equal():
    a = K._fbm_grid_nb(70, 90, 12345, 6.0, 5, 0.5, 2.0)
    b = K._fbm_grid_np(70, 90, 12345, 6.0, 5, 0.5, 2.0)
    assert np.array_equal(a, b)
    assert 0.0 <= a.min() and a.max() <= 1.0


def test_idt_paths_equal(rng):
    for _ in range(20):
        n = int(rng.integers(1, 400))
        t = np.cumsum(rng.integers(5, 40, n)).astype(np.int64)
        x = np.clip(np.cumsum(rng.normal(0, 0.02, n)) + 0.5, 0, 1)
        y = np.clip(np.cumsum(rng.normal(0, 0.02, n)) + 0.5, 0, 1)
        a = K._idt_scan_nb(t, x, y, 0.03, 100)
        b = K._idt_scan_np(t, x, y, 0.03, 100)
        assert np.array_equal(a, b)


def test_active_backend_reported():
    assert K.ACTIVE in ("numba", "numpy")
