"""Hot numeric kernels, each with a numba-jitted and a pure-numpy path.

The active path is fixed at import time: numba when importable, unless the
environment variable ``GAZESCAPE_KERNELS=numpy`` forces the fallback (any
other value than ``numpy``/``numba`` is rejected). Both paths evaluate the
same IEEE-754 expressions in the same order - reductions run sequentially
on both sides - so their outputs are expected to match bit for bit and the
test suite holds them to that.

Kernels here are the inner loops that dominate runtime: Gaussian deposits
into the attention grid, Chebyshev distance bands for mask feathering,
masked uint8 blending for compositing and frame interpolation, value-noise
fBM for the procedural backend, and the dispersion-window scan for
fixation detection. Everything else in the package is ordinary numpy.
"""

from __future__ import annotations

import math
import os

import numpy as np

_REQUESTED = os.environ.get("GAZESCAPE_KERNELS", "").strip().lower()
if _REQUESTED not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"GAZESCAPE_KERNELS must be 'numba' or 'numpy', got {_REQUESTED!r}"
    )

_HAVE_NUMBA = False
if _REQUESTED != "numpy":
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is an install-time dep
        if _REQUESTED == "numba":
            raise
        _HAVE_NUMBA = False

ACTIVE = "numba" if _HAVE_NUMBA else "numpy"

# 31-bit lattice hash constants (products of 31-bit values stay inside
# int64, so numba and numpy wrap identically with no uint promotion).
_HM = 0x7FFFFFFF
_HA = 0x1F1F1F1F
_HB = 0x5F356495
_HC = 0x27D4EB2F


# ---------------------------------------------------------------------------
# Gaussian splat (attention deposit)
# ---------------------------------------------------------------------------

def _splat_window(cx: float, cy: float, sigma: float, w: int, h: int):
    r = 3.0 * sigma
    j0 = max(0, int(math.floor((cx - r) * w - 0.5)))
    j1 = min(w - 1, int(math.ceil((cx + r) * w - 0.5)))
    i0 = max(0, int(math.floor((cy - r) * h - 0.5)))
    i1 = min(h - 1, int(math.ceil((cy + r) * h - 0.5)))
    return i0, i1, j0, j1


def _splat_add_np(grid: np.ndarray, cx: float, cy: float,
                  weight: float, sigma: float) -> None:
    h, w = grid.shape
    i0, i1, j0, j1 = _splat_window(cx, cy, sigma, w, h)
    r2 = (3.0 * sigma) * (3.0 * sigma)
    inv = 1.0 / (2.0 * sigma * sigma)

    jj = (np.arange(j0, j1 + 1, dtype=np.float64) + 0.5) / w - cx
    ii = (np.arange(i0, i1 + 1, dtype=np.float64) + 0.5) / h - cy
    d2 = ii[:, None] * ii[:, None] + jj[None, :] * jj[None, :]
    # libm exp matches the jit path bit-for-bit; numpy's SIMD exp drifts 1 ulp
    arg = -d2 * inv
    g = np.array([math.exp(v) for v in arg.ravel()]).reshape(d2.shape)
    g = np.where(d2 <= r2, g, 0.0)
    # cumsum keeps the reduction order sequential, matching the jit loop
    total = float(np.cumsum(g.ravel())[-1]) if g.size else 0.0
    if total <= 0.0:
        # stencil narrower than one cell: drop everything into the
        # containing cell so no energy is ever lost
        ci = min(h - 1, max(0, int(cy * h)))
        cj = min(w - 1, max(0, int(cx * w)))
        grid[ci, cj] += weight
        return
    grid[i0:i1 + 1, j0:j1 + 1] += g * (weight / total)


if _HAVE_NUMBA:

    @njit(cache=True)
    def _splat_add_nb(grid, cx, cy, weight, sigma):  # pragma: no cover - jit
        h, w = grid.shape
        r = 3.0 * sigma
        j0 = max(0, int(math.floor((cx - r) * w - 0.5)))
        j1 = min(w - 1, int(math.ceil((cx + r) * w - 0.5)))
        i0 = max(0, int(math.floor((cy - r) * h - 0.5)))
        i1 = min(h - 1, int(math.ceil((cy + r) * h - 0.5)))
        r2 = r * r
        inv = 1.0 / (2.0 * sigma * sigma)

        total = 0.0
        for i in range(i0, i1 + 1):
            dy = (i + 0.5) / h - cy
            for j in range(j0, j1 + 1):
                dx = (j + 0.5) / w - cx
                d2 = dy * dy + dx * dx
                if d2 <= r2:
                    total = total + math.exp(-d2 * inv)
                else:
                    total = total + 0.0
        if total <= 0.0:
            ci = min(h - 1, max(0, int(cy * h)))
            cj = min(w - 1, max(0, int(cx * w)))
            grid[ci, cj] += weight
            return
        scale = weight / total
        for i in range(i0, i1 + 1):
            dy = (i + 0.5) / h - cy
            for j in range(j0, j1 + 1):
                dx = (j + 0.5) / w - cx
                d2 = dy * dy + dx * dx
                if d2 <= r2:
                    grid[i, j] += math.exp(-d2 * inv) * scale


# ---------------------------------------------------------------------------
# Chebyshev distance band (mask feathering)
# ---------------------------------------------------------------------------

def _cheb_band_np(support: np.ndarray, max_d: int) -> np.ndarray:
    h, w = support.shape
    dist = np.where(support != 0, 0, max_d).astype(np.int32)
    reached = support != 0
    for k in range(1, max_d):
        grown = reached.copy()
        grown[1:, :] |= reached[:-1, :]
        grown[:-1, :] |= reached[1:, :]
        grown[:, 1:] |= reached[:, :-1]
        grown[:, :-1] |= reached[:, 1:]
        grown[1:, 1:] |= reached[:-1, :-1]
        grown[1:, :-1] |= reached[:-1, 1:]
        grown[:-1, 1:] |= reached[1:, :-1]
        grown[:-1, :-1] |= reached[1:, 1:]
        newly = grown & ~reached
        if not newly.any():
            break
        dist[newly] = k
        reached = grown
    return dist


if _HAVE_NUMBA:

    @njit(cache=True)
    def _cheb_band_nb(support, max_d):  # pragma: no cover - jit
        # multi-source BFS; 8-connected rings are exactly the Chebyshev
        # metric, and FIFO order means each pixel settles once
        h, w = support.shape
        dist = np.empty((h, w), dtype=np.int32)
        qi = np.empty(h * w, dtype=np.int32)
        qj = np.empty(h * w, dtype=np.int32)
        tail = 0
        for i in range(h):
            for j in range(w):
                if support[i, j] != 0:
                    dist[i, j] = 0
                    qi[tail] = i
                    qj[tail] = j
                    tail += 1
                else:
                    dist[i, j] = max_d
        head = 0
        while head < tail:
            i = qi[head]
            j = qj[head]
            head += 1
            d = dist[i, j] + 1
            if d >= max_d:
                continue
            for di in range(-1, 2):
                ii = i + di
                if ii < 0 or ii >= h:
                    continue
                for dj in range(-1, 2):
                    jj = j + dj
                    if jj < 0 or jj >= w:
                        continue
                    if dist[ii, jj] > d:
                        dist[ii, jj] = d
                        qi[tail] = ii
                        qj[tail] = jj
                        tail += 1
        return dist


# ---------------------------------------------------------------------------
# uint8 blends (composite + interpolation), round half-up
# ---------------------------------------------------------------------------

def _blend_u8_np(base: np.ndarray, over: np.ndarray,
                 cov: np.ndarray) -> np.ndarray:
    b = base.astype(np.float64)
    o = over.astype(np.float64)
    c = cov[:, :, None]
    t = b * (1.0 - c) + o * c + 0.5
    return np.floor(t).astype(np.uint8)


def _blend_u8_scalar_np(a: np.ndarray, b: np.ndarray, alpha: float) -> np.ndarray:
    t = a.astype(np.float64) * (1.0 - alpha) + b.astype(np.float64) * alpha + 0.5
    return np.floor(t).astype(np.uint8)


if _HAVE_NUMBA:

    @njit(cache=True)
    def _blend_u8_nb(base, over, cov):  # pragma: no cover - jit
        h, w, ch = base.shape
        out = np.empty((h, w, ch), dtype=np.uint8)
        for i in range(h):
            for j in range(w):
                c = cov[i, j]
                for k in range(ch):
                    t = base[i, j, k] * (1.0 - c) + over[i, j, k] * c + 0.5
                    out[i, j, k] = np.uint8(math.floor(t))
        return out

    @njit(cache=True)
    def _blend_u8_scalar_nb(a, b, alpha):  # pragma: no cover - jit
        h, w, ch = a.shape
        out = np.empty((h, w, ch), dtype=np.uint8)
        for i in range(h):
            for j in range(w):
                for k in range(ch):
                    t = a[i, j, k] * (1.0 - alpha) + b[i, j, k] * alpha + 0.5
                    out[i, j, k] = np.uint8(math.floor(t))
        return out


# ---------------------------------------------------------------------------
# Value-noise fBM (procedural landscape base)
# ---------------------------------------------------------------------------

def _fbm_grid_np(h: int, w: int, seed: int, base_freq: float, octaves: int,
                 persistence: float, lacunarity: float) -> np.ndarray:
    ny = (np.arange(h, dtype=np.float64) + 0.5) / h
    nx = (np.arange(w, dtype=np.float64) + 0.5) / w
    u = np.broadcast_to(nx[None, :], (h, w))
    v = np.broadcast_to(ny[:, None], (h, w))

    total = np.zeros((h, w), dtype=np.float64)
    norm = 0.0
    amp = 1.0
    freq = base_freq
    for o in range(octaves):
        s = (seed + o * 131) & _HM
        x = u * freq
        y = v * freq
        ix = np.floor(x).astype(np.int64)
        iy = np.floor(y).astype(np.int64)
        fx = x - ix
        fy = y - iy

        def corner(ax, ay):
            hh = ((ax * _HA) & _HM) ^ ((ay * _HB) & _HM) ^ s
            hh = hh ^ (hh >> 13)
            hh = (hh * _HC) & _HM
            hh = hh ^ (hh >> 16)
            return hh.astype(np.float64) / float(_HM)

        ixm = ix & _HM
        iym = iy & _HM
        v00 = corner(ixm, iym)
        v10 = corner((ix + 1) & _HM, iym)
        v01 = corner(ixm, (iy + 1) & _HM)
        v11 = corner((ix + 1) & _HM, (iy + 1) & _HM)

        sx = fx * fx * (3.0 - 2.0 * fx)
        sy = fy * fy * (3.0 - 2.0 * fy)
        a = v00 + (v10 - v00) * sx
        b = v01 + (v11 - v01) * sx
        total = total + (a + (b - a) * sy) * amp
        norm = norm + amp
        amp = amp * persistence
        freq = freq * lacunarity
    return total / norm


if _HAVE_NUMBA:

    @njit(cache=True)
    def _fbm_grid_nb(h, w, seed, base_freq, octaves,
                     persistence, lacunarity):  # pragma: no cover - jit
        out = np.zeros((h, w), dtype=np.float64)
        norm = 0.0
        amp = 1.0
        freq = base_freq
        for o in range(octaves):
            s = (seed + o * 131) & _HM
            for i in range(h):
                y = ((i + 0.5) / h) * freq
                iy = int(math.floor(y))
                fy = y - iy
                iym0 = iy & _HM
                iym1 = (iy + 1) & _HM
                sy = fy * fy * (3.0 - 2.0 * fy)
                for j in range(w):
                    x = ((j + 0.5) / w) * freq
                    ix = int(math.floor(x))
                    fx = x - ix
                    ixm0 = ix & _HM
                    ixm1 = (ix + 1) & _HM

                    hh = ((ixm0 * _HA) & _HM) ^ ((iym0 * _HB) & _HM) ^ s
                    hh = hh ^ (hh >> 13)
                    hh = (hh * _HC) & _HM
                    hh = hh ^ (hh >> 16)
                    v00 = hh / float(_HM)

                    hh = ((ixm1 * _HA) & _HM) ^ ((iym0 * _HB) & _HM) ^ s
                    hh = hh ^ (hh >> 13)
                    hh = (hh * _HC) & _HM
                    hh = hh ^ (hh >> 16)
                    v10 = hh / float(_HM)

                    hh = ((ixm0 * _HA) & _HM) ^ ((iym1 * _HB) & _HM) ^ s
                    hh = hh ^ (hh >> 13)
                    hh = (hh * _HC) & _HM
                    hh = hh ^ (hh >> 16)
                    v01 = hh / float(_HM)

                    hh = ((ixm1 * _HA) & _HM) ^ ((iym1 * _HB) & _HM) ^ s
                    hh = hh ^ (hh >> 13)
                    hh = (hh * _HC) & _HM
                    hh = hh ^ (hh >> 16)
                    v11 = hh / float(_HM)

                    sx = fx * fx * (3.0 - 2.0 * fx)
                    a = v00 + (v10 - v00) * sx
                    b = v01 + (v11 - v01) * sx
                    out[i, j] = out[i, j] + (a + (b - a) * sy) * amp
            norm = norm + amp
            amp = amp * persistence
            freq = freq * lacunarity
        for i in range(h):
            for j in range(w):
                out[i, j] = out[i, j] / norm
        return out


# ---------------------------------------------------------------------------
# Dispersion-window scan (greedy-left maximal fixation windows)
# ---------------------------------------------------------------------------

def _idt_scan_np(t: np.ndarray, x: np.ndarray, y: np.ndarray,
                 threshold: float, min_dur: int) -> np.ndarray:
    n = t.shape[0]
    spans = []
    i = 0
    while i < n:
        min_x = max_x = x[i]
        min_y = max_y = y[i]
        j = i
        while j + 1 < n:
            nx_ = x[j + 1]
            ny_ = y[j + 1]
            mnx = nx_ if nx_ < min_x else min_x
            mxx = nx_ if nx_ > max_x else max_x
            mny = ny_ if ny_ < min_y else min_y
            mxy = ny_ if ny_ > max_y else max_y
            if (mxx - mnx) + (mxy - mny) > threshold:
                break
            min_x, max_x, min_y, max_y = mnx, mxx, mny, mxy
            j += 1
        if t[j] - t[i] >= min_dur:
            spans.append((i, j))
            i = j + 1
        else:
            i += 1
    return np.asarray(spans, dtype=np.int64).reshape(-1, 2)


if _HAVE_NUMBA:

    @njit(cache=True)
    def _idt_scan_nb_raw(t, x, y, threshold, min_dur):  # pragma: no cover - jit
        n = t.shape[0]
        out = np.empty((n, 2), dtype=np.int64)
        count = 0
        i = 0
        while i < n:
            min_x = x[i]
            max_x = x[i]
            min_y = y[i]
            max_y = y[i]
            j = i
            while j + 1 < n:
                nx_ = x[j + 1]
                ny_ = y[j + 1]
                mnx = nx_ if nx_ < min_x else min_x
                mxx = nx_ if nx_ > max_x else max_x
                mny = ny_ if ny_ < min_y else min_y
                mxy = ny_ if ny_ > max_y else max_y
                if (mxx - mnx) + (mxy - mny) > threshold:
                    break
                min_x = mnx
                max_x = mxx
                min_y = mny
                max_y = mxy
                j += 1
            if t[j] - t[i] >= min_dur:
                out[count, 0] = i
                out[count, 1] = j
                count += 1
                i = j + 1
            else:
                i += 1
        return out, count

    def _idt_scan_nb(t, x, y, threshold, min_dur):
        if t.shape[0] == 0:
            return np.empty((0, 2), dtype=np.int64)
        out, count = _idt_scan_nb_raw(t, x, y, threshold, min_dur)
        return out[:count].copy()


if _HAVE_NUMBA:
    splat_add = _splat_add_nb
    cheb_band = _cheb_band_nb
    blend_u8 = _blend_u8_nb
    blend_u8_scalar = _blend_u8_scalar_nb
    fbm_grid = _fbm_grid_nb
    idt_scan = _idt_scan_nb
else:
    splat_add = _splat_add_np
    cheb_band = _cheb_band_np
    blend_u8 = _blend_u8_np
    blend_u8_scalar = _blend_u8_scalar_np
    fbm_grid = _fbm_grid_np
    idt_scan = _idt_scan_np


def warmup() -> None:
    """Trigger JIT compilation of every kernel on tiny inputs.

    Call once at server start (or before timing-sensitive sections) so the
    first real frame does not pay the compile cost. No-op on the numpy path.
    """
    grid = np.zeros((4, 4), dtype=np.float64)
    splat_add(grid, 0.5, 0.5, 1.0, 0.2)
    cheb_band(np.eye(4, dtype=np.uint8), 3)
    img = np.zeros((2, 2, 3), dtype=np.uint8)
    blend_u8(img, img, np.zeros((2, 2), dtype=np.float64))
    blend_u8_scalar(img, img, 0.5)
    fbm_grid(2, 2, 7, 4.0, 2, 0.5, 2.0)
    idt_scan(np.array([0, 20], dtype=np.int64),
             np.array([0.5, 0.5]), np.array([0.5, 0.5]), 0.05, 10)
