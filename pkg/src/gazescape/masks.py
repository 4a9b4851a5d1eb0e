"""Inpainting masks from dwell regions: upsampling, feathering, bboxes.

A mask is built in canvas pixel space from the activated cells of the
attention grid. Activated cells become full coverage (the support);
coverage then falls off linearly with Chebyshev distance across the
feather band so composited seams stay invisible. One mask per cycle: when
several disjoint regions activate at once, the one holding the global
energy peak fires and the others stay charged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .attention import AttentionField, dwell_regions


@dataclass(frozen=True)
class InpaintMask:
    """Soft coverage map, stored as a crop plus its canvas placement.

    coverage values are in [0, 1]; support pixels (coverage == 1) are the
    upsampled activated cells; everything outside `bbox` is implicitly 0.
    bbox is (x0, y0, x1, y1) with exclusive upper bounds.
    """
    coverage: np.ndarray
    bbox: tuple[int, int, int, int]
    canvas_w: int
    canvas_h: int

    def coverage_full(self) -> np.ndarray:
        full = np.zeros((self.canvas_h, self.canvas_w), dtype=np.float64)
        x0, y0, x1, y1 = self.bbox
        full[y0:y1, x0:x1] = self.coverage
        return full

    def support_full(self) -> np.ndarray:
        return self.coverage_full() >= 1.0

    def to_u8(self) -> np.ndarray:
        """Quantize the crop to the 8-bit wire/serialization form."""
        return quantize_u8(self.coverage)


def quantize_u8(coverage: np.ndarray) -> np.ndarray:
    """Coverage in [0,1] to uint8, rounding half-up like the compositor."""
    return np.floor(coverage * 255.0 + 0.5).astype(np.uint8)


def _connected_components(cells: set[tuple[int, int]]) -> list[set[tuple[int, int]]]:
    """8-connected components of a sparse cell set; plain BFS, the grid is
    tiny (64x64)."""
    remaining = set(cells)
    comps = []
    while remaining:
        seed = next(iter(remaining))
        remaining.discard(seed)
        comp = {seed}
        frontier = [seed]
        while frontier:
            r, c = frontier.pop()
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    nb = (r + dr, c + dc)
                    if nb in remaining:
                        remaining.discard(nb)
                        comp.add(nb)
                        frontier.append(nb)
        comps.append(comp)
    return comps


def _cell_rect(r: int, c: int, grid_w: int, grid_h: int,
               canvas_w: int, canvas_h: int) -> tuple[int, int, int, int]:
    x0 = (c * canvas_w) // grid_w
    x1 = ((c + 1) * canvas_w) // grid_w
    y0 = (r * canvas_h) // grid_h
    y1 = ((r + 1) * canvas_h) // grid_h
    return x0, y0, x1, y1


def build_mask(field: AttentionField, canvas_w: int, canvas_h: int,
               activation_threshold: float, feather_px: int) -> InpaintMask | None:
    """Build the next inpainting mask, or None when nothing is activated.

    Side effect: the cells of the fired region are zeroed in the field, so
    the same dwell cannot fire twice without fresh gaze; neighboring
    charged-but-unfired regions keep their energy.
    """
    detail = build_mask_detail(field, canvas_w, canvas_h,
                               activation_threshold, feather_px)
    return detail[0] if detail is not None else None


def build_mask_detail(
        field: AttentionField, canvas_w: int, canvas_h: int,
        activation_threshold: float, feather_px: int,
) -> tuple[InpaintMask, frozenset[tuple[int, int]]] | None:
    """build_mask plus the grid cells that fired (for region bookkeeping)."""
    if canvas_w <= 0 or canvas_h <= 0:
        raise ValueError("canvas dimensions must be positive")
    if feather_px < 0:
        raise ValueError("feather_px must be non-negative")

    active = dwell_regions(field, activation_threshold)
    if not active:
        return None

    comps = _connected_components(active)
    # sorted iteration pins the tie-break when two cells share the peak
    peak_rc = max(sorted(active), key=lambda rc: field.grid[rc[0], rc[1]])
    fired = next(comp for comp in comps if peak_rc in comp)

    gw, gh = field.grid_w, field.grid_h
    support = np.zeros((canvas_h, canvas_w), dtype=np.uint8)
    for r, c in fired:
        x0, y0, x1, y1 = _cell_rect(r, c, gw, gh, canvas_w, canvas_h)
        support[y0:y1, x0:x1] = 1

    for r, c in fired:
        field.grid[r, c] = 0.0

    ys, xs = np.nonzero(support)
    sx0, sx1 = int(xs.min()), int(xs.max()) + 1
    sy0, sy1 = int(ys.min()), int(ys.max()) + 1

    if feather_px == 0:
        bbox = (sx0, sy0, sx1, sy1)
        cov = support[sy0:sy1, sx0:sx1].astype(np.float64)
        return (InpaintMask(coverage=cov, bbox=bbox,
                            canvas_w=canvas_w, canvas_h=canvas_h),
                frozenset(fired))

    # the band reaches Chebyshev distance feather_px - 1 (coverage hits 0
    # exactly at feather_px)
    bx0 = max(0, sx0 - (feather_px - 1))
    bx1 = min(canvas_w, sx1 + (feather_px - 1))
    by0 = max(0, sy0 - (feather_px - 1))
    by1 = min(canvas_h, sy1 + (feather_px - 1))
    window = support[by0:by1, bx0:bx1]
    dist = _kernels.cheb_band(np.ascontiguousarray(window), feather_px)
    cov = np.maximum(0.0, 1.0 - dist.astype(np.float64) / feather_px)

    nz_ys, nz_xs = np.nonzero(cov > 0.0)
    tx0, tx1 = int(nz_xs.min()), int(nz_xs.max()) + 1
    ty0, ty1 = int(nz_ys.min()), int(nz_ys.max()) + 1
    bbox = (bx0 + tx0, by0 + ty0, bx0 + tx1, by0 + ty1)
    return (InpaintMask(coverage=cov[ty0:ty1, tx0:tx1], bbox=bbox,
                        canvas_w=canvas_w, canvas_h=canvas_h),
            frozenset(fired))


def padded_bbox(mask: InpaintMask, pad_px: int, min_side_px: int,
                canvas_w: int, canvas_h: int) -> tuple[int, int, int, int]:
    """Generation crop rect: tight bbox grown by padding, then to a minimum
    side, then clipped - growing inward at canvas edges so the minimum side
    survives clipping whenever the canvas allows."""

    def expand(lo: int, hi: int, limit: int) -> tuple[int, int]:
        lo -= pad_px
        hi += pad_px
        short = min_side_px - (hi - lo)
        if short > 0:
            lo -= short // 2
            hi += short - short // 2
        if lo < 0:
            hi = min(limit, hi - lo)
            lo = 0
        if hi > limit:
            lo = max(0, lo - (hi - limit))
            hi = limit
        return lo, hi

    x0, y0, x1, y1 = mask.bbox
    nx0, nx1 = expand(x0, x1, canvas_w)
    ny0, ny1 = expand(y0, y1, canvas_h)
    return nx0, ny0, nx1, ny1
