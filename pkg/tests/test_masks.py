import numpy as np
from scipy import ndimage

from gazescape.attention import AttentionField
from gazescape.masks import (InpaintMask, build_mask, build_mask_detail,
                             padded_bbox, quantize_u8)


def feather_oracle(support: np.ndarray, feather_px: int) -> np.ndarray:
    """Coverage via an independent distance transform (scipy chessboard)."""
    if feather_px == 0:
        return support.astype(np.float64)
    dist = ndimage.distance_transform_cdt(support == 0, metric="chessboard")
    return np.maximum(0.0, 1.0 - dist.astype(np.float64) / feather_px)


def feather_oracle_literal(support: np.ndarray, feather_px: int) -> np.ndarray:
    """Per-pixel min Chebyshev distance, written out longhand; anchors the
    scipy oracle on small grids."""
    h, w = support.shape
    pts = np.argwhere(support != 0)
    cov = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            d = np.min(np.maximum(np.abs(pts[:, 0] - y),
                                  np.abs(pts[:, 1] - x)))
            cov[y, x] = max(0.0, 1.0 - d / feather_px) if feather_px else \
                (1.0 if d == 0 else 0.0)
    return cov


def field_with_cells(cells, grid=64, value=1.0):
    f = AttentionField(grid, grid)
    for r, c in cells:
        f.grid[r, c] = value
    return f


class TestBuildMask:
    def test_zero_field_yields_none(self):
        assert build_mask(AttentionField(64, 64), 512, 512, 0.01, 24) is None

    def test_single_cell_block_index_arithmetic(self):
        # oracle: cell (r, c) of a 64-grid on a 512 canvas is the 8x8 block
        # at rows r*8.., cols c*8..
        f = field_with_cells([(10, 20)])
        mask = build_mask(f, 512, 512, 0.5, 0)
        assert mask.bbox == (20 * 8, 10 * 8, 21 * 8, 11 * 8)
        assert mask.coverage.shape == (8, 8)
        assert (mask.coverage == 1.0).all()

    def test_feather_matches_distance_transform(self):
        f = field_with_cells([(10, 20)])
        mask = build_mask(f, 512, 512, 0.5, 4)
        full = mask.coverage_full()
        sup = np.zeros((512, 512), dtype=np.uint8)
        sup[80:88, 160:168] = 1
        want = feather_oracle(sup, 4)
        assert np.array_equal(quantize_u8(full), quantize_u8(want))

    def test_feather_matches_oracle_on_random_fields(self, rng):
        for _ in range(40):
            grid = 16
            canvas = 128
            f = AttentionField(grid, grid)
            n = int(rng.integers(1, 12))
            cells = {(int(rng.integers(grid)), int(rng.integers(grid)))
                     for _ in range(n)}
            for r, c in cells:
                f.grid[r, c] = 1.0
            feather = int(rng.integers(0, 12))
            detail = build_mask_detail(f, canvas, canvas, 0.5, feather)
            mask, fired = detail
            sup = np.zeros((canvas, canvas), dtype=np.uint8)
            blk = canvas // grid
            for r, c in fired:
                sup[r * blk:(r + 1) * blk, c * blk:(c + 1) * blk] = 1
            want = feather_oracle(sup, feather)
            assert np.array_equal(quantize_u8(mask.coverage_full()),
                                  quantize_u8(want))

    def test_scipy_oracle_agrees_with_literal_loops(self, rng):
        sup = (rng.random((20, 24)) < 0.08).astype(np.uint8)
        sup[7, 9] = 1
        a = feather_oracle(sup, 5)
        b = feather_oracle_literal(sup, 5)
        assert np.allclose(a, b)

    def test_peak_region_fires_other_stays_charged(self):
        f = field_with_cells([(10, 10)], value=2.0)
        f.grid[40, 40] = 1.0
        detail = build_mask_detail(f, 512, 512, 0.5, 0)
        mask, fired = detail
        assert fired == {(10, 10)}
        assert f.grid[10, 10] == 0.0
        assert f.grid[40, 40] == 1.0  # left charged for the next cycle

    def test_connected_region_fires_together(self):
        f = field_with_cells([(10, 10), (10, 11), (11, 10)])
        detail = build_mask_detail(f, 512, 512, 0.5, 0)
        _, fired = detail
        assert fired == {(10, 10), (10, 11), (11, 10)}

    def test_reset_semantics_second_call_none(self):
        f = field_with_cells([(5, 5)])
        assert build_mask(f, 256, 256, 0.5, 8) is not None
        assert build_mask(f, 256, 256, 0.5, 8) is None

    def test_coverage_zero_outside_bbox(self, rng):
        f = field_with_cells([(3, 3), (30, 50)])
        mask = build_mask(f, 512, 512, 0.5, 24)
        full = mask.coverage_full()
        x0, y0, x1, y1 = mask.bbox
        outside = full.copy()
        outside[y0:y1, x0:x1] = 0.0
        assert (outside == 0.0).all()
        assert (full >= 0.0).all() and (full <= 1.0).all()

    def test_nonsquare_canvas_and_grid(self):
        f = AttentionField(32, 16)  # 32 wide, 16 tall
        f.grid[4, 20] = 1.0
        mask = build_mask(f, 640, 360, 0.5, 0)
        # cell width 640/32 = 20, cell height floor boundaries of 360/16
        assert mask.bbox == (400, 90, 420, 112)


class TestPaddedBbox:
    def _mask_with_bbox(self, bbox, canvas=512):
        x0, y0, x1, y1 = bbox
        cov = np.ones((y1 - y0, x1 - x0))
        return InpaintMask(coverage=cov, bbox=bbox, canvas_w=canvas,
                           canvas_h=canvas)

    def test_interval_arithmetic_case(self):
        # support block is 100..108 inclusive on both axes
        mask = self._mask_with_bbox((100, 100, 109, 109))
        rect = padded_bbox(mask, 16, 64, 512, 512)
        x0, y0, x1, y1 = rect
        assert x1 - x0 >= 64 and y1 - y0 >= 64
        assert x0 <= 84 and x1 >= 125 and y0 <= 84 and y1 >= 125

    def test_corner_clipping_grows_inward(self):
        mask = self._mask_with_bbox((0, 0, 8, 8))
        rect = padded_bbox(mask, 16, 64, 512, 512)
        assert rect == (0, 0, 64, 64)

    def test_identity_padding(self):
        mask = self._mask_with_bbox((40, 60, 90, 100))
        assert padded_bbox(mask, 0, 0, 512, 512) == (40, 60, 90, 100)

    def test_containment_property(self, rng):
        for _ in range(200):
            x0 = int(rng.integers(0, 500))
            y0 = int(rng.integers(0, 500))
            x1 = x0 + int(rng.integers(1, 512 - x0 + 1))
            y1 = y0 + int(rng.integers(1, 512 - y0 + 1))
            mask = self._mask_with_bbox((x0, y0, x1, y1))
            pad = int(rng.integers(0, 40))
            min_side = int(rng.integers(0, 200))
            rect = padded_bbox(mask, pad, min_side, 512, 512)
            rx0, ry0, rx1, ry1 = rect
            assert 0 <= rx0 <= x0 and x1 <= rx1 <= 512
            assert 0 <= ry0 <= y0 and y1 <= ry1 <= 512
            assert rx1 - rx0 >= min(512, max(min_side, x1 - x0))
            assert ry1 - ry0 >= min(512, max(min_side, y1 - y0))

    def test_min_side_larger_than_canvas_clips_to_canvas(self):
        mask = self._mask_with_bbox((10, 10, 20, 20), canvas=128)
        assert padded_bbox(mask, 0, 1000, 128, 128) == (0, 0, 128, 128)
