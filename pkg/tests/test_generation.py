import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from gazescape.attention import AttentionField
from gazescape.generation import (BackendTimeout, BackendUnavailable,
                                  DimensionMismatch, GenerationRequest,
                                  MalformedResponse, NetworkBackend,
                                  ProceduralBackend, composite, generate,
                                  inpaint_cycle, regenerate_scene,
                                  request_from_json, request_to_json)
from gazescape.imgio import png_b64_encode
from gazescape.masks import InpaintMask, build_mask


def scene(prompt="meadow", seed=1, w=96, h=96):
    return generate(ProceduralBackend(), GenerationRequest(
        kind="full_scene", prompt=prompt, seed=seed, strength=1.0,
        width=w, height=h))


def square_mask(x0, y0, x1, y1, canvas=96, feather=0):
    f = AttentionField(canvas // 8, canvas // 8)
    for r in range(y0 // 8, y1 // 8):
        for c in range(x0 // 8, x1 // 8):
            f.grid[r, c] = 1.0
    return build_mask(f, canvas, canvas, 0.5, feather)


class TestProceduralBackend:
    def test_full_scene_deterministic(self):
        assert np.array_equal(scene(), scene())

    def test_seeds_differ_enough(self):
        a, b = scene(seed=5), scene(seed=6)
        frac = (a != b).any(axis=2).mean()
        assert frac >= 0.01

    def test_inpaint_deterministic(self):
        crop = scene()
        mask = np.full((96, 96), 255, dtype=np.uint8)
        req = GenerationRequest(kind="inpaint", prompt="mining", seed=42,
                                strength=0.85, width=96, height=96,
                                image_crop=crop, mask_crop=mask)
        assert np.array_equal(generate(ProceduralBackend(), req),
                              generate(ProceduralBackend(), req))

    def test_prompts_differ_on_crop(self):
        # pixel-diff oracle: different prompts must change >= 1% of pixels
        crop = scene()
        mask = np.full((96, 96), 255, dtype=np.uint8)
        outs = {}
        for prompt in ("mining", "catastrophe"):
            req = GenerationRequest(kind="inpaint", prompt=prompt, seed=42,
                                    strength=0.85, width=96, height=96,
                                    image_crop=crop, mask_crop=mask)
            outs[prompt] = generate(ProceduralBackend(), req)
        frac = (outs["mining"] != outs["catastrophe"]).any(axis=2).mean()
        assert frac >= 0.01

    def test_request_invariants(self):
        with pytest.raises(ValueError):
            GenerationRequest(kind="inpaint", prompt="x", seed=1,
                              strength=0.5, width=8, height=8)
        with pytest.raises(DimensionMismatch):
            GenerationRequest(kind="inpaint", prompt="x", seed=1,
                              strength=0.5, width=8, height=8,
                              image_crop=np.zeros((8, 8, 3), np.uint8),
                              mask_crop=np.zeros((4, 4), np.uint8))
        with pytest.raises(ValueError):
            GenerationRequest(kind="full_scene", prompt="x", seed=1,
                              strength=1.5, width=8, height=8)


class TestComposite:
    def composite_oracle(self, original, generated, cov_full, bbox):
        """Per-pixel arithmetic, written out longhand."""
        import math
        x0, y0, x1, y1 = bbox
        out = original.copy()
        for y in range(y0, y1):
            for x in range(x0, x1):
                c = cov_full[y, x]
                for ch in range(3):
                    v = original[y, x, ch] * (1.0 - c) \
                        + generated[y - y0, x - x0, ch] * c + 0.5
                    out[y, x, ch] = int(math.floor(v))
        return out

    def test_zero_mask_identity(self):
        img = scene()
        mask = square_mask(16, 16, 48, 48)
        zero = InpaintMask(coverage=np.zeros_like(mask.coverage),
                           bbox=mask.bbox, canvas_w=96, canvas_h=96)
        gen = scene(prompt="other", seed=9)[16:48, 16:48]
        out = composite(img, gen, zero, (16, 16, 48, 48))
        assert np.array_equal(out, img)

    def test_full_coverage_pure_paste(self):
        img = scene()
        mask = square_mask(16, 16, 48, 48)
        gen = scene(prompt="other", seed=9)[16:48, 16:48]
        out = composite(img, gen, mask, (16, 16, 48, 48))
        assert np.array_equal(out[16:48, 16:48], gen)
        outside = out.copy()
        outside[16:48, 16:48] = img[16:48, 16:48]
        assert np.array_equal(outside, img)

    def test_matches_per_pixel_oracle(self, rng):
        original = rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)
        cov = np.zeros((40, 40))
        cov[:] = 0.5
        cov[5:12, 5:12] = 1.0
        cov[0, :] = 0.0
        mask = InpaintMask(coverage=cov, bbox=(10, 12, 50, 52),
                           canvas_w=64, canvas_h=64)
        generated = rng.integers(0, 256, (44, 44, 3), dtype=np.uint8)
        bbox = (8, 10, 52, 54)
        out = composite(original, generated, mask, bbox)
        cov_full = mask.coverage_full()
        want = self.composite_oracle(original, generated, cov_full, bbox)
        assert np.array_equal(out, want)

    def test_dimension_mismatch(self):
        img = scene()
        mask = square_mask(16, 16, 48, 48)
        with pytest.raises(DimensionMismatch):
            composite(img, np.zeros((10, 10, 3), np.uint8), mask,
                      (16, 16, 48, 48))


class TestInpaintCycle:
    def test_outside_coverage_bit_exact_over_many_cycles(self, rng):
        canvas = scene(w=128, h=128)
        initial = canvas.copy()
        covered = np.zeros((128, 128), dtype=bool)
        backend = ProceduralBackend()
        for i in range(25):
            x0 = int(rng.integers(0, 13)) * 8
            y0 = int(rng.integers(0, 13)) * 8
            mask = square_mask(x0, y0, x0 + 24, y0 + 24, canvas=128,
                               feather=int(rng.integers(0, 8)))
            result = inpaint_cycle(canvas, mask, "mining", backend,
                                   seed=int(rng.integers(1 << 30)),
                                   pad_px=8, min_side_px=48)
            assert result.ok
            canvas = result.image
            covered |= mask.coverage_full() > 0
        assert np.array_equal(canvas[~covered], initial[~covered])

    def test_backend_failure_leaves_canvas_untouched(self):
        canvas = scene()
        mask = square_mask(16, 16, 48, 48)

        class FailingBackend:
            name = "failing"
            deterministic = True
            expected_latency_ms = 0

            def generate(self, request):
                raise BackendTimeout("deadline exceeded")

        result = inpaint_cycle(canvas, mask, "mining", FailingBackend(), 1)
        assert not result.ok
        assert result.error_kind == "BackendTimeout"
        assert np.array_equal(result.image, canvas)


class TestRegenerateScene:
    def test_deterministic(self):
        backend = ProceduralBackend()
        a = regenerate_scene(backend, "meadow", 11, 96, 96)
        b = regenerate_scene(backend, "meadow", 11, 96, 96)
        assert np.array_equal(a, b)

    def test_adjacent_seeds_differ(self):
        backend = ProceduralBackend()
        a = regenerate_scene(backend, "meadow", 11, 96, 96)
        b = regenerate_scene(backend, "meadow", 12, 96, 96)
        assert (a != b).any(axis=2).mean() >= 0.01

    def test_retries_then_gives_up(self):
        calls = []

        class FlakyBackend:
            name = "flaky"
            deterministic = False
            expected_latency_ms = 0

            def generate(self, request):
                calls.append(request.seed)
                raise BackendUnavailable("down")

        out = regenerate_scene(FlakyBackend(), "meadow", 5, 32, 32,
                               retry_limit=3)
        assert out is None
        assert calls == [5, 6, 7, 8]  # incremented seed per retry


class _StubHandler(BaseHTTPRequestHandler):
    behavior = "ok"

    def log_message(self, *args):
        pass

    def do_POST(self):
        n = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(n))
        if self.behavior == "ok":
            req = request_from_json(payload)
            img = ProceduralBackend().generate(req)
            body = json.dumps({"image_png_b64": png_b64_encode(img)})
            self.send_response(200)
        elif self.behavior == "error":
            body = json.dumps({"error": "gpu on fire"})
            self.send_response(500)
        elif self.behavior == "garbage":
            body = "<html>nope</html>"
            self.send_response(200)
        else:  # wrong-dims
            img = np.zeros((3, 3, 3), dtype=np.uint8)
            body = json.dumps({"image_png_b64": png_b64_encode(img)})
            self.send_response(200)
        data = body.encode()
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}", _StubHandler
    server.shutdown()


class TestNetworkBackend:
    def test_round_trip_matches_local_procedural(self, stub_server):
        endpoint, handler = stub_server
        handler.behavior = "ok"
        req = GenerationRequest(kind="full_scene", prompt="meadow", seed=3,
                                strength=1.0, width=48, height=48)
        remote = generate(NetworkBackend(endpoint), req)
        local = generate(ProceduralBackend(), req)
        assert np.array_equal(remote, local)

    def test_inpaint_payload_round_trip(self):
        crop = scene(w=48, h=48)
        req = GenerationRequest(kind="inpaint", prompt="mining", seed=9,
                                strength=0.7, width=48, height=48,
                                image_crop=crop,
                                mask_crop=np.full((48, 48), 200, np.uint8))
        back = request_from_json(request_to_json(req))
        assert back.prompt == req.prompt and back.seed == req.seed
        assert np.array_equal(back.image_crop, req.image_crop)
        assert np.array_equal(back.mask_crop, req.mask_crop)

    def test_unreachable_endpoint(self):
        backend = NetworkBackend("http://127.0.0.1:1", timeout_ms=2000)
        req = GenerationRequest(kind="full_scene", prompt="x", seed=1,
                                strength=1.0, width=8, height=8)
        with pytest.raises(BackendUnavailable):
            backend.generate(req)

    def test_error_response(self, stub_server):
        endpoint, handler = stub_server
        handler.behavior = "error"
        req = GenerationRequest(kind="full_scene", prompt="x", seed=1,
                                strength=1.0, width=8, height=8)
        with pytest.raises(BackendUnavailable, match="gpu on fire"):
            NetworkBackend(endpoint).generate(req)

    def test_malformed_response(self, stub_server):
        endpoint, handler = stub_server
        handler.behavior = "garbage"
        req = GenerationRequest(kind="full_scene", prompt="x", seed=1,
                                strength=1.0, width=8, height=8)
        with pytest.raises(MalformedResponse):
            NetworkBackend(endpoint).generate(req)

    def test_wrong_dimensions_rejected(self, stub_server):
        endpoint, handler = stub_server
        handler.behavior = "wrong-dims"
        req = GenerationRequest(kind="full_scene", prompt="x", seed=1,
                                strength=1.0, width=8, height=8)
        with pytest.raises(MalformedResponse):
            generate(NetworkBackend(endpoint), req)
