"""One inpaint cycle: crop, generate, composite strictly inside the mask.

The compositor is the degradation fix at the heart of the pipeline: the
generated crop is merged back through the mask coverage, so pixels with
zero coverage stay bit-exact copies of the original no matter how many
cycles run. Generation itself sits behind a small backend interface -
a deterministic procedural stand-in for desk-scale verification and an
HTTP client for real diffusion servers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np
import requests

from . import _kernels
from .imgio import png_b64_decode, png_b64_encode
from .masks import InpaintMask, padded_bbox, quantize_u8
from .rng import mix64, stable_text_hash, unit_float


class BackendError(Exception):
    """Base for generation backend failures; cycles skip, engine survives."""


class BackendTimeout(BackendError):
    pass


class BackendUnavailable(BackendError):
    pass


class MalformedResponse(BackendError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class BackendDescriptor:
    name: str
    deterministic: bool
    expected_latency_ms: int


@dataclass(frozen=True)
class GenerationRequest:
    kind: str  # "inpaint" | "full_scene"
    prompt: str
    seed: int
    strength: float
    width: int
    height: int
    image_crop: np.ndarray | None = None
    mask_crop: np.ndarray | None = None  # uint8 coverage, inpaint only

    def __post_init__(self):
        if self.kind not in ("inpaint", "full_scene"):
            raise ValueError(f"unknown request kind {self.kind!r}")
        if not (0.0 < self.strength <= 1.0):
            raise ValueError("strength must be in (0, 1]")
        if self.kind == "inpaint":
            if self.image_crop is None or self.mask_crop is None:
                raise ValueError("inpaint request needs image and mask crops")
            if self.image_crop.shape[:2] != self.mask_crop.shape[:2]:
                raise DimensionMismatch(
                    f"crop {self.image_crop.shape[:2]} vs "
                    f"mask {self.mask_crop.shape[:2]}")
            if not (self.mask_crop > 0).any():
                raise ValueError("inpaint mask has no coverage")


@runtime_checkable
class GenerationBackend(Protocol):
    name: str
    deterministic: bool
    expected_latency_ms: int

    def generate(self, request: GenerationRequest) -> np.ndarray: ...


def describe(backend: GenerationBackend) -> BackendDescriptor:
    return BackendDescriptor(backend.name, backend.deterministic,
                             backend.expected_latency_ms)


def generate(backend: GenerationBackend,
             request: GenerationRequest) -> np.ndarray:
    """Run one generation and enforce the dimension contract."""
    out = backend.generate(request)
    expect = (request.height, request.width, 3)
    if out.shape != expect or out.dtype != np.uint8:
        raise MalformedResponse(
            f"backend {backend.name!r} returned {out.shape} {out.dtype}, "
            f"expected {expect} uint8")
    return out


# ---------------------------------------------------------------------------
# Procedural backend (deterministic desk-scale stand-in)
# ---------------------------------------------------------------------------

def _u(key: int, counter: int) -> float:
    return unit_float(mix64(key, counter))


def _scene_pixels(prompt: str, seed: int, w: int, h: int) -> np.ndarray:
    """Seeded value-noise landscape: sky gradient over fractal terrain."""
    key = mix64(seed, stable_text_hash(prompt))
    nseed = lambda i: int(mix64(key, 100 + i)) & 0x7FFFFFFF

    horizon = 0.30 + 0.30 * _u(key, 1)
    elev = _kernels.fbm_grid(h, w, nseed(0), 5.0, 5, 0.5, 2.0)
    ridge = _kernels.fbm_grid(1, w, nseed(1), 3.0, 4, 0.5, 2.0)[0]
    clouds = _kernels.fbm_grid(h, w, nseed(2), 4.0, 4, 0.6, 2.0)

    yy = (np.arange(h, dtype=np.float64) + 0.5) / h
    horizon_y = horizon + (ridge - 0.5) * 0.12  # per column

    sky_top = np.array([0.25 + 0.3 * _u(key, 2),
                        0.45 + 0.3 * _u(key, 3),
                        0.70 + 0.25 * _u(key, 4)])
    sky_low = np.array([0.70 + 0.25 * _u(key, 5),
                        0.65 + 0.2 * _u(key, 6),
                        0.55 + 0.2 * _u(key, 7)])
    ground_a = np.array([0.15 + 0.25 * _u(key, 8),
                         0.35 + 0.3 * _u(key, 9),
                         0.10 + 0.2 * _u(key, 10)])
    ground_b = np.array([0.45 + 0.3 * _u(key, 11),
                         0.40 + 0.25 * _u(key, 12),
                         0.25 + 0.2 * _u(key, 13)])

    grad = np.clip(yy[:, None] / np.maximum(horizon_y[None, :], 1e-9), 0.0, 1.0)
    cloud_mod = 1.0 - 0.35 * clouds * clouds
    sky = (sky_top[None, None, :]
           + (sky_low - sky_top)[None, None, :] * grad[:, :, None])
    sky = sky * cloud_mod[:, :, None]

    depth = np.clip((yy[:, None] - horizon_y[None, :])
                    / np.maximum(1.0 - horizon_y[None, :], 1e-9), 0.0, 1.0)
    shade = 0.55 + 0.45 * elev
    ground = (ground_a[None, None, :]
              + (ground_b - ground_a)[None, None, :] * elev[:, :, None])
    ground = ground * (shade * (0.65 + 0.35 * depth))[:, :, None]

    below = (yy[:, None] >= horizon_y[None, :])[:, :, None]
    img = np.where(below, ground, sky)
    return np.clip(np.floor(img * 255.0 + 0.5), 0.0, 255.0).astype(np.uint8)


def _inpaint_pixels(prompt: str, seed: int, crop: np.ndarray,
                    strength: float) -> np.ndarray:
    """Prompt-keyed transform: hue rotation + overlay pattern + contrast,
    blended into the crop at `strength`."""
    t = stable_text_hash(prompt)
    hue_deg = t % 360
    pattern_kind = (t >> 9) % 3
    contrast = 0.75 + ((t >> 17) % 1000) / 2000.0
    pkey = mix64(seed, t)

    h, w = crop.shape[:2]
    f = crop.astype(np.float64)
    r, g, b = f[:, :, 0], f[:, :, 1], f[:, :, 2]

    # hue rotation about the gray axis (rows sum to 1, grays stay put)
    theta = np.deg2rad(float(hue_deg))
    ca, sa = float(np.cos(theta)), float(np.sin(theta))
    c1 = (1.0 - ca) / 3.0
    s1 = float(np.sqrt(1.0 / 3.0)) * sa
    m = np.array([
        [ca + c1, c1 - s1, c1 + s1],
        [c1 + s1, ca + c1, c1 - s1],
        [c1 - s1, c1 + s1, ca + c1],
    ])
    nr = r * m[0, 0] + g * m[0, 1] + b * m[0, 2]
    ng = r * m[1, 0] + g * m[1, 1] + b * m[1, 2]
    nb = r * m[2, 0] + g * m[2, 1] + b * m[2, 2]
    out = np.stack([nr, ng, nb], axis=2)

    out = (out - 127.5) * contrast + 127.5

    ys = np.arange(h, dtype=np.float64)[:, None]
    xs = np.arange(w, dtype=np.float64)[None, :]
    phase_x = _u(pkey, 1) * 64.0
    phase_y = _u(pkey, 2) * 64.0
    period = 12.0 + 28.0 * _u(pkey, 3)
    if pattern_kind == 0:  # grid
        gx = np.mod(xs + phase_x, period) < period * 0.18
        gy = np.mod(ys + phase_y, period) < period * 0.18
        pat = (gx | gy).astype(np.float64)
    elif pattern_kind == 1:  # strata
        pat = 0.5 + 0.5 * np.sin((ys + phase_y) * (2.0 * np.pi / period))
        pat = np.broadcast_to(pat, (h, w)).copy()
    else:  # plume
        cx = w * (0.25 + 0.5 * _u(pkey, 4))
        cy = h * (0.25 + 0.5 * _u(pkey, 5))
        d2 = (xs - cx) ** 2 + (ys - cy) ** 2
        rad = (0.2 + 0.3 * _u(pkey, 6)) * max(w, h)
        pat = 1.0 / (1.0 + d2 / (rad * rad))
    out = out * (1.0 - 0.45 * pat)[:, :, None]

    transformed = np.clip(np.floor(out + 0.5), 0.0, 255.0).astype(np.uint8)
    return _kernels.blend_u8_scalar(crop, transformed, strength)


class ProceduralBackend:
    """Fully deterministic generator for pipeline verification.

    Not a diffusion model and not trying to look like one: output is a
    pure function of (prompt, seed, crop pixels), which is exactly what
    replay and degradation tests need.
    """

    name = "procedural"
    deterministic = True
    expected_latency_ms = 100

    def generate(self, request: GenerationRequest) -> np.ndarray:
        if request.kind == "full_scene":
            return _scene_pixels(request.prompt, request.seed,
                                 request.width, request.height)
        return _inpaint_pixels(request.prompt, request.seed,
                               request.image_crop, request.strength)


# ---------------------------------------------------------------------------
# Network backend (HTTP+JSON protocol to a diffusion inference server)
# ---------------------------------------------------------------------------

def request_to_json(request: GenerationRequest) -> dict:
    return {
        "kind": request.kind,
        "prompt": request.prompt,
        "seed": request.seed,
        "strength": request.strength,
        "width": request.width,
        "height": request.height,
        "image_png_b64": (png_b64_encode(request.image_crop)
                          if request.image_crop is not None else None),
        "mask_png_b64": (png_b64_encode(request.mask_crop)
                         if request.mask_crop is not None else None),
    }


def request_from_json(payload: dict) -> GenerationRequest:
    return GenerationRequest(
        kind=payload["kind"],
        prompt=payload["prompt"],
        seed=payload["seed"],
        strength=payload["strength"],
        width=payload["width"],
        height=payload["height"],
        image_crop=(png_b64_decode(payload["image_png_b64"])
                    if payload.get("image_png_b64") else None),
        mask_crop=(png_b64_decode(payload["mask_png_b64"])
                   if payload.get("mask_png_b64") else None),
    )


class NetworkBackend:
    """Client for the `POST /v1/generate` protocol. Remote generation is
    treated as fallible and budgeted: timeouts and connection failures
    surface as skippable backend errors, never as engine crashes."""

    name = "network"
    deterministic = False

    def __init__(self, endpoint: str, timeout_ms: int = 15000):
        self.endpoint = endpoint.rstrip("/")
        self.timeout_ms = timeout_ms
        self.expected_latency_ms = timeout_ms

    def generate(self, request: GenerationRequest) -> np.ndarray:
        try:
            resp = requests.post(
                self.endpoint + "/v1/generate",
                json=request_to_json(request),
                timeout=self.timeout_ms / 1000.0,
            )
        except requests.Timeout as exc:
            raise BackendTimeout(
                f"no response within {self.timeout_ms} ms") from exc
        except requests.ConnectionError as exc:
            raise BackendUnavailable(str(exc)) from exc

        try:
            body = resp.json()
        except ValueError as exc:
            raise MalformedResponse("response body is not JSON") from exc
        if resp.status_code >= 400 or "error" in body:
            raise BackendUnavailable(
                str(body.get("error", f"HTTP {resp.status_code}")))
        if "image_png_b64" not in body:
            raise MalformedResponse("response lacks image_png_b64")
        try:
            return png_b64_decode(body["image_png_b64"])
        except Exception as exc:
            raise MalformedResponse(f"undecodable image payload: {exc}") from exc


def make_backend(kind: str, endpoint: str = "",
                 timeout_ms: int = 15000) -> GenerationBackend:
    if kind == "procedural":
        return ProceduralBackend()
    if kind == "network":
        if not endpoint:
            raise ValueError("network backend requires an endpoint")
        return NetworkBackend(endpoint, timeout_ms)
    raise ValueError(f"unknown backend kind {kind!r}")


# ---------------------------------------------------------------------------
# Compositing and cycle orchestration
# ---------------------------------------------------------------------------

def composite(original: np.ndarray, generated: np.ndarray,
              mask: InpaintMask, bbox: tuple[int, int, int, int]) -> np.ndarray:
    """Merge the generated crop back, strictly inside mask coverage.

    out = round(original*(1-c) + generated*c), half-up; every pixel with
    c == 0 is a bit-exact copy of the original.
    """
    x0, y0, x1, y1 = bbox
    bh, bw = y1 - y0, x1 - x0
    if generated.shape != (bh, bw, 3):
        raise DimensionMismatch(
            f"generated crop {generated.shape} does not match bbox {bbox}")
    mx0, my0, mx1, my1 = mask.bbox
    if not (x0 <= mx0 and y0 <= my0 and mx1 <= x1 and my1 <= y1):
        raise DimensionMismatch("mask coverage extends outside bbox")

    cov = np.zeros((bh, bw), dtype=np.float64)
    cov[my0 - y0:my1 - y0, mx0 - x0:mx1 - x0] = mask.coverage

    out = original.copy()
    region = np.ascontiguousarray(original[y0:y1, x0:x1])
    out[y0:y1, x0:x1] = _kernels.blend_u8(region,
                                          np.ascontiguousarray(generated), cov)
    return out


@dataclass(frozen=True)
class CycleResult:
    image: np.ndarray
    bbox: tuple[int, int, int, int]
    error_kind: str | None = None
    error_msg: str | None = None

    @property
    def ok(self) -> bool:
        return self.error_kind is None


def build_inpaint_request(canvas: np.ndarray, mask: InpaintMask, prompt: str,
                          seed: int, strength: float, pad_px: int,
                          min_side_px: int) -> tuple[GenerationRequest,
                                                     tuple[int, int, int, int]]:
    h, w = canvas.shape[:2]
    bbox = padded_bbox(mask, pad_px, min_side_px, w, h)
    x0, y0, x1, y1 = bbox
    req = GenerationRequest(
        kind="inpaint", prompt=prompt, seed=seed, strength=strength,
        width=x1 - x0, height=y1 - y0,
        image_crop=np.ascontiguousarray(canvas[y0:y1, x0:x1]),
        mask_crop=_mask_crop_u8(mask, bbox),
    )
    return req, bbox


def _mask_crop_u8(mask: InpaintMask, bbox: tuple[int, int, int, int]) -> np.ndarray:
    x0, y0, x1, y1 = bbox
    cov = np.zeros((y1 - y0, x1 - x0), dtype=np.float64)
    mx0, my0, mx1, my1 = mask.bbox
    cov[my0 - y0:my1 - y0, mx0 - x0:mx1 - x0] = mask.coverage
    return quantize_u8(cov)


def inpaint_cycle(canvas: np.ndarray, mask: InpaintMask, prompt: str,
                  backend: GenerationBackend, seed: int, strength: float = 0.85,
                  pad_px: int = 16, min_side_px: int = 160) -> CycleResult:
    """One recursive transformation step; backend failures skip the cycle
    and leave the canvas untouched."""
    req, bbox = build_inpaint_request(canvas, mask, prompt, seed, strength,
                                      pad_px, min_side_px)
    try:
        generated = generate(backend, req)
    except BackendError as exc:
        return CycleResult(image=canvas, bbox=bbox,
                           error_kind=type(exc).__name__, error_msg=str(exc))
    return CycleResult(image=composite(canvas, generated, mask, bbox),
                       bbox=bbox)


def regenerate_scene(backend: GenerationBackend, scene_prompt: str, seed: int,
                     width: int, height: int,
                     retry_limit: int = 3) -> np.ndarray | None:
    """Full-frame landscape; retries with incremented seeds, None when the
    backend never delivers (caller keeps the previous canvas)."""
    for attempt in range(retry_limit + 1):
        req = GenerationRequest(kind="full_scene", prompt=scene_prompt,
                                seed=seed + attempt, strength=1.0,
                                width=width, height=height)
        try:
            return generate(backend, req)
        except BackendError:
            continue
    return None
