"""Image plumbing: RGB uint8 arrays <-> PNG bytes, content hashing."""

from __future__ import annotations

import base64
import hashlib
import io

import numpy as np
from PIL import Image


def png_encode(pixels: np.ndarray) -> bytes:
    """RGB (H, W, 3) or single-channel (H, W) uint8 array to PNG bytes."""
    mode = "RGB" if pixels.ndim == 3 else "L"
    buf = io.BytesIO()
    Image.fromarray(pixels, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def png_decode(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data))
    if img.mode == "L":
        return np.asarray(img, dtype=np.uint8)
    return np.asarray(img.convert("RGB"), dtype=np.uint8)


def png_b64_encode(pixels: np.ndarray) -> str:
    return base64.b64encode(png_encode(pixels)).decode("ascii")


def png_b64_decode(data: str) -> np.ndarray:
    return png_decode(base64.b64decode(data))


def image_hash(pixels: np.ndarray) -> str:
    """Content hash of raw pixels, independent of any encoder."""
    h = hashlib.sha256()
    h.update(str(pixels.shape).encode("ascii"))
    h.update(np.ascontiguousarray(pixels).tobytes())
    return h.hexdigest()
