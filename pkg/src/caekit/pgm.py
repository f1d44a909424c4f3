"""Binary PGM (P5) image encoding for denoised outputs."""

from __future__ import annotations

import numpy as np


def encode_pgm(image) -> bytes:
    """[0,1] intensities -> P5 bytes; pixel = round(x * 255), half-to-even."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 3:
        if img.shape[0] != 1:
            raise ValueError("PGM holds a single channel")
        img = img[0]
    if img.ndim != 2:
        raise ValueError(f"expected an image, got shape {img.shape}")
    h, w = img.shape
    pixels = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    return f"P5\n{w} {h}\n255\n".encode() + pixels.tobytes()


def decode_pgm(data: bytes) -> np.ndarray:
    """Parse the exact P5 form this package writes; returns (1, H, W)."""
    parts = data.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P5" or parts[2] != b"255":
        raise ValueError("not a P5 stream with maxval 255")
    try:
        w, h = (int(t) for t in parts[1].split())
    except ValueError as exc:
        raise ValueError(f"bad PGM dimensions line {parts[1]!r}") from exc
    if len(parts[3]) != w * h:
        raise ValueError(f"payload is {len(parts[3])} bytes, expected {w * h}")
    pixels = np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)
    return pixels[None].astype(np.float64) / 255.0
