"""Deterministic stroke-digit image generator.

Produces 28x28 grayscale digits built from seven-segment style strokes
with jittered position, thickness and brightness, then lightly blurred so
edges carry intermediate gray levels. Useful wherever a digit corpus is
needed and no image files are on hand.
"""

from __future__ import annotations

import numpy as np

from .dataset import ImageSet

# segment endpoints (r0, c0, r1, c1) on the 28x28 canvas
_SEGS = {
    "top": (5, 9, 5, 18),
    "tl": (5, 9, 13, 9),
    "tr": (5, 18, 13, 18),
    "mid": (13, 9, 13, 18),
    "bl": (13, 9, 21, 9),
    "br": (13, 18, 21, 18),
    "bot": (21, 9, 21, 18),
}

_DIGIT_SEGS = {
    0: ("top", "tl", "tr", "bl", "br", "bot"),
    1: ("tr", "br"),
    2: ("top", "tr", "mid", "bl", "bot"),
    3: ("top", "tr", "mid", "br", "bot"),
    4: ("tl", "tr", "mid", "br"),
    5: ("top", "tl", "mid", "br", "bot"),
    6: ("top", "tl", "mid", "bl", "br", "bot"),
    7: ("top", "tr", "br"),
    8: ("top", "tl", "tr", "mid", "bl", "br", "bot"),
    9: ("top", "tl", "tr", "mid", "br", "bot"),
}


def _draw_segment(canvas, seg, dr, dc, thickness):
    r0, c0, r1, c1 = seg
    r0, r1 = r0 + dr, r1 + dr
    c0, c1 = c0 + dc, c1 + dc
    steps = max(abs(r1 - r0), abs(c1 - c0)) + 1
    rows = np.linspace(r0, r1, steps).round().astype(int)
    cols = np.linspace(c0, c1, steps).round().astype(int)
    for t_r in range(thickness):
        for t_c in range(thickness):
            rr = np.clip(rows + t_r, 0, canvas.shape[0] - 1)
            cc = np.clip(cols + t_c, 0, canvas.shape[1] - 1)
            canvas[rr, cc] = 1.0


def _box_blur(img):
    padded = np.pad(img, 1)
    acc = np.zeros_like(img)
    for dr in range(3):
        for dc in range(3):
            acc += padded[dr:dr + img.shape[0], dc:dc + img.shape[1]]
    return acc / 9.0


def make_digit_images(count: int, seed: int = 0, hw: int = 28):
    """Render `count` digits; returns (ImageSet, labels).

    Labels cycle 0..9 before shuffling so every digit appears. The whole
    corpus is a pure function of (count, seed, hw).
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if not 8 <= hw <= 28:
        raise ValueError("hw must lie in [8, 28]; glyphs are drawn on 28x28")
    rng = np.random.default_rng(seed)
    labels = np.tile(np.arange(10, dtype=np.uint8), count // 10 + 1)[:count]
    rng.shuffle(labels)

    stack = np.zeros((count, hw, hw), dtype=np.uint8)
    for i, digit in enumerate(labels):
        canvas = np.zeros((28, 28))
        dr = int(rng.integers(-3, 4))
        dc = int(rng.integers(-4, 5))
        thickness = int(rng.integers(1, 3))
        for name in _DIGIT_SEGS[int(digit)]:
            _draw_segment(canvas, _SEGS[name], dr, dc, thickness)
        canvas = _box_blur(canvas)
        peak = float(rng.uniform(0.7, 1.0))
        canvas = np.clip(canvas * peak / max(canvas.max(), 1e-9), 0.0, 1.0)
        if hw != 28:
            lo = (28 - hw) // 2
            canvas = canvas[lo:lo + hw, lo:lo + hw]
        stack[i] = np.round(canvas * 255).astype(np.uint8)
    return ImageSet(stack), labels
