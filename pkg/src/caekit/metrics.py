"""Reconstruction quality metrics on [0, 1] intensity images."""

from __future__ import annotations

import math

import numpy as np

PSNR_CAP_DB = 99.0


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB against peak intensity 1.0.

    Capped at 99 dB so identical images report a finite number.
    """
    m = mse(a, b)
    if m < 1e-10:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(1.0 / m))


def pixel_accuracy(a, b, threshold: float = 0.5) -> float:
    """Fraction of pixels that land on the same side of the threshold."""
    a, b = _pair(a, b)
    return float(np.mean((a > threshold) == (b > threshold)))
