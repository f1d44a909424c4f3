"""IDX image/label containers, Gaussian corruption, and train/val splits."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Malformed IDX byte stream."""


@dataclass
class ImageSet:
    """Stack of 8-bit grayscale images, (count, height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 3:
            raise ValueError(f"pixels must be (N, H, W), got {self.pixels.shape}")

    @property
    def count(self) -> int:
        return self.pixels.shape[0]

    @property
    def height(self) -> int:
        return self.pixels.shape[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[2]


@dataclass
class NoiseConfig:
    """Additive Gaussian corruption in normalized intensity units."""

    sigma: float = 0.3
    clip_lo: float = 0.0
    clip_hi: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not self.clip_lo < self.clip_hi:
            raise ValueError("clip_lo must be below clip_hi")


@dataclass
class SplitConfig:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


def load_idx_images(data: bytes) -> ImageSet:
    """Parse an IDX image stream: big-endian magic 0x803 + (N, rows, cols)."""
    if len(data) < 4:
        raise IdxFormatError("truncated image stream: header incomplete")
    magic = struct.unpack(">I", data[:4])[0]
    if magic == LABELS_MAGIC:
        raise IdxFormatError("not an image file (label magic 0x00000801)")
    if magic != IMAGES_MAGIC:
        raise IdxFormatError(f"bad image magic 0x{magic:08x}")
    if len(data) < 16:
        raise IdxFormatError("truncated image stream: header incomplete")
    n, rows, cols = struct.unpack(">III", data[4:16])
    expected = 16 + n * rows * cols
    if len(data) < expected:
        raise IdxFormatError(
            f"truncated image stream: need {expected} bytes, have {len(data)}"
        )
    if len(data) > expected:
        raise IdxFormatError(
            f"trailing garbage: {len(data) - expected} bytes past the payload"
        )
    pixels = np.frombuffer(data, dtype=np.uint8, offset=16).reshape(n, rows, cols)
    return ImageSet(pixels.copy())


def save_idx_images(images: ImageSet) -> bytes:
    header = struct.pack(">IIII", IMAGES_MAGIC, images.count,
                         images.height, images.width)
    return header + images.pixels.tobytes()


def load_idx_labels(data: bytes) -> np.ndarray:
    if len(data) < 4:
        raise IdxFormatError("truncated label stream: header incomplete")
    magic = struct.unpack(">I", data[:4])[0]
    if magic == IMAGES_MAGIC:
        raise IdxFormatError("not a label file (image magic 0x00000803)")
    if magic != LABELS_MAGIC:
        raise IdxFormatError(f"bad label magic 0x{magic:08x}")
    if len(data) < 8:
        raise IdxFormatError("truncated label stream: header incomplete")
    n = struct.unpack(">I", data[4:8])[0]
    expected = 8 + n
    if len(data) < expected:
        raise IdxFormatError(
            f"truncated label stream: need {expected} bytes, have {len(data)}"
        )
    if len(data) > expected:
        raise IdxFormatError(
            f"trailing garbage: {len(data) - expected} bytes past the payload"
        )
    return np.frombuffer(data, dtype=np.uint8, offset=8).copy()


def save_idx_labels(labels) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", LABELS_MAGIC, labels.size) + labels.tobytes()


def normalize(images: ImageSet) -> np.ndarray:
    """ImageSet -> (N, 1, H, W) float batch with intensities pixel / 255."""
    return images.pixels[:, None, :, :].astype(np.float64) / 255.0


def add_gaussian_noise(batch, cfg: NoiseConfig) -> np.ndarray:
    """clamp(x + eps, lo, hi) with eps ~ Normal(0, sigma^2), seeded.

    Identical (batch, cfg) always produce the identical corrupted batch.
    Pass infinite clip bounds to disable clamping.
    """
    x = np.asarray(batch, dtype=np.float64)
    if cfg.sigma == 0.0:
        return x.copy()
    rng = np.random.default_rng(cfg.seed)
    noisy = x + rng.normal(0.0, cfg.sigma, size=x.shape)
    return np.clip(noisy, cfg.clip_lo, cfg.clip_hi)


def split_indices(n: int, cfg: SplitConfig):
    """Deterministic shuffled partition of range(n) into (train, val)."""
    if n < 1:
        raise ValueError("cannot split an empty batch")
    order = np.random.default_rng(cfg.seed).permutation(n)
    # the tiny epsilon keeps floor() at the mathematical value when the
    # float product lands a hair under an integer (e.g. 10 * 0.7)
    n_train = math.floor(n * cfg.train_fraction + 1e-9)
    return order[:n_train], order[n_train:]


def split(batch, cfg: SplitConfig):
    """Shuffle and partition a batch; |train| = floor(N * train_fraction)."""
    batch = np.asarray(batch)
    train_idx, val_idx = split_indices(batch.shape[0], cfg)
    return batch[train_idx], batch[val_idx]
