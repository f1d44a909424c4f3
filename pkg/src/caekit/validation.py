"""Input shaping helpers shared by the estimator and the command line."""

from __future__ import annotations

import math

import numpy as np


def as_image_batch(X, input_hw: int | None = None):
    """Coerce X to a (N, 1, H, W) float batch.

    Accepts (N, H*W) flat rows, (N, H, W) stacks, or (N, 1, H, W) batches.
    Returns (batch, original_ndim) so callers can hand results back in the
    shape they received.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        side = input_hw or int(round(math.sqrt(X.shape[1])))
        if side * side != X.shape[1]:
            raise ValueError(
                f"cannot fold {X.shape[1]} features into a square image"
            )
        batch = X.reshape(X.shape[0], 1, side, side)
    elif X.ndim == 3:
        batch = X[:, None, :, :]
    elif X.ndim == 4:
        if X.shape[1] != 1:
            raise ValueError(f"expected single-channel images, got {X.shape}")
        batch = X
    else:
        raise ValueError(f"cannot interpret shape {X.shape} as an image batch")
    if batch.shape[0] == 0:
        raise ValueError("empty batch")
    if batch.shape[2] != batch.shape[3]:
        raise ValueError(f"images must be square, got {batch.shape[2:]}")
    if input_hw is not None and batch.shape[2] != input_hw:
        raise ValueError(
            f"expected {input_hw}x{input_hw} images, got {batch.shape[2:]}"
        )
    if not np.all(np.isfinite(batch)):
        raise ValueError("batch contains non-finite values")
    return batch, X.ndim


def restore_shape(batch, ndim: int):
    """Undo as_image_batch's reshaping for caller-facing results."""
    if ndim == 2:
        return batch.reshape(batch.shape[0], -1)
    if ndim == 3:
        return batch[:, 0]
    return batch
