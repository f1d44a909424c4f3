"""Vectorized fixed-point forward pass, the oracle for the streaming path.

Computes whole layers at a time with integer numpy arithmetic: padded
im2col, an int64 matrix product holding every multiply-accumulate at
doubled fraction width, one requantization per output element, then the
activation. The streaming pipeline computes the very same quantities one
element at a time through FIFOs and engines; the two routes share only the
scalar rounding and sigmoid primitives, so agreement is a real check of
the streaming machinery.
"""

from __future__ import annotations

import numpy as np

from .. import ops
from ..fixedpoint import (FixedPointFormat, QuantBank, check_headroom,
                          quantize, requantize_acc, sigmoid_fixed)
from ..network import CONVOLUTION, MAX_POOL, NetworkSpec


def conv_fixed(x_raw: np.ndarray, bank: QuantBank, stride: int, padding: str,
               activation: str, fmt: FixedPointFormat) -> np.ndarray:
    """One quantized convolution layer on (C, H, W) raws."""
    c, h, w = x_raw.shape
    k_h, k_w = bank.window
    out_h, out_w, (pt, pb, pl, pr) = ops._conv_geometry(
        h, w, k_h, k_w, stride, padding
    )
    xp = np.pad(x_raw, ((0, 0), (pt, pb), (pl, pr)))
    cols = ops._im2col(xp[None], k_h, k_w, stride, out_h, out_w)
    w_col = bank.weights.reshape(bank.out_channels, -1)
    acc = cols @ w_col.T + (bank.bias.astype(np.int64) << fmt.frac_bits)
    raw = requantize_acc(acc, fmt)
    raw = raw.reshape(out_h, out_w, bank.out_channels).transpose(2, 0, 1)
    if activation == "relu":
        return np.maximum(raw, 0)
    if activation == "sigmoid":
        flat = raw.ravel()
        out = np.fromiter((sigmoid_fixed(int(v), fmt) for v in flat),
                          dtype=np.int64, count=flat.size)
        return out.reshape(raw.shape)
    return raw


def pool_fixed(x_raw: np.ndarray, window: int, stride: int) -> np.ndarray:
    out_h, out_w = ops.pool_output_hw(x_raw.shape[1], x_raw.shape[2],
                                      window, stride)
    win = ops._pool_windows(x_raw[None], window, stride, out_h, out_w)
    return win[0].max(axis=-1)


def upsample_fixed(x_raw: np.ndarray, factor: int) -> np.ndarray:
    return np.repeat(np.repeat(x_raw, factor, axis=-2), factor, axis=-1)


def quantized_forward(spec: NetworkSpec, qparams, image,
                      fmt: FixedPointFormat) -> np.ndarray:
    """Full fixed-point forward; returns the cropped raw output tensor."""
    check_headroom(fmt)
    x = ops.check_tensor(image)
    if x.shape != spec.input_shape:
        raise ValueError(f"expected input shape {spec.input_shape}, got {x.shape}")
    if len(qparams) != len(spec.conv_layer_indices()):
        raise ValueError("parameter count does not match the network")
    for q in qparams:
        if q.fmt != fmt:
            raise ValueError(f"parameters quantized under {q.fmt}, expected {fmt}")

    pt, pb, pl, pr = spec.canvas_pads()
    raw = quantize(x, fmt)
    h = np.pad(raw, ((0, 0), (pt, pb), (pl, pr)))
    conv_i = 0
    for layer in spec.layers:
        if layer.kind == CONVOLUTION:
            h = conv_fixed(h, qparams[conv_i], layer.stride, layer.padding,
                           layer.activation, fmt)
            conv_i += 1
        elif layer.kind == MAX_POOL:
            h = pool_fixed(h, layer.window, layer.stride)
        else:
            h = upsample_fixed(h, layer.window)
    return h[:, pt:pt + spec.input_hw, pl:pl + spec.input_hw].copy()
