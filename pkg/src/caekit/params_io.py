"""Weight-file serialization.

Layout, all little-endian: magic b"CAEW", u8 version (1), u32 layer count,
a shape table of five u32 per layer (out_channels, in_channels, k_h, k_w,
bias length), then for each layer in order its weights followed by its
bias, as 32-bit IEEE-754 floats in array scan order.
"""

from __future__ import annotations

import struct

import numpy as np

from .ops import KernelBank

MAGIC = b"CAEW"
VERSION = 1


class WeightFormatError(ValueError):
    """Malformed weight byte stream."""


def save_params(params) -> bytes:
    chunks = [MAGIC, struct.pack("<BI", VERSION, len(params))]
    for bank in params:
        o, i, kh, kw = bank.weights.shape
        chunks.append(struct.pack("<5I", o, i, kh, kw, bank.bias.size))
    for bank in params:
        chunks.append(bank.weights.astype("<f4").tobytes())
        chunks.append(bank.bias.astype("<f4").tobytes())
    return b"".join(chunks)


def load_params(data: bytes) -> list[KernelBank]:
    if len(data) < 9:
        raise WeightFormatError("truncated: header incomplete")
    if data[:4] != MAGIC:
        raise WeightFormatError(f"bad magic {data[:4]!r}")
    version, count = struct.unpack("<BI", data[4:9])
    if version != VERSION:
        raise WeightFormatError(f"unsupported version {version}")
    offset = 9
    shapes = []
    for _ in range(count):
        if offset + 20 > len(data):
            raise WeightFormatError("truncated: shape table incomplete")
        o, i, kh, kw, blen = struct.unpack("<5I", data[offset:offset + 20])
        if blen != o:
            raise WeightFormatError(
                f"bias length {blen} does not match {o} output channels"
            )
        shapes.append((o, i, kh, kw))
        offset += 20

    payload = sum(o * i * kh * kw + o for o, i, kh, kw in shapes) * 4
    if len(data) - offset != payload:
        raise WeightFormatError(
            f"shape table implies {payload} payload bytes, stream has "
            f"{len(data) - offset}"
        )

    params = []
    for o, i, kh, kw in shapes:
        n_w = o * i * kh * kw
        weights = np.frombuffer(data, dtype="<f4", count=n_w, offset=offset)
        offset += n_w * 4
        bias = np.frombuffer(data, dtype="<f4", count=o, offset=offset)
        offset += o * 4
        params.append(KernelBank(weights.reshape(o, i, kh, kw), bias))
    return params
