"""Saturating fixed-point formats and quantization primitives.

Values are stored as integer "raws": value = raw / 2^frac_bits. Rounding
is half-to-even everywhere so repeated requantization carries no bias.
Multiply-accumulate chains keep the full 2x-fraction product in int64 and
requantize exactly once per output element; requantize_acc implements that
single rounding step for scalars and arrays alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ops import KernelBank


@dataclass(frozen=True)
class FixedPointFormat:
    total_bits: int = 16
    frac_bits: int = 8
    signed: bool = True

    def __post_init__(self):
        if not 0 <= self.frac_bits < self.total_bits <= 32:
            raise ValueError(
                f"need 0 <= frac_bits < total_bits <= 32, "
                f"got Q({self.total_bits},{self.frac_bits})"
            )

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @property
    def raw_min(self) -> int:
        return -(1 << (self.total_bits - 1)) if self.signed else 0

    @property
    def raw_max(self) -> int:
        if self.signed:
            return (1 << (self.total_bits - 1)) - 1
        return (1 << self.total_bits) - 1

    def __str__(self) -> str:
        sign = "" if self.signed else "u"
        return f"{sign}Q({self.total_bits},{self.frac_bits})"


def quantize(x, fmt: FixedPointFormat) -> np.ndarray:
    """Real -> raw integers: round-half-even of x * 2^frac, saturating."""
    x = np.asarray(x, dtype=np.float64)
    raw = np.rint(x * fmt.scale)
    return np.clip(raw, fmt.raw_min, fmt.raw_max).astype(np.int64)


def dequantize(raw, fmt: FixedPointFormat) -> np.ndarray:
    return np.asarray(raw, dtype=np.float64) / fmt.scale


def requantize_acc(acc, fmt: FixedPointFormat):
    """Drop frac_bits from an accumulator with round-half-even, saturating.

    acc carries 2 * frac_bits fractional bits (a sum of raw x raw
    products); the result is a raw in fmt. Works on Python ints and int64
    arrays; scalar in, scalar out.
    """
    f = fmt.frac_bits
    scalar = np.isscalar(acc)
    a = np.asarray(acc, dtype=np.int64)
    if f == 0:
        q = a
    else:
        step = np.int64(1) << f
        q, r = np.divmod(a, step)  # floor division, remainder in [0, step)
        half = np.int64(1) << (f - 1)
        q = q + ((r > half) | ((r == half) & (q & 1 == 1)))
    q = np.clip(q, fmt.raw_min, fmt.raw_max)
    return int(q) if scalar else q


def sigmoid_fixed(raw: int, fmt: FixedPointFormat) -> int:
    """Fixed-point sigmoid on one raw value.

    Deliberately scalar: both the streaming pipeline and the vectorized
    reference call this same function per element, so their outputs agree
    bit for bit without depending on how a vector math library rounds.
    """
    x = raw / fmt.scale
    if x >= 0:
        y = 1.0 / (1.0 + math.exp(-x))
    else:
        e = math.exp(x)
        y = e / (1.0 + e)
    raw_out = int(np.rint(y * fmt.scale))
    return min(max(raw_out, fmt.raw_min), fmt.raw_max)


@dataclass
class QuantBank:
    """A KernelBank quantized to integer raws under one format."""

    weights: np.ndarray
    bias: np.ndarray
    fmt: FixedPointFormat

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.int64)
        self.bias = np.asarray(self.bias, dtype=np.int64)
        if self.weights.ndim != 4 or self.bias.shape != (self.weights.shape[0],):
            raise ValueError("quantized bank shapes are inconsistent")

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def window(self) -> tuple[int, int]:
        return self.weights.shape[2], self.weights.shape[3]


def quantize_params(params, fmt: FixedPointFormat) -> list[QuantBank]:
    """Quantize every KernelBank; biases share the weight format."""
    return [QuantBank(quantize(b.weights, fmt), quantize(b.bias, fmt), fmt)
            for b in params]


def dequantize_params(qparams) -> list[KernelBank]:
    return [KernelBank(dequantize(q.weights, q.fmt), dequantize(q.bias, q.fmt))
            for q in qparams]


def check_headroom(fmt: FixedPointFormat, max_macs: int = 1 << 14):
    """Reject formats whose MAC chains could overflow an int64 accumulator.

    With total_bits <= 24 a product fits in 2*24-2 bits and summing 2^14 of
    them stays under 2^63; wider formats would need a bigger accumulator.
    """
    if fmt.total_bits > 24:
        raise ValueError(
            f"{fmt} is too wide for the int64 accumulator "
            f"(total_bits must be <= 24)"
        )
    return max_macs
