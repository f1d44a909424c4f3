"""Layer stack description for the 13-layer encode/decode network.

The stack is seven convolutions interleaved with three max-pool stages on
the way down and three up-sample stages on the way back:

    conv pool conv pool conv pool conv up conv up conv up conv

Images enter at ``input_hw`` (default 28) and are zero-padded onto a square
``canvas_hw`` canvas (default 32) divisible by 8, so the three 2x pool and
up-sample stages land exactly back on the canvas size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ops
from .ops import KernelBank

CONVOLUTION = "convolution"
MAX_POOL = "max_pool"
UP_SAMPLE = "up_sample"

KIND_ORDER = (
    CONVOLUTION, MAX_POOL,
    CONVOLUTION, MAX_POOL,
    CONVOLUTION, MAX_POOL,
    CONVOLUTION, UP_SAMPLE,
    CONVOLUTION, UP_SAMPLE,
    CONVOLUTION, UP_SAMPLE,
    CONVOLUTION,
)

DEFAULT_PROFILE = (16, 8, 8, 8, 8, 16, 1)


@dataclass
class LayerSpec:
    """One layer: a convolution, a max-pool, or a nearest up-sample.

    For pools, window/stride describe the pooling window; for up-sample
    layers, window is the replication factor and stride is unused (kept at
    the factor for symmetry). Channels pass through non-conv layers.
    """

    kind: str
    window: int
    stride: int
    in_channels: int
    out_channels: int
    padding: str = "same"
    activation: str = "none"

    def __post_init__(self):
        if self.kind not in (CONVOLUTION, MAX_POOL, UP_SAMPLE):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.window < 1 or self.stride < 1:
            raise ValueError("window and stride must be at least 1")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be at least 1")
        if self.kind != CONVOLUTION:
            if self.in_channels != self.out_channels:
                raise ValueError(f"{self.kind} layers pass channels through")
            if self.activation != "none":
                raise ValueError(f"{self.kind} layers take no activation")
        elif self.activation not in ("relu", "sigmoid", "none"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.padding not in ("same", "valid"):
            raise ValueError(f"unknown padding {self.padding!r}")


def layer_output_shape(layer: LayerSpec, shape: tuple[int, int, int]):
    """Shape transform of one layer applied to (C, H, W)."""
    c, h, w = shape
    if c != layer.in_channels:
        raise ValueError(
            f"{layer.kind} expects {layer.in_channels} channels, got {c}"
        )
    if layer.kind == CONVOLUTION:
        oh, ow = ops.conv_output_hw(h, w, layer.window, layer.window,
                                    layer.stride, layer.padding)
        return layer.out_channels, oh, ow
    if layer.kind == MAX_POOL:
        oh, ow = ops.pool_output_hw(h, w, layer.window, layer.stride)
        return c, oh, ow
    return c, h * layer.window, w * layer.window


@dataclass
class NetworkSpec:
    """Ordered layer list plus the input/canvas geometry.

    invertible records whether the shape chain returns to the canvas size,
    which the training path requires; the strict forward-only variant sets
    it False.
    """

    layers: tuple[LayerSpec, ...]
    input_hw: int = 28
    canvas_hw: int = 32
    invertible: bool = True

    def __post_init__(self):
        self.layers = tuple(self.layers)
        if len(self.layers) != len(KIND_ORDER):
            raise ValueError(f"expected {len(KIND_ORDER)} layers, got {len(self.layers)}")
        for i, (layer, kind) in enumerate(zip(self.layers, KIND_ORDER)):
            if layer.kind != kind:
                raise ValueError(f"layer {i + 1} must be {kind}, got {layer.kind}")
        if not (1 <= self.input_hw <= self.canvas_hw):
            raise ValueError("canvas must be at least as large as the input")
        if self.layers[0].in_channels != 1:
            raise ValueError("first layer must accept 1 channel")
        shape = self.internal_shape
        for i, layer in enumerate(self.layers):
            if layer.in_channels != shape[0]:
                raise ValueError(
                    f"layer {i + 1} expects {layer.in_channels} channels "
                    f"but receives {shape[0]}"
                )
            shape = layer_output_shape(layer, shape)
        if self.invertible and shape != self.internal_shape:
            raise ValueError(
                f"shape chain ends at {shape}, not {self.internal_shape}; "
                "the stack does not reconstruct the canvas"
            )

    @property
    def input_shape(self) -> tuple[int, int, int]:
        return 1, self.input_hw, self.input_hw

    @property
    def internal_shape(self) -> tuple[int, int, int]:
        return 1, self.canvas_hw, self.canvas_hw

    def canvas_pads(self) -> tuple[int, int, int, int]:
        """(top, bottom, left, right) zero padding from input to canvas."""
        diff = self.canvas_hw - self.input_hw
        lo = diff // 2
        return lo, diff - lo, lo, diff - lo

    def shape_chain(self) -> list[tuple[int, int, int]]:
        """Shapes on the canvas before each layer plus the final shape."""
        chain = [self.internal_shape]
        for layer in self.layers:
            chain.append(layer_output_shape(layer, chain[-1]))
        return chain

    def conv_layer_indices(self) -> list[int]:
        return [i for i, l in enumerate(self.layers) if l.kind == CONVOLUTION]


def build_network(channel_profile=DEFAULT_PROFILE, input_hw: int = 28,
                  canvas_hw: int = 32, strict_pool: bool = False) -> NetworkSpec:
    """Assemble the 13-layer stack for a given convolution channel profile.

    channel_profile lists the out-channel count of each of the 7
    convolutions; the last must be 1 so the output is a single image.
    strict_pool swaps in the literal window-4 stride-1 pooling variant
    (with valid-padded convolutions and factor-4 up-sampling), which only
    grows tensors and is usable for forward experiments, not training.
    """
    profile = tuple(int(c) for c in channel_profile)
    if len(profile) != 7:
        raise ValueError(f"channel profile must list 7 counts, got {len(profile)}")
    if profile[-1] != 1:
        raise ValueError("last profile entry must be 1 (single output image)")
    if min(profile) < 1:
        raise ValueError("channel counts must be at least 1")
    if not strict_pool and canvas_hw % 8 != 0:
        raise ValueError("canvas size must be divisible by 8 for 2x pooling")

    conv_pad = "valid" if strict_pool else "same"
    pool_window, pool_stride = (4, 1) if strict_pool else (2, 2)
    up_factor = 4 if strict_pool else 2

    layers = []
    ch = 1
    conv_i = 0
    for kind in KIND_ORDER:
        if kind == CONVOLUTION:
            out = profile[conv_i]
            act = "sigmoid" if conv_i == 6 else "relu"
            layers.append(LayerSpec(CONVOLUTION, 4, 1, ch, out, conv_pad, act))
            ch = out
            conv_i += 1
        elif kind == MAX_POOL:
            layers.append(LayerSpec(MAX_POOL, pool_window, pool_stride, ch, ch))
        else:
            layers.append(LayerSpec(UP_SAMPLE, up_factor, up_factor, ch, ch))
    return NetworkSpec(tuple(layers), input_hw, canvas_hw,
                       invertible=not strict_pool)


def init_parameters(spec: NetworkSpec, seed: int) -> list[KernelBank]:
    """Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.

    Deterministic per seed; one KernelBank per convolution layer in order.
    """
    rng = np.random.default_rng(seed)
    params = []
    for i in spec.conv_layer_indices():
        layer = spec.layers[i]
        k = layer.window
        fan_in = layer.in_channels * k * k
        fan_out = layer.out_channels * k * k
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights = rng.uniform(-limit, limit,
                              size=(layer.out_channels, layer.in_channels, k, k))
        params.append(KernelBank(weights, np.zeros(layer.out_channels)))
    return params
