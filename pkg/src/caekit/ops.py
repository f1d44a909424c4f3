"""Forward and backward numeric primitives for the autoencoder stack.

All tensors are numpy arrays in (channels, height, width) layout; batched
variants take (batch, channels, height, width). Every function is pure: no
argument is mutated and identical inputs give bit-identical outputs.

Convolution orientation is the sliding dot product without kernel flip
(cross-correlation), the convention of modern CNN stacks. With learned
kernels the flipped/unflipped distinction is unobservable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Padding = str  # "same" or "valid"


@dataclass
class KernelBank:
    """Weights and bias of one convolution layer.

    weights: (out_channels, in_channels, k_h, k_w)
    bias:    (out_channels,)
    """

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 4:
            raise ValueError(f"weights must be rank 4, got {self.weights.ndim}")
        if self.weights.shape[2] < 1 or self.weights.shape[3] < 1:
            raise ValueError("kernel window must be at least 1x1")
        if self.bias.shape != (self.weights.shape[0],):
            raise ValueError(
                f"bias length {self.bias.shape} does not match "
                f"{self.weights.shape[0]} output channels"
            )

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def window(self) -> tuple[int, int]:
        return self.weights.shape[2], self.weights.shape[3]


def check_tensor(x, name: str = "input") -> np.ndarray:
    """Validate a (C, H, W) tensor and return it as float64."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None, :, :]
    if x.ndim != 3:
        raise ValueError(f"{name} must be rank 3 (C, H, W), got rank {x.ndim}")
    if min(x.shape) < 1:
        raise ValueError(f"{name} has an empty dimension: {x.shape}")
    return x


def same_pads(size: int, window: int, stride: int) -> tuple[int, int]:
    """Begin/end zero padding for 'same' output size ceil(size / stride).

    Total padding is split with the smaller half first (top/left), so an
    even window like 4 pads 1 before and 2 after.
    """
    out = -(-size // stride)
    total = max((out - 1) * stride + window - size, 0)
    return total // 2, total - total // 2


def conv_output_hw(h: int, w: int, k_h: int, k_w: int, stride: int,
                   padding: Padding) -> tuple[int, int]:
    if padding == "same":
        return -(-h // stride), -(-w // stride)
    if padding == "valid":
        if k_h > h or k_w > w:
            raise ValueError(
                f"kernel {k_h}x{k_w} larger than input {h}x{w} under valid padding"
            )
        return (h - k_h) // stride + 1, (w - k_w) // stride + 1
    raise ValueError(f"padding must be 'same' or 'valid', got {padding!r}")


def _conv_geometry(h, w, k_h, k_w, stride, padding):
    out_h, out_w = conv_output_hw(h, w, k_h, k_w, stride, padding)
    if padding == "same":
        pt, pb = same_pads(h, k_h, stride)
        pl, pr = same_pads(w, k_w, stride)
    else:
        pt = pb = pl = pr = 0
    return out_h, out_w, (pt, pb, pl, pr)


def _im2col(x, k_h, k_w, stride, out_h, out_w):
    """(N, C, H, W) -> (N * out_h * out_w, C * k_h * k_w) window matrix."""
    n, c, h, w = x.shape
    s0, s1, s2, s3 = x.strides
    windows = np.lib.stride_tricks.as_strided(
        x,
        shape=(n, c, out_h, out_w, k_h, k_w),
        strides=(s0, s1, s2 * stride, s3 * stride, s2, s3),
        writeable=False,
    )
    # rows ordered batch-major, then spatial; columns channel-major
    return windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, c * k_h * k_w)


def conv2d_batch(x: np.ndarray, bank: KernelBank, stride: int = 1,
                 padding: Padding = "valid") -> np.ndarray:
    """Batched convolution, (N, C_in, H, W) -> (N, C_out, out_h, out_w)."""
    x = np.asarray(x, dtype=np.float64)
    n, c, h, w = x.shape
    if c != bank.in_channels:
        raise ValueError(
            f"input has {c} channels, kernel bank expects {bank.in_channels}"
        )
    if stride < 1:
        raise ValueError("stride must be at least 1")
    k_h, k_w = bank.window
    out_h, out_w, (pt, pb, pl, pr) = _conv_geometry(h, w, k_h, k_w, stride, padding)
    if pt or pb or pl or pr:
        x = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    cols = _im2col(x, k_h, k_w, stride, out_h, out_w)
    w_col = bank.weights.reshape(bank.out_channels, -1)
    y = cols @ w_col.T + bank.bias
    return y.reshape(n, out_h, out_w, bank.out_channels).transpose(0, 3, 1, 2)


def conv2d(input: np.ndarray, kernels: KernelBank, stride: int = 1,
           padding: Padding = "valid") -> np.ndarray:
    """Convolve a (C_in, H, W) tensor with a kernel bank.

    Each output element is the window dot product plus the channel bias.
    Output spatial size is ceil(H / stride) for 'same' padding and
    floor((H - k_h) / stride) + 1 for 'valid'.
    """
    x = check_tensor(input)
    return conv2d_batch(x[None], kernels, stride, padding)[0]


def conv2d_backward_batch(x, bank, stride, padding, grad_output):
    """Gradients of conv2d_batch w.r.t. input, weights and bias."""
    x = np.asarray(x, dtype=np.float64)
    gy = np.asarray(grad_output, dtype=np.float64)
    n, c, h, w = x.shape
    k_h, k_w = bank.window
    out_h, out_w, (pt, pb, pl, pr) = _conv_geometry(h, w, k_h, k_w, stride, padding)
    if gy.shape != (n, bank.out_channels, out_h, out_w):
        raise ValueError(
            f"grad_output shape {gy.shape} does not match conv output "
            f"{(n, bank.out_channels, out_h, out_w)}"
        )
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr))) if (pt or pb or pl or pr) else x

    cols = _im2col(xp, k_h, k_w, stride, out_h, out_w)
    gy_col = gy.transpose(0, 2, 3, 1).reshape(-1, bank.out_channels)

    grad_w = (gy_col.T @ cols).reshape(bank.weights.shape)
    grad_b = gy_col.sum(axis=0)

    # scatter dX through the kernel window offsets (col2im)
    gx_pad = np.zeros_like(xp)
    w_flat = bank.weights.reshape(bank.out_channels, c, k_h, k_w)
    gy_nhwc = gy.transpose(0, 2, 3, 1)  # (N, out_h, out_w, C_out)
    for a in range(k_h):
        for b in range(k_w):
            contrib = gy_nhwc @ w_flat[:, :, a, b]  # (N, out_h, out_w, C_in)
            gx_pad[:, :, a:a + out_h * stride:stride, b:b + out_w * stride:stride] += (
                contrib.transpose(0, 3, 1, 2)
            )
    gx = gx_pad[:, :, pt:pt + h, pl:pl + w]
    return gx, grad_w, grad_b


def conv2d_backward(input, kernels: KernelBank, stride: int, padding: Padding,
                    grad_output):
    """Analytic gradients of the single-tensor conv2d contract."""
    x = check_tensor(input)
    gy = check_tensor(grad_output, "grad_output")
    gx, gw, gb = conv2d_backward_batch(x[None], kernels, stride, padding, gy[None])
    return gx[0], gw, gb


def relu(input: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x); keeps negative values out of the next layer."""
    return np.maximum(np.asarray(input, dtype=np.float64), 0.0)


def relu_backward(input, grad_output) -> np.ndarray:
    """Gate the gradient by the sign of the forward input."""
    x = np.asarray(input, dtype=np.float64)
    gy = np.asarray(grad_output, dtype=np.float64)
    if x.shape != gy.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {gy.shape}")
    return gy * (x > 0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward_from_output(output, grad_output) -> np.ndarray:
    return np.asarray(grad_output) * output * (1.0 - output)


def pool_output_hw(h: int, w: int, window: int, stride: int) -> tuple[int, int]:
    if window > h or window > w:
        raise ValueError(f"pool window {window} exceeds input {h}x{w}")
    return (h - window) // stride + 1, (w - window) // stride + 1


def _pool_windows(x, window, stride, out_h, out_w):
    n, c, h, w = x.shape
    s0, s1, s2, s3 = x.strides
    win = np.lib.stride_tricks.as_strided(
        x,
        shape=(n, c, out_h, out_w, window, window),
        strides=(s0, s1, s2 * stride, s3 * stride, s2, s3),
        writeable=False,
    )
    return win.reshape(n, c, out_h, out_w, window * window)


def maxpool2d_batch(x, window: int, stride: int):
    """Batched max pooling; returns (output, argmax offsets (..., 2))."""
    x = np.asarray(x, dtype=np.float64)
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be at least 1")
    n, c, h, w = x.shape
    out_h, out_w = pool_output_hw(h, w, window, stride)
    win = _pool_windows(x, window, stride, out_h, out_w)
    flat = win.argmax(axis=-1)  # first maximum in row-major scan wins ties
    out = np.take_along_axis(win, flat[..., None], axis=-1)[..., 0]
    argmax = np.stack([flat // window, flat % window], axis=-1)
    return out, argmax


def maxpool2d(input: np.ndarray, window: int, stride: int):
    """Max over each window; ties go to the first element in row-major order.

    Returns the pooled tensor and the (row, col) window offsets of each
    winner, needed by the backward pass.
    """
    x = check_tensor(input)
    out, argmax = maxpool2d_batch(x[None], window, stride)
    return out[0], argmax[0]


def maxpool2d_backward_batch(argmax, grad_output, input_shape, window, stride):
    gy = np.asarray(grad_output, dtype=np.float64)
    n, c, out_h, out_w = gy.shape
    gx = np.zeros((n, c) + tuple(input_shape[-2:]), dtype=np.float64)
    h, w = gx.shape[2], gx.shape[3]
    oi, oj = np.meshgrid(np.arange(out_h), np.arange(out_w), indexing="ij")
    rows = oi[None, None] * stride + argmax[..., 0]
    cols = oj[None, None] * stride + argmax[..., 1]
    flat = (np.arange(n)[:, None, None, None] * c * h * w
            + np.arange(c)[None, :, None, None] * h * w
            + rows * w + cols)
    np.add.at(gx.reshape(-1), flat.ravel(), gy.ravel())
    return gx


def maxpool2d_backward(argmax, grad_output, input_shape, window: int, stride: int):
    """Route each output gradient to its argmax position; other cells get 0."""
    gy = check_tensor(grad_output, "grad_output")
    if argmax.shape[:3] != gy.shape or argmax.shape[3] != 2:
        raise ValueError(f"argmax shape {argmax.shape} does not match grad {gy.shape}")
    return maxpool2d_backward_batch(argmax[None], gy[None], input_shape, window, stride)[0]


def upsample_nearest_batch(x, factor: int):
    x = np.asarray(x, dtype=np.float64)
    if factor < 1:
        raise ValueError("factor must be at least 1")
    return np.repeat(np.repeat(x, factor, axis=-2), factor, axis=-1)


def upsample_nearest(input: np.ndarray, factor: int) -> np.ndarray:
    """Replicate each pixel into a factor x factor block."""
    x = check_tensor(input)
    return upsample_nearest_batch(x[None], factor)[0]


def upsample_backward_batch(factor, grad_output):
    gy = np.asarray(grad_output, dtype=np.float64)
    n, c, h, w = gy.shape
    if h % factor or w % factor:
        raise ValueError(f"gradient dims {h}x{w} not divisible by factor {factor}")
    return gy.reshape(n, c, h // factor, factor, w // factor, factor).sum(axis=(3, 5))


def upsample_backward(factor: int, grad_output) -> np.ndarray:
    """Adjoint of nearest up-sampling: sum each factor x factor block."""
    gy = check_tensor(grad_output, "grad_output")
    return upsample_backward_batch(factor, gy[None])[0]


def pad(input: np.ndarray, top: int, bottom: int, left: int, right: int,
        value: float = 0.0) -> np.ndarray:
    """Grow the spatial dims, filling the border with `value`."""
    x = check_tensor(input)
    return np.pad(x, ((0, 0), (top, bottom), (left, right)), constant_values=value)


def crop(input: np.ndarray, top: int, bottom: int, left: int, right: int) -> np.ndarray:
    """Return the interior window; inverse of pad with the same amounts."""
    x = check_tensor(input)
    _, h, w = x.shape
    if top + bottom >= h or left + right >= w:
        raise ValueError(f"crop ({top},{bottom},{left},{right}) consumes all of {h}x{w}")
    return x[:, top:h - bottom, left:w - right].copy()
