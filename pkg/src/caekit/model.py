"""Forward evaluation, backprop and mini-batch training of the full stack."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import metrics, network, ops
from .network import CONVOLUTION, MAX_POOL, NetworkSpec
from .ops import KernelBank


class TrainingDivergedError(RuntimeError):
    """Raised when a training loss turns non-finite."""


@dataclass
class TrainConfig:
    """Mini-batch descent settings.

    Plain sgd is the default: with the final sigmoid layer, momentum tends
    to overshoot the output bias into saturation on sparse images, where
    the vanishing activation gradient freezes training at a constant
    output.
    """

    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 0.5
    optimizer: str = "sgd"
    momentum: float = 0.9
    seed: int = 0
    l1_lambda: float = 0.0  # reserved; any non-zero value is rejected

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.optimizer not in ("sgd", "sgd_momentum"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.l1_lambda != 0.0:
            raise ValueError("l1_lambda is reserved and must stay 0")


@dataclass
class TrainReport:
    """Per-epoch losses plus the final reconstruction metrics."""

    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    final_metrics: dict = field(default_factory=dict)

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "final_metrics": self.final_metrics,
        }
        if include_timing:
            out["epoch_seconds"] = self.epoch_seconds
        return out


def _activate(z, kind):
    if kind == "relu":
        return ops.relu(z)
    if kind == "sigmoid":
        return ops.sigmoid(z)
    return z


def forward_batch(spec: NetworkSpec, params, x):
    """Run (N, 1, H, W) inputs through pad, the 13 layers, and the crop.

    Returns (output, cache); the cache carries everything backward_batch
    needs, including the output itself.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or x.shape[1:] != spec.input_shape:
        raise ValueError(
            f"expected batch of shape (N, {spec.input_shape}), got {x.shape}"
        )
    pt, pb, pl, pr = spec.canvas_pads()
    h = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))

    entries = []
    conv_i = 0
    for layer in spec.layers:
        if layer.kind == CONVOLUTION:
            z = ops.conv2d_batch(h, params[conv_i], layer.stride, layer.padding)
            y = _activate(z, layer.activation)
            entries.append((h, y))
            h = y
            conv_i += 1
        elif layer.kind == MAX_POOL:
            y, argmax = ops.maxpool2d_batch(h, layer.window, layer.stride)
            entries.append((h.shape, argmax))
            h = y
        else:
            entries.append(None)
            h = ops.upsample_nearest_batch(h, layer.window)
    out = h[:, :, pt:pt + spec.input_hw, pl:pl + spec.input_hw].copy()
    cache = {"entries": entries, "output": out, "batch": x.shape[0]}
    return out, cache


def forward(spec: NetworkSpec, params, input):
    """Single-image forward; input (1, H, W), output the same shape."""
    x = ops.check_tensor(input)
    if x.shape != spec.input_shape:
        raise ValueError(f"expected input shape {spec.input_shape}, got {x.shape}")
    out, cache = forward_batch(spec, params, x[None])
    return out[0], cache


def loss_mse(output, clean_target) -> float:
    out = np.asarray(output, dtype=np.float64)
    tgt = np.asarray(clean_target, dtype=np.float64)
    if out.shape != tgt.shape:
        raise ValueError(f"shape mismatch: {out.shape} vs {tgt.shape}")
    return float(np.mean((out - tgt) ** 2))


def backward_batch(spec: NetworkSpec, params, cache, clean_target):
    """Gradients of the mean-squared reconstruction loss.

    Returns one KernelBank of gradients per convolution layer, mirroring
    the parameter list.
    """
    out = cache["output"]
    tgt = np.asarray(clean_target, dtype=np.float64)
    if tgt.shape != out.shape:
        raise ValueError(f"target shape {tgt.shape} does not match output {out.shape}")
    if len(cache["entries"]) != len(spec.layers):
        raise ValueError("cache does not match this network")

    g = 2.0 * (out - tgt) / out.size
    pt, pb, pl, pr = spec.canvas_pads()
    gc = np.zeros((out.shape[0], 1, spec.canvas_hw, spec.canvas_hw))
    gc[:, :, pt:pt + spec.input_hw, pl:pl + spec.input_hw] = g
    g = gc

    grads: list[KernelBank | None] = [None] * len(spec.conv_layer_indices())
    conv_i = len(grads)
    for layer, entry in zip(reversed(spec.layers), reversed(cache["entries"])):
        if layer.kind == CONVOLUTION:
            conv_i -= 1
            x_in, y = entry
            if layer.activation == "relu":
                g = g * (y > 0)
            elif layer.activation == "sigmoid":
                g = ops.sigmoid_backward_from_output(y, g)
            g, gw, gb = ops.conv2d_backward_batch(
                x_in, params[conv_i], layer.stride, layer.padding, g
            )
            grads[conv_i] = KernelBank(gw, gb)
        elif layer.kind == MAX_POOL:
            in_shape, argmax = entry
            g = ops.maxpool2d_backward_batch(argmax, g, in_shape,
                                             layer.window, layer.stride)
        else:
            g = ops.upsample_backward_batch(layer.window, g)
    return grads


def backward(spec: NetworkSpec, params, cache, clean_target):
    """Single-image wrapper over backward_batch."""
    tgt = ops.check_tensor(clean_target, "clean_target")
    return backward_batch(spec, params, cache, tgt[None])


def train(spec: NetworkSpec, train_pairs, val_pairs, cfg: TrainConfig,
          epoch_callback=None):
    """Mini-batch gradient descent on (noisy, clean) pairs.

    Initializes parameters from cfg.seed, shuffles deterministically, and
    aborts with TrainingDivergedError if any loss turns non-finite.
    epoch_callback(epoch, train_loss, val_loss, seconds) fires after each
    epoch when given. Returns (parameters, report).
    """
    noisy, clean = (np.asarray(a, dtype=np.float64) for a in train_pairs)
    if noisy.shape != clean.shape or noisy.ndim != 4:
        raise ValueError("train pairs must be matching (N, 1, H, W) batches")
    if noisy.shape[0] == 0:
        raise ValueError("training set is empty")
    if val_pairs is not None:
        val_noisy, val_clean = (np.asarray(a, dtype=np.float64) for a in val_pairs)
        if val_noisy.shape != val_clean.shape:
            raise ValueError("validation pair shapes differ")
    else:
        val_noisy = val_clean = None

    params = network.init_parameters(spec, cfg.seed)
    velocity = [KernelBank(np.zeros_like(b.weights), np.zeros_like(b.bias))
                for b in params]
    rng = np.random.default_rng(cfg.seed)
    n = noisy.shape[0]
    report = TrainReport()

    for _ in range(cfg.epochs):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            out, cache = forward_batch(spec, params, noisy[idx])
            loss = loss_mse(out, clean[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"training loss became non-finite ({loss}) after "
                    f"{len(report.train_loss)} completed epochs"
                )
            loss_sum += loss * idx.size
            grads = backward_batch(spec, params, cache, clean[idx])
            for bank, vel, grad in zip(params, velocity, grads):
                if cfg.optimizer == "sgd_momentum":
                    vel.weights *= cfg.momentum
                    vel.weights += grad.weights
                    vel.bias *= cfg.momentum
                    vel.bias += grad.bias
                    step_w, step_b = vel.weights, vel.bias
                else:
                    step_w, step_b = grad.weights, grad.bias
                bank.weights -= cfg.learning_rate * step_w
                bank.bias -= cfg.learning_rate * step_b
        report.train_loss.append(loss_sum / n)

        if val_noisy is not None and val_noisy.shape[0] > 0:
            report.val_loss.append(evaluate_loss(spec, params, val_noisy, val_clean,
                                                 cfg.batch_size))
        report.epoch_seconds.append(time.perf_counter() - t0)
        if epoch_callback is not None:
            epoch_callback(len(report.train_loss), report.train_loss[-1],
                           report.val_loss[-1] if report.val_loss else None,
                           report.epoch_seconds[-1])

    probe_noisy = val_noisy if val_noisy is not None and len(val_noisy) else noisy
    probe_clean = val_clean if val_noisy is not None and len(val_noisy) else clean
    denoised = denoise(spec, params, probe_noisy, cfg.batch_size)
    report.final_metrics = {
        "mse": metrics.mse(denoised, probe_clean),
        "psnr": metrics.psnr(denoised, probe_clean),
        "pixel_accuracy": metrics.pixel_accuracy(denoised, probe_clean),
    }
    return params, report


def evaluate_loss(spec, params, noisy, clean, batch_size: int = 64) -> float:
    """Mean reconstruction loss without touching parameters."""
    total = 0.0
    n = noisy.shape[0]
    for start in range(0, n, batch_size):
        out, _ = forward_batch(spec, params, noisy[start:start + batch_size])
        total += float(np.sum((out - clean[start:start + batch_size]) ** 2))
    return total / (n * int(np.prod(spec.input_shape)))


def denoise(spec: NetworkSpec, params, noisy_batch, batch_size: int = 64):
    """Forward every image; returns the reconstructed batch."""
    noisy = np.asarray(noisy_batch, dtype=np.float64)
    chunks = []
    for start in range(0, noisy.shape[0], batch_size):
        out, _ = forward_batch(spec, params, noisy[start:start + batch_size])
        chunks.append(out)
    return np.concatenate(chunks, axis=0) if chunks else noisy.copy()
