"""Element-level streaming simulator of the accelerator datapath.

One image flows as a flat row-major element stream. For every layer, a
producer feeds the stream into `num_channels` FIFOs (element i lands in
FIFO i mod num_channels), channel engines consume assembled elements and
compute one output element at a time in fixed point, a round-robin arbiter
serializes finished elements (one grant per cycle), and the output
controller reassembles them by index. Layers run store-and-forward: a
layer's full output becomes the next layer's input stream.

Cycle model: the producer pushes at most one element per cycle; each FIFO
pops at most one element per cycle, gated by what the engines still need;
a convolution output occupies its engine for ceil(macs / macs_per_channel)
cycles and pool/up-sample outputs for one; the arbiter grants one element
per cycle. A full FIFO stalls the producer (counted) under backpressure,
or raises FifoOverflowError without it.

Values are exact: accumulation happens in a widened integer register and
is requantized once per output element, so the result matches the
vectorized fixed-point reference bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import ops
from ..fixedpoint import dequantize, quantize, check_headroom, requantize_acc, sigmoid_fixed
from ..network import CONVOLUTION, MAX_POOL, NetworkSpec
from .arbiter import ArbiterState, arbiter_grant
from .config import AccelConfig
from .fifo import FifoModel, FifoOverflowError
from .perf import PerfCounters


class PipelineTrace:
    """Line-oriented event log, one event per line, stable field order."""

    def __init__(self):
        self.lines: list[str] = []

    def add(self, cycle: int, unit: str, event: str, detail: str):
        self.lines.append(f"cycle={cycle} unit={unit} event={event} detail={detail}")

    def render(self) -> str:
        return "\n".join(self.lines) + ("\n" if self.lines else "")

    def __len__(self) -> int:
        return len(self.lines)


@dataclass
class PipelineState:
    """Mutable simulator state shared by all layers of one run."""

    fifos: list[FifoModel]
    arbiter: ArbiterState
    counters: PerfCounters
    layer_index: int = 0
    pushed: int = 0
    emitted: int = 0


def distribute(image, cfg: AccelConfig) -> list[np.ndarray]:
    """Interleave the row-major element stream across the channel FIFOs.

    Element i goes to stream i mod num_channels; round-robin reading of
    the streams reproduces the original order.
    """
    flat = ops.check_tensor(image).ravel()
    return [flat[j::cfg.num_channels].copy() for j in range(cfg.num_channels)]


def un_interleave(streams) -> np.ndarray:
    """Inverse of distribute: merge lane streams back into one flat array."""
    sizes = [len(s) for s in streams]
    total = sum(sizes)
    nc = len(streams)
    for j, size in enumerate(sizes):
        expected = (total - j + nc - 1) // nc
        if size != expected:
            raise ValueError(f"stream {j} has {size} elements, expected {expected}")
    out = np.empty(total, dtype=np.result_type(*streams) if total else np.float64)
    for j, s in enumerate(streams):
        out[j::nc] = s
    return out


class _LayerPlan:
    """Per-layer geometry: stream sizes, engine timing, element values."""

    def __init__(self, layer, x_raw, bank, cfg):
        self.kind = layer.kind
        self.in_flat = x_raw.ravel().tolist()
        self.n_in = len(self.in_flat)
        c, h, w = x_raw.shape

        if layer.kind == CONVOLUTION:
            k = layer.window
            s = layer.stride
            out_h, out_w, (pt, pb, pl, pr) = ops._conv_geometry(
                h, w, k, k, s, layer.padding
            )
            self.xp = np.pad(x_raw, ((0, 0), (pt, pb), (pl, pr)))
            self.bank = bank
            self.activation = layer.activation
            self.out_shape = (bank.out_channels, out_h, out_w)
            self.macs = c * k * k
            self.busy = -(-self.macs // cfg.macs_per_channel)
            i = np.arange(out_h) * s
            j = np.arange(out_w) * s
            r_hi = np.minimum(i - pt + k - 1, h - 1)
            c_hi = np.minimum(j - pl + k - 1, w - 1)
            plane = (c - 1) * h * w + r_hi[:, None] * w + c_hi[None, :]
            self.last_needed = np.tile(plane.ravel(),
                                       bank.out_channels).tolist()
            self.k, self.s = k, s
        elif layer.kind == MAX_POOL:
            win, s = layer.window, layer.stride
            out_h, out_w = ops.pool_output_hw(h, w, win, s)
            self.x = x_raw
            self.out_shape = (c, out_h, out_w)
            self.macs = 0
            self.busy = 1
            r_hi = np.arange(out_h) * s + win - 1
            c_hi = np.arange(out_w) * s + win - 1
            plane = r_hi[:, None] * w + c_hi[None, :]
            self.last_needed = (plane[None] + np.arange(c)[:, None, None]
                                * h * w).ravel().tolist()
            self.win, self.s = win, s
        else:
            f = layer.window
            self.x = x_raw
            self.out_shape = (c, h * f, w * f)
            self.macs = 0
            self.busy = 1
            r_src = np.arange(h * f) // f
            c_src = np.arange(w * f) // f
            plane = r_src[:, None] * w + c_src[None, :]
            self.last_needed = (plane[None] + np.arange(c)[:, None, None]
                                * h * w).ravel().tolist()
            self.f = f

        self.n_out = int(np.prod(self.out_shape))
        self.out_hw = self.out_shape[1] * self.out_shape[2]

    def compute(self, o: int, fmt) -> int:
        """Value of output element o, one widened MAC chain per element."""
        c_out, rem = divmod(o, self.out_hw)
        i, j = divmod(rem, self.out_shape[2])
        if self.kind == CONVOLUTION:
            window = self.xp[:, i * self.s:i * self.s + self.k,
                             j * self.s:j * self.s + self.k]
            acc = int(np.sum(window * self.bank.weights[c_out]))
            acc += int(self.bank.bias[c_out]) << fmt.frac_bits
            raw = requantize_acc(acc, fmt)
            if self.activation == "relu":
                return max(raw, 0)
            if self.activation == "sigmoid":
                return sigmoid_fixed(raw, fmt)
            return raw
        if self.kind == MAX_POOL:
            window = self.x[c_out, i * self.s:i * self.s + self.win,
                            j * self.s:j * self.s + self.win]
            return int(window.max())
        return int(self.x[c_out, i // self.f, j // self.f])


def run_pipeline(spec: NetworkSpec, qparams, image, cfg: AccelConfig,
                 record_trace: bool = True):
    """Stream one image through the whole stack.

    Returns (output image as floats, PerfCounters, PipelineTrace); the
    trace is None when record_trace is False. elements_emitted counts the
    delivered output pixels after the final crop.
    """
    fmt = cfg.fixed_format
    check_headroom(fmt)
    x = ops.check_tensor(image)
    if x.shape != spec.input_shape:
        raise ValueError(f"expected input shape {spec.input_shape}, got {x.shape}")
    if len(qparams) != len(spec.conv_layer_indices()):
        raise ValueError("parameter count does not match the network")
    for q in qparams:
        if q.fmt != fmt:
            raise ValueError(f"parameters quantized under {q.fmt}, expected {fmt}")

    nc = cfg.num_channels
    state = PipelineState(
        fifos=[FifoModel(cfg.fifo_depth, f"fifo{j}") for j in range(nc)],
        arbiter=ArbiterState(nc),
        counters=PerfCounters(),
    )
    trace = PipelineTrace() if record_trace else None

    pt, pb, pl, pr = spec.canvas_pads()
    h = np.pad(quantize(x, fmt), ((0, 0), (pt, pb), (pl, pr)))

    conv_i = 0
    last = len(spec.layers) - 1
    for li, layer in enumerate(spec.layers):
        state.layer_index = li
        bank = None
        if layer.kind == CONVOLUTION:
            bank = qparams[conv_i]
            conv_i += 1
        plan = _LayerPlan(layer, h, bank, cfg)
        crop_box = (pt, pt + spec.input_hw, pl, pl + spec.input_hw) if li == last else None
        h = _run_layer(state, plan, li + 1, cfg, trace, crop_box)

    out_raw = h[:, pt:pt + spec.input_hw, pl:pl + spec.input_hw]
    return dequantize(out_raw, fmt), state.counters, trace


def _run_layer(state, plan, layer_no, cfg, trace, crop_box):
    nc = cfg.num_channels
    fmt = cfg.fixed_format
    fifos = state.fifos
    counters = state.counters
    in_flat = plan.in_flat
    n_in = plan.n_in
    n_out = plan.n_out
    last_needed = plan.last_needed
    busy_span = plan.busy
    is_conv = plan.kind == CONVOLUTION

    current = [e if e < n_out else None for e in range(nc)]
    remaining = [0] * nc
    ready = [False] * nc
    value = [0] * nc
    next_missing = list(range(nc))
    arrived = 0
    pushed = 0
    emitted = 0
    out_flat = [0] * n_out
    cycle = counters.total_cycles
    limit = cycle + 64 * (n_in + n_out * busy_span) + 100_000

    while emitted < n_out:
        cycle += 1
        if cycle > limit:
            raise RuntimeError(f"simulator wedged in layer {layer_no}")

        demand = -1
        for e in range(nc):
            o = current[e]
            if o is not None and not ready[e]:
                ln = last_needed[o]
                if ln > demand:
                    demand = ln

        if arrived <= demand:
            moved = False
            for j in range(nc):
                if next_missing[j] <= demand and fifos[j].queue:
                    fifos[j].pop()
                    if trace is not None:
                        trace.add(cycle, fifos[j].name, "pop",
                                  f"layer={layer_no},index={next_missing[j]}")
                    next_missing[j] += nc
                    moved = True
            if moved:
                arrived = min(next_missing)

        if pushed < n_in:
            j = pushed % nc
            f = fifos[j]
            if f.full():
                if cfg.backpressure:
                    counters.stall_cycles += 1
                    if trace is not None:
                        trace.add(cycle, f.name, "stall",
                                  f"layer={layer_no},index={pushed}")
                else:
                    counters.total_cycles = cycle
                    raise FifoOverflowError(f.name, cycle)
            else:
                f.push(in_flat[pushed])
                if trace is not None:
                    trace.add(cycle, f.name, "push",
                              f"layer={layer_no},index={pushed},value={in_flat[pushed]}")
                pushed += 1

        requests = [False] * nc
        for e in range(nc):
            o = current[e]
            if o is None:
                continue
            if ready[e]:
                requests[e] = True
                continue
            if remaining[e] == 0:
                if last_needed[o] < arrived:
                    remaining[e] = busy_span
                else:
                    continue
            remaining[e] -= 1
            if remaining[e] == 0:
                value[e] = plan.compute(o, fmt)
                ready[e] = True
                requests[e] = True
                counters.pointwise_ops += 1
                if is_conv:
                    counters.mac_ops += plan.macs
                    if trace is not None:
                        trace.add(cycle, f"engine{e}", "mac",
                                  f"layer={layer_no},element={o},"
                                  f"macs={plan.macs},cycles={busy_span}")

        granted, _ = arbiter_grant(state.arbiter, requests)
        if granted is not None:
            e = granted
            o = current[e]
            out_flat[o] = value[e]
            emitted += 1
            if trace is not None:
                trace.add(cycle, "arbiter", "grant",
                          f"layer={layer_no},channel={e}")
                trace.add(cycle, "output_ctrl", "emit",
                          f"layer={layer_no},element={o},value={value[e]}")
            if crop_box is not None:
                i, j = divmod(o % plan.out_hw, plan.out_shape[2])
                if crop_box[0] <= i < crop_box[1] and crop_box[2] <= j < crop_box[3]:
                    counters.elements_emitted += 1
            ready[e] = False
            nxt = o + nc
            current[e] = nxt if nxt < n_out else None

    # flush stream elements no output ever demanded (possible only for
    # stride patterns that skip trailing rows; a no-op for this stack)
    while any(f.queue for f in fifos):
        cycle += 1
        for j in range(nc):
            if fifos[j].queue:
                fifos[j].pop()
                if trace is not None:
                    trace.add(cycle, fifos[j].name, "pop",
                              f"layer={layer_no},index={next_missing[j]}")
                next_missing[j] += nc

    counters.total_cycles = cycle
    state.pushed = pushed
    state.emitted = emitted
    return np.asarray(out_flat, dtype=np.int64).reshape(plan.out_shape)
