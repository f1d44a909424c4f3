"""Operation counting and the throughput/latency/efficiency report.

Op-counting convention, stated once and used everywhere: a multiply-
accumulate is 2 operations (the industry norm behind GOP/s tables);
pooling, up-sampling, and the per-element activation/write-back stage of a
convolution each count 1 operation per output element.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..network import CONVOLUTION, MAX_POOL, NetworkSpec, layer_output_shape
from .config import AccelConfig


@dataclass
class PerfCounters:
    """Raw tallies accumulated by a pipeline run."""

    total_cycles: int = 0
    mac_ops: int = 0
    stall_cycles: int = 0
    elements_emitted: int = 0
    pointwise_ops: int = 0

    def total_ops(self) -> int:
        return 2 * self.mac_ops + self.pointwise_ops


@dataclass
class PerfReport:
    latency_s: float
    total_ops: int
    throughput_gops: float
    energy_eff_gops_per_w: float

    def to_dict(self) -> dict:
        return {
            "latency_s": self.latency_s,
            "total_ops": self.total_ops,
            "throughput_gops": self.throughput_gops,
            "energy_eff_gops_per_w": self.energy_eff_gops_per_w,
        }


def output_done(counters: PerfCounters, expected_elements: int) -> bool:
    """Has the output controller delivered the whole result?"""
    return counters.elements_emitted == expected_elements


def count_ops(spec: NetworkSpec) -> int:
    """Operations for one frame through the stack, per the convention above.

    Convolutions contribute 2 * k_h * k_w * in_ch per output element plus
    one pointwise op for the activation stage; pool and up-sample layers
    contribute one op per output element.
    """
    shape = spec.internal_shape
    total = 0
    for layer in spec.layers:
        out = layer_output_shape(layer, shape)
        out_elements = out[0] * out[1] * out[2]
        if layer.kind == CONVOLUTION:
            macs = layer.window * layer.window * layer.in_channels
            total += (2 * macs + 1) * out_elements
        else:
            total += out_elements
        shape = out
    return total


def perf_report(counters: PerfCounters, cfg: AccelConfig) -> PerfReport:
    """Latency from the cycle count, throughput and efficiency from ops.

    throughput * latency == ops and efficiency * power == throughput hold
    exactly by construction.
    """
    if counters.total_cycles <= 0:
        raise ValueError("cannot report on a run with zero cycles")
    latency = counters.total_cycles / cfg.clock_hz
    total_ops = counters.total_ops()
    throughput_gops = total_ops / latency / 1e9
    return PerfReport(
        latency_s=latency,
        total_ops=total_ops,
        throughput_gops=throughput_gops,
        energy_eff_gops_per_w=throughput_gops / cfg.power_watts,
    )


# Published comparison rows: platform, process, clock, watts, latency (s,
# None where the source gives none), throughput (GOP/s), efficiency
# (GOP/s/W). The last row is the hardware this simulator models.
PUBLISHED_ROWS = (
    {"platform": "NVIDIA K80", "technology": "ASIC (28nm)", "clock_hz": 1.48e9,
     "power_w": 30.0, "latency_s": 1.13762, "throughput_gops": 22000.0,
     "energy_eff_gops_per_w": 733.33},
    {"platform": "NVIDIA GTX 1080 TI", "technology": "GPU (16nm)",
     "clock_hz": 1.48e9, "power_w": 250.0, "latency_s": 6.15e-3,
     "throughput_gops": 235.77, "energy_eff_gops_per_w": 0.94},
    {"platform": "Chakradhar et al.", "technology": "FPGA (28nm)",
     "clock_hz": 200e6, "power_w": 15.0, "latency_s": None,
     "throughput_gops": 16.0, "energy_eff_gops_per_w": 1.06},
    {"platform": "Gokhale et al.", "technology": "FPGA (28nm)",
     "clock_hz": 150e6, "power_w": 8.0, "latency_s": 4.50e-3,
     "throughput_gops": 23.18, "energy_eff_gops_per_w": 2.90},
    {"platform": "Zhang et al.", "technology": "FPGA (28nm)",
     "clock_hz": 100e6, "power_w": 18.61, "latency_s": 21.61e-3,
     "throughput_gops": 61.62, "energy_eff_gops_per_w": 3.31},
    {"platform": "Ours (published)", "technology": "FPGA (16nm)",
     "clock_hz": 100e6, "power_w": 5.93, "latency_s": 2.91e-3,
     "throughput_gops": 21.12, "energy_eff_gops_per_w": 3.56},
)


def compare_published(report: PerfReport) -> list[dict]:
    """Published rows plus the simulated row, each with a throughput ratio.

    ratio_to_simulated = simulated throughput / row throughput, so values
    above 1 mean the simulation outran the row.
    """
    rows = []
    for row in PUBLISHED_ROWS:
        entry = dict(row)
        entry["ratio_simulated_over_row"] = (
            report.throughput_gops / row["throughput_gops"]
        )
        rows.append(entry)
    rows.append({
        "platform": "Simulated",
        "technology": "this run",
        "clock_hz": None,
        "power_w": None,
        "latency_s": report.latency_s,
        "throughput_gops": report.throughput_gops,
        "energy_eff_gops_per_w": report.energy_eff_gops_per_w,
        "ratio_simulated_over_row": 1.0,
    })
    return rows
