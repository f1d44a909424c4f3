"""Simulator configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..fixedpoint import FixedPointFormat


@dataclass(frozen=True)
class AccelConfig:
    """Knobs of the streaming accelerator model.

    backpressure picks what a full FIFO does to the producer: stall it
    (True, the hardware default) or fail the run with an overflow error
    (False), mirroring a design without flow control.
    """

    clock_hz: float = 100e6
    num_channels: int = 8
    macs_per_channel: int = 16
    fifo_depth: int = 512
    fixed_format: FixedPointFormat = field(default_factory=FixedPointFormat)
    power_watts: float = 5.93
    backpressure: bool = True

    def __post_init__(self):
        if self.clock_hz <= 0:
            raise ValueError("clock_hz must be positive")
        if self.num_channels < 1:
            raise ValueError("num_channels must be at least 1")
        if self.macs_per_channel < 1:
            raise ValueError("macs_per_channel must be at least 1")
        if self.fifo_depth < 1:
            raise ValueError("fifo_depth must be at least 1")
        if self.power_watts <= 0:
            raise ValueError("power_watts must be positive")
