"""Streaming accelerator simulator and performance model."""

from .arbiter import ArbiterState, arbiter_grant
from .config import AccelConfig
from .fifo import FifoModel, FifoOverflowError
from .perf import (PerfCounters, PerfReport, PUBLISHED_ROWS, compare_published,
                   count_ops, output_done, perf_report)
from .pipeline import (PipelineState, PipelineTrace, distribute, run_pipeline,
                       un_interleave)
from .reference import quantized_forward

__all__ = [
    "AccelConfig", "ArbiterState", "FifoModel", "FifoOverflowError",
    "PerfCounters", "PerfReport", "PipelineState", "PipelineTrace",
    "PUBLISHED_ROWS", "arbiter_grant", "compare_published", "count_ops",
    "distribute", "output_done", "perf_report", "quantized_forward",
    "run_pipeline", "un_interleave",
]
