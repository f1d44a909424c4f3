"""Convolutional denoising autoencoder toolkit with a streaming
accelerator simulator.

The numeric stack (ops, network, model) trains and runs the 13-layer
encode/decode network on noisy images; fixedpoint and accel evaluate the
same network in saturating fixed point through an element-streaming
pipeline model with FIFOs and round-robin arbitration; dataset, metrics
and synthetic cover data handling; estimator wraps everything in a
scikit-learn style fit/transform API.
"""

from .estimator import DenoisingAutoencoder
from .fixedpoint import FixedPointFormat
from .model import TrainConfig, TrainReport
from .network import NetworkSpec, build_network, init_parameters
from .ops import KernelBank

__version__ = "1.0.0"

__all__ = [
    "DenoisingAutoencoder", "FixedPointFormat", "KernelBank", "NetworkSpec",
    "TrainConfig", "TrainReport", "build_network", "init_parameters",
    "__version__",
]
