"""Scikit-learn style estimator facade over the denoising network."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import metrics, model, network
from .dataset import NoiseConfig, add_gaussian_noise
from .model import TrainConfig
from .validation import as_image_batch, restore_shape


class DenoisingAutoencoder(BaseEstimator, TransformerMixin):
    """Denoise square grayscale images with the 13-layer conv stack.

    fit(X, y) trains on (noisy X, clean y) pairs. With y omitted, X is
    treated as clean and corrupted internally with Gaussian noise of
    noise_sigma, the usual self-supervised setup. transform(X) returns the
    reconstruction in the same array shape X came in (flat rows stay flat).

    Parameters mirror TrainConfig plus the network geometry knobs; all are
    stored verbatim so get_params/set_params round-trip.
    """

    def __init__(self, channel_profile=(16, 8, 8, 8, 8, 16, 1), input_hw=28,
                 canvas_hw=32, epochs=20, batch_size=32, learning_rate=0.5,
                 optimizer="sgd", momentum=0.9, noise_sigma=0.3,
                 seed=0):
        self.channel_profile = channel_profile
        self.input_hw = input_hw
        self.canvas_hw = canvas_hw
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.momentum = momentum
        self.noise_sigma = noise_sigma
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            optimizer=self.optimizer,
            momentum=self.momentum,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        noisy, _ = as_image_batch(X, self.input_hw)
        if y is not None:
            clean, _ = as_image_batch(y, self.input_hw)
            if clean.shape != noisy.shape:
                raise ValueError(
                    f"X and y shapes differ: {noisy.shape} vs {clean.shape}"
                )
        else:
            clean = noisy
            cfg = NoiseConfig(sigma=self.noise_sigma, seed=self.seed)
            noisy = add_gaussian_noise(clean, cfg)
        self.spec_ = network.build_network(
            self.channel_profile, input_hw=noisy.shape[2],
            canvas_hw=self.canvas_hw,
        )
        self.params_, self.report_ = model.train(
            self.spec_, (noisy, clean), None, self._train_config()
        )
        self.n_features_in_ = int(np.prod(noisy.shape[1:]))
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError(
                "this DenoisingAutoencoder is not fitted yet; call fit first"
            )

    def transform(self, X):
        self._check_fitted()
        batch, ndim = as_image_batch(X, self.spec_.input_hw)
        return restore_shape(model.denoise(self.spec_, self.params_, batch), ndim)

    def predict(self, X):
        return self.transform(X)

    def score(self, X, y=None):
        """Mean PSNR (dB) of the reconstruction against y (or X itself)."""
        self._check_fitted()
        batch, _ = as_image_batch(X, self.spec_.input_hw)
        target, _ = as_image_batch(y, self.spec_.input_hw) if y is not None \
            else (batch, None)
        denoised = model.denoise(self.spec_, self.params_, batch)
        return float(np.mean([
            metrics.psnr(d, t) for d, t in zip(denoised, target)
        ]))
