"""Estimator-style wrappers around the pipeline.

These follow the scikit-learn conventions — constructor parameters stored
verbatim, ``fit`` learning from data and setting trailing-underscore
attributes, ``get_params``/``set_params`` for free via ``BaseEstimator`` —
so the pipeline can sit inside existing model-selection tooling.  The
functional API in the other modules remains the primary interface.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .camera import CameraParams, GrayFrame
from .errors import ContractViolationError
from .metrics import mae
from .nuc import nuc_multi, nuc_single
from .sr import sr_forward
from .training import SceneDataset, TrainConfig, pretrain_module, train_end_to_end

__all__ = ["ThermalUpscaler", "NonuniformityCorrector"]


def _as_map_list(X) -> list[np.ndarray]:
    if isinstance(X, np.ndarray) and X.ndim == 3:
        return [X[i] for i in range(X.shape[0])]
    return list(X)


def _train_config(est, extra: dict | None = None) -> TrainConfig:
    return TrainConfig(scale=est.scale, nuc_mode=est.mode, n_frames=est.n_frames,
                       lr_sr=est.lr_sr, lr_nuc=est.lr_nuc, batch_size=est.batch_size,
                       epochs=est.epochs, weight_decay=est.weight_decay,
                       seed=est.seed, **(extra or {}))


class ThermalUpscaler(BaseEstimator):
    """End-to-end gray-frame → high-resolution temperature estimator.

    ``fit`` takes ground-truth temperature maps; supervised pairs are
    produced internally by imaging them through ``camera``.  ``predict``
    maps gray frames (or bursts in multi mode) to temperature maps at
    ``scale`` times the input resolution.
    """

    def __init__(self, camera: CameraParams | None = None, scale: int = 2,
                 mode: str = "single", n_frames: int = 7, epochs: int = 60,
                 batch_size: int = 8, lr_sr: float = 1e-4, lr_nuc: float = 4e-5,
                 weight_decay: float = 1e-2, seed: int = 0,
                 t_amb_range: tuple[float, float] = (0.0, 50.0)):
        self.camera = camera
        self.scale = scale
        self.mode = mode
        self.n_frames = n_frames
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr_sr = lr_sr
        self.lr_nuc = lr_nuc
        self.weight_decay = weight_decay
        self.seed = seed
        self.t_amb_range = t_amb_range

    def fit(self, X, y=None):
        """Train on ground-truth maps ``X`` (list of 2-D arrays or (n,H,W))."""
        if self.camera is None:
            raise ContractViolationError("a CameraParams instance is required to fit")
        data = SceneDataset(_as_map_list(X), self.camera,
                            t_amb_range=self.t_amb_range)
        result = train_end_to_end(_train_config(self), data)
        self.nuc_weights_ = result.nuc_weights
        self.sr_weights_ = result.sr_weights
        self.log_ = result.log
        self.best_val_mae_ = result.best_val_mae
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "sr_weights_"):
            raise NotFittedError("this estimator is not fitted yet; call fit first")

    def correct(self, frame, t_amb: float | None = None) -> np.ndarray:
        """Correction stage only: one frame/burst → temperature at input size."""
        self._check_fitted()
        if self.mode == "single":
            return nuc_single(frame, t_amb, self.nuc_weights_)
        return nuc_multi(frame, t_amb, self.nuc_weights_)

    def predict(self, X, t_amb: float | None = None) -> list[np.ndarray]:
        """Correct and upscale each item of ``X``.

        Items are :class:`GrayFrame` objects (carrying their own ambient
        temperature) or raw arrays, in which case ``t_amb`` is required.
        In multi mode an item is a burst: an (N, h, w) array.
        """
        self._check_fitted()
        return [sr_forward(self.correct(item, t_amb), self.sr_weights_)
                for item in X]

    def score(self, X, y, t_amb: float | None = None) -> float:
        """Negative mean MAE in °C against reference maps ``y`` (higher is better)."""
        preds = self.predict(X, t_amb)
        return -float(np.mean([mae(gt, pred) for gt, pred in zip(y, preds)]))


class NonuniformityCorrector(BaseEstimator, TransformerMixin):
    """Gray-frame → temperature transformer (the correction stage alone)."""

    def __init__(self, camera: CameraParams | None = None, scale: int = 2,
                 mode: str = "single", n_frames: int = 7, epochs: int = 30,
                 batch_size: int = 8, lr_sr: float = 1e-4, lr_nuc: float = 4e-5,
                 weight_decay: float = 1e-2, seed: int = 0,
                 t_amb_range: tuple[float, float] = (0.0, 50.0)):
        self.camera = camera
        self.scale = scale
        self.mode = mode
        self.n_frames = n_frames
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr_sr = lr_sr
        self.lr_nuc = lr_nuc
        self.weight_decay = weight_decay
        self.seed = seed
        self.t_amb_range = t_amb_range

    def fit(self, X, y=None):
        if self.camera is None:
            raise ContractViolationError("a CameraParams instance is required to fit")
        data = SceneDataset(_as_map_list(X), self.camera,
                            t_amb_range=self.t_amb_range)
        result = pretrain_module("nuc", _train_config(self), data)
        self.nuc_weights_ = result.nuc_weights
        self.log_ = result.log
        self.best_val_mae_ = result.best_val_mae
        return self

    def transform(self, X, t_amb: float | None = None) -> list[np.ndarray]:
        if not hasattr(self, "nuc_weights_"):
            raise NotFittedError("this transformer is not fitted yet; call fit first")
        forward = nuc_single if self.mode == "single" else nuc_multi
        return [forward(item, t_amb, self.nuc_weights_) for item in X]
