"""Radiometric thermal imaging pipeline: simulation, correction, upscaling.

A physics-based camera model turns temperature maps into noisy gray-level
frames; small convolutional networks invert that process (nonuniformity
correction) and raise the spatial resolution (2x or 4x), trained end to
end on simulated pairs.  Evaluation covers pixel metrics, distribution
distance, and the crop water-stress index.
"""

from .autodiff import Var, backward
from .burst import Burst, FrameMotion, MotionConfig, default_motion, synth_burst
from .camera import (CameraParams, GrayFrame, flat_field_correct, invert_ideal,
                     load_camera_params, save_camera_params, simulate_frame)
from .errors import (CameraParameterError, ContractViolationError,
                     DegenerateSceneError, FrameFormatError, SaturationWarning,
                     TrainingDivergedError, WeightFormatError)
from .estimators import NonuniformityCorrector, ThermalUpscaler
from .fileio import (FrameRecord, load_frame, load_weights, save_gray,
                     save_temp, save_weights)
from .metrics import (CwsiInputs, Histogram, MetricsConfig, TransportPlan,
                      cwsi, cwsi_error, cwsi_from_inputs, cwsi_inputs, emd,
                      emd_from_histograms, frame_metrics, histogram_of, mae,
                      psnr, ssim)
from .nuc import (MultiNucConfig, RegistrationResult, SingleNucConfig,
                  estimate_mean_temp, init_multi_nuc, init_single_nuc,
                  multi_config_from_weights, nuc_multi, nuc_single,
                  register_burst, single_config_from_weights)
from .ops import (ConvKernel, bicubic_resample, concat_channels, conv2d,
                  downscale_gt, leaky_relu, pixel_shuffle)
from .scenes import canopy_scene, scene_set, smooth_scene
from .sr import SrConfig, init_sr, residual_block, sr_config_from_weights, sr_forward
from .training import (AdamW, PlateauScheduler, SceneDataset, TrainConfig,
                       TrainLog, TrainResult, loss, make_training_pair,
                       pretrain_module, train_end_to_end)

__version__ = "0.1.0"

__all__ = [
    "Var", "backward",
    "Burst", "FrameMotion", "MotionConfig", "default_motion", "synth_burst",
    "CameraParams", "GrayFrame", "flat_field_correct", "invert_ideal",
    "load_camera_params", "save_camera_params", "simulate_frame",
    "CameraParameterError", "ContractViolationError", "DegenerateSceneError",
    "FrameFormatError", "SaturationWarning", "TrainingDivergedError",
    "WeightFormatError",
    "NonuniformityCorrector", "ThermalUpscaler",
    "FrameRecord", "load_frame", "load_weights", "save_gray", "save_temp",
    "save_weights",
    "CwsiInputs", "Histogram", "MetricsConfig", "TransportPlan", "cwsi",
    "cwsi_error", "cwsi_from_inputs", "cwsi_inputs", "emd",
    "emd_from_histograms", "frame_metrics", "histogram_of", "mae", "psnr",
    "ssim",
    "MultiNucConfig", "RegistrationResult", "SingleNucConfig",
    "estimate_mean_temp", "init_multi_nuc", "init_single_nuc",
    "multi_config_from_weights", "nuc_multi", "nuc_single", "register_burst",
    "single_config_from_weights",
    "ConvKernel", "bicubic_resample", "concat_channels", "conv2d",
    "downscale_gt", "leaky_relu", "pixel_shuffle",
    "canopy_scene", "scene_set", "smooth_scene",
    "SrConfig", "init_sr", "residual_block", "sr_config_from_weights",
    "sr_forward",
    "AdamW", "PlateauScheduler", "SceneDataset", "TrainConfig", "TrainLog",
    "TrainResult", "loss", "make_training_pair", "pretrain_module",
    "train_end_to_end",
    "__version__",
]
