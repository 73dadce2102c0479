"""Single-shot plug-and-play image restoration.

A small pixelwise INR denoiser is trained on the degraded observation
alone and then used, frozen, as the prior inside PnP-ADMM for
deconvolution, super-resolution and joint demosaicing + deconvolution.
"""

from .admm import AdmmSchedule, IterationRecord, make_schedule, run_admm
from .estimators import INRDenoiser, SingleShotPnP, TVDenoiser
from .exceptions import (ConfigError, ContractError, ConvergenceWarning, DimensionError,
                         NumericError, SSPnPError, StageError, TrainingError)
from .inr import (ActivationParams, DenoiserModel, ModelConfig, apply_denoiser, build_model,
                  load_model, phi, phi_derivative, save_model)
from .metrics import QualityReport, psnr, quality_report, ssim
from .operators import (ForwardOperator, TASKS, deconvolution, gaussian_kernel,
                        joint_demosaic_deconvolution, operator_for_task, super_resolution)
from .prox import ProxConfig, cg_solve, prox_data, tv_denoise
from .training import TrainConfig, add_noise, train_single_shot

__version__ = "0.1.0"

__all__ = [
    "ActivationParams", "AdmmSchedule", "ConfigError", "ContractError", "ConvergenceWarning",
    "DenoiserModel", "DimensionError", "ForwardOperator", "INRDenoiser", "IterationRecord",
    "ModelConfig", "NumericError", "ProxConfig", "QualityReport", "SSPnPError",
    "SingleShotPnP", "StageError", "TASKS", "TVDenoiser", "TrainConfig", "TrainingError",
    "add_noise", "apply_denoiser", "build_model", "cg_solve", "deconvolution",
    "gaussian_kernel", "joint_demosaic_deconvolution", "load_model", "make_schedule",
    "operator_for_task", "phi", "phi_derivative", "prox_data", "psnr", "quality_report",
    "run_admm", "save_model", "ssim", "super_resolution", "train_single_shot", "tv_denoise",
]
