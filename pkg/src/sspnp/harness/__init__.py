"""Image I/O, configuration, experiment runs and the command-line interface."""

from .config import ExperimentConfig, PRIORS, load_config
from .experiment import AblationTable, RunRecord, ablate, degrade, run_experiment
from .images import builtin_images, load_image, resize_image, save_image

__all__ = [
    "AblationTable", "ExperimentConfig", "PRIORS", "RunRecord", "ablate", "builtin_images",
    "degrade", "load_config", "load_image", "resize_image", "run_experiment", "save_image",
]
