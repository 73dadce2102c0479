"""Single-shot denoiser training on one observed image."""

import csv
import logging
from dataclasses import dataclass, replace

import numpy as np

from . import ndgrad as nd
from .exceptions import ConfigError, NumericError, TrainingError
from .inr import ModelConfig, N_COORDS, build_model, forward_tensor, pixel_features
from .validation import check_image, check_positive, check_random_state

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    noise_std: float = 0.1
    n_iter: int = 100
    lr: float = 1e-3
    seed: int = 0
    resample_noise: bool = True
    log_path: str = None

    def __post_init__(self):
        check_positive(self.noise_std, "noise_std")
        check_positive(self.lr, "lr")
        if not isinstance(self.n_iter, (int, np.integer)) or self.n_iter < 0:
            raise ConfigError(f"n_iter must be a non-negative integer, got {self.n_iter!r}")


def add_noise(img, std, seed=None, clip=True):
    """Add i.i.d. N(0, std^2) noise; clamp to [0, 1] unless ``clip`` is False."""
    check_positive(std, "std")
    img = check_image(img)
    rng = check_random_state(seed)
    out = img + rng.normal(0.0, std, size=img.shape)
    return np.clip(out, 0.0, 1.0) if clip else out


def _write_loss_log(path, losses):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "mse"])
        for i, loss in enumerate(losses):
            writer.writerow([i, repr(loss)])


def train_single_shot(y, cfg=TrainConfig(), model_config=None):
    """Fit a pixelwise INR that maps ``y + noise`` back to ``y``.

    Runs ``cfg.n_iter`` full-image Adam steps on the mean-squared error and
    returns ``(model, losses)``.  ``losses[i]`` is the training loss before
    update ``i``; the last entry is the loss after the final update, so
    ``len(losses) == n_iter + 1``.  The returned model is frozen.
    """
    y = check_image(y, "observation")
    h, w, c = y.shape
    if model_config is None:
        model_config = ModelConfig(in_dim=N_COORDS + c, out_dim=c, seed=cfg.seed)
    elif model_config.in_dim != N_COORDS + c or model_config.out_dim != c:
        model_config = replace(model_config, in_dim=N_COORDS + c, out_dim=c)
    model = build_model(model_config)

    noise_seed = np.random.SeedSequence([cfg.seed, 1])
    rng = np.random.default_rng(noise_seed)
    target = y.reshape(h * w, c)
    params = []
    for wt, b in zip(model.weights, model.biases):
        params += [nd.Tensor(wt, requires_grad=True), nd.Tensor(b, requires_grad=True)]
    state = nd.AdamState(lr=cfg.lr)

    def loss_at(features):
        out = forward_tensor(params, nd.Tensor(features), model.activation)
        return nd.mean(nd.square(nd.sub(out, target)))

    fixed = add_noise(y, cfg.noise_std, rng)
    losses = []
    for i in range(cfg.n_iter + 1):
        noisy = add_noise(y, cfg.noise_std, rng) if cfg.resample_noise and i else fixed
        try:
            loss = loss_at(pixel_features(noisy))
            losses.append(loss.item())
            if i == cfg.n_iter:
                break
            nd.backward(loss)
            with np.errstate(over="ignore", invalid="ignore"):
                nd.adam_step(state, params)
        except NumericError as err:
            raise TrainingError(f"non-finite value at iteration {i}: {err}", iteration=i) from err
        if i % 25 == 0:
            logger.debug("iteration %d mse %.6g", i, losses[-1])

    model.weights = [params[2 * k].numpy() for k in range(len(model.weights))]
    model.biases = [params[2 * k + 1].numpy() for k in range(len(model.biases))]
    if cfg.log_path:
        _write_loss_log(cfg.log_path, losses)
    return model.freeze(), losses
