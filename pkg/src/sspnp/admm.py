"""Plug-and-play ADMM with a frozen denoiser as the prior step.

One iteration, with ``H`` the denoiser and ``P`` the data-fidelity prox::

    e <- H(z - x)
    z <- P(e + x; delta = 1 / mu_k)
    x <- x + e - z

``x`` acts as the (negated, scaled) dual variable and ``z`` as the
data-consistent estimate.
"""

import csv
import logging
import time
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import ConfigError, NumericError
from .inr import DenoiserModel, apply_denoiser
from .metrics import psnr, ssim
from .prox import ProxConfig, prox_data
from .validation import check_image, check_random_state

logger = logging.getLogger(__name__)

SIGMA_HI = 35.0 / 255.0
SIGMA_LO = 30.0 / 255.0
DEFAULT_MU_BASE = 1e-4
INIT_MODES = ("adjoint", "lift", "random")
DUAL_INIT_MODES = ("zero", "adjoint")


@dataclass(frozen=True)
class AdmmSchedule:
    sigma: tuple
    mu: tuple

    def __post_init__(self):
        if len(self.sigma) != len(self.mu) or not self.sigma:
            raise ConfigError("sigma and mu must be non-empty and of equal length")

    @property
    def n_iter(self):
        return len(self.sigma)


def make_schedule(n_iter=5, sigma_hi=SIGMA_HI, sigma_lo=SIGMA_LO, mu_base=DEFAULT_MU_BASE):
    """Log-spaced noise levels from ``sigma_hi`` to ``sigma_lo``.

    ``mu_k = mu_base * (sigma_hi / sigma_k)^2``: the penalty grows as the
    denoising strength drops, pulling ``z`` closer to the denoised iterate.
    The data prox uses weight ``1 / mu_k``.
    """
    if not isinstance(n_iter, (int, np.integer)) or n_iter < 1:
        raise ConfigError(f"n_iter must be a positive integer, got {n_iter!r}")
    if not sigma_hi >= sigma_lo > 0:
        raise ConfigError(f"need sigma_hi >= sigma_lo > 0, got {sigma_hi!r}, {sigma_lo!r}")
    if not mu_base > 0:
        raise ConfigError(f"mu_base must be positive, got {mu_base!r}")
    if n_iter == 1:
        sigma = np.array([sigma_hi])
    else:
        t = np.arange(n_iter) / (n_iter - 1)
        sigma = np.exp((1 - t) * np.log(sigma_hi) + t * np.log(sigma_lo))
    mu = mu_base * (sigma_hi / sigma) ** 2
    return AdmmSchedule(tuple(float(s) for s in sigma), tuple(float(m) for m in mu))


@dataclass
class IterationRecord:
    k: int
    sigma_k: float
    mu_k: float
    psnr: float
    ssim: float
    data_residual: float
    timestamp: float


HISTORY_COLUMNS = ("k", "sigma_k", "mu_k", "psnr", "ssim", "data_residual")


def write_history(history, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_COLUMNS)
        for rec in history:
            row = asdict(rec)
            writer.writerow([row[c] if row[c] is not None else "" for c in HISTORY_COLUMNS])


def as_denoiser(prior):
    """Normalise a prior into an image -> image callable."""
    if isinstance(prior, DenoiserModel):
        return lambda img: apply_denoiser(prior, img)
    if hasattr(prior, "transform"):
        return prior.transform
    if callable(prior):
        return prior
    raise ConfigError(f"cannot use {type(prior).__name__} as a denoiser")


def _check_finite(arr, name, k):
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values in {name} at iteration {k}")


def run_admm(y, op, prior, schedule=None, prox_config=ProxConfig(), reference=None,
             init="adjoint", dual_init="zero", return_z=True, random_state=None,
             callback=None):
    """Solve ``y = A x`` with the denoiser ``prior`` as regulariser.

    Parameters
    ----------
    y : array (h, w, c)
        Observation in the range of ``op``.
    op : ForwardOperator
    prior : DenoiserModel, estimator with ``transform``, or callable
        Applied to ``z - x`` each iteration; never modified.
    schedule : AdmmSchedule, optional
        Defaults to :func:`make_schedule()`.
    reference : array, optional
        Clean image; enables PSNR/SSIM in the history.
    init : {"adjoint", "lift", "random"}
        ``z`` starts at ``A^T y``, at ``op.lift(y)``, or at uniform noise
        in [0, 1].
    dual_init : {"zero", "adjoint"}
        ``x`` starts at zero or at ``A^T y``.
    return_z : bool
        Return ``z^K`` (data-consistent estimate) instead of ``x^K``.
    callback : callable, optional
        Called as ``callback(k, x_prev, e, z, x)`` after every iteration.

    Returns
    -------
    estimate : array
    history : list of IterationRecord
    """
    y = check_image(y, "observation")
    schedule = schedule or make_schedule()
    if init not in INIT_MODES:
        raise ConfigError(f"init must be one of {INIT_MODES}, got {init!r}")
    if dual_init not in DUAL_INIT_MODES:
        raise ConfigError(f"dual_init must be one of {DUAL_INIT_MODES}, got {dual_init!r}")
    denoise = as_denoiser(prior)
    if reference is not None:
        reference = check_image(reference, "reference")

    x_adj = op.adjoint(y)
    if init == "adjoint":
        z = x_adj.copy()
    elif init == "lift":
        z = op.lift(y)
    else:
        z = check_random_state(random_state).uniform(0.0, 1.0, size=x_adj.shape)
    x = x_adj.copy() if dual_init == "adjoint" else np.zeros_like(x_adj)

    history = []
    for k in range(schedule.n_iter):
        mu = schedule.mu[k]
        e = np.asarray(denoise(z - x), dtype=np.float64)
        _check_finite(e, "e", k)
        z = prox_data(e + x, y, op, 1.0 / mu, prox_config)
        _check_finite(z, "z", k)
        x_prev = x
        x = x + e - z
        _check_finite(x, "x", k)
        est = z if return_z else x
        residual = float(np.linalg.norm(op.apply(est) - y) / max(np.linalg.norm(y), 1e-300))
        rec = IterationRecord(
            k=k, sigma_k=schedule.sigma[k], mu_k=mu,
            psnr=psnr(est, reference) if reference is not None else None,
            ssim=ssim(est, reference) if reference is not None else None,
            data_residual=residual, timestamp=time.monotonic(),
        )
        history.append(rec)
        logger.info("admm k=%d mu=%.4g residual=%.3e psnr=%s", k, mu, residual, rec.psnr)
        if callback is not None:
            callback(k, x_prev, e, z, x)
    return (z if return_z else x), history
