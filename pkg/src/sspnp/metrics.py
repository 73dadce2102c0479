"""PSNR and SSIM for images with values in [0, 1]."""

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .exceptions import DimensionError
from .validation import check_image, check_same_shape

PSNR_CEILING = 100.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(a, b, peak=1.0):
    """``10 log10(peak^2 / MSE)``; identical images give :data:`PSNR_CEILING`."""
    a, b = check_image(a, "a"), check_image(b, "b")
    check_same_shape(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CEILING
    return min(PSNR_CEILING, 10.0 * np.log10(peak * peak / mse))


def _window():
    r = np.arange(SSIM_WINDOW) - SSIM_WINDOW // 2
    g = np.exp(-(r ** 2) / (2.0 * SSIM_SIGMA ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def _local_mean(x, win):
    return fftconvolve(x, win, mode="valid")


def ssim_map(a, b, data_range=1.0):
    """Local SSIM of two single-channel images over the valid window area."""
    win = _window()
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    mu_a = _local_mean(a, win)
    mu_b = _local_mean(b, win)
    var_a = _local_mean(a * a, win) - mu_a * mu_a
    var_b = _local_mean(b * b, win) - mu_b * mu_b
    cov = _local_mean(a * b, win) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim_per_channel(a, b, data_range=1.0):
    a, b = check_image(a, "a"), check_image(b, "b")
    check_same_shape(a, b)
    if min(a.shape[:2]) < SSIM_WINDOW:
        raise DimensionError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, "
                             f"got {a.shape[:2]}")
    out = []
    for ch in range(a.shape[2]):
        if np.array_equal(a[:, :, ch], b[:, :, ch]):
            out.append(1.0)
        else:
            out.append(float(np.mean(ssim_map(a[:, :, ch], b[:, :, ch], data_range))))
    return out


def ssim(a, b, data_range=1.0):
    """Mean SSIM (11x11 Gaussian window, sigma 1.5) averaged over channels."""
    return float(np.mean(ssim_per_channel(a, b, data_range)))


@dataclass(frozen=True)
class QualityReport:
    psnr_db: float
    ssim: float
    per_channel: dict = field(default_factory=dict)

    def as_dict(self):
        return {"psnr": self.psnr_db, "ssim": self.ssim, "per_channel": self.per_channel}


def quality_report(estimate, reference):
    estimate = check_image(estimate, "estimate")
    reference = check_image(reference, "reference")
    check_same_shape(estimate, reference, ("estimate", "reference"))
    per_psnr = [psnr(estimate[:, :, c], reference[:, :, c]) for c in range(estimate.shape[2])]
    per_ssim = ssim_per_channel(estimate, reference)
    return QualityReport(psnr(estimate, reference), float(np.mean(per_ssim)),
                         {"psnr": per_psnr, "ssim": per_ssim})
