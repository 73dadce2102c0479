"""Linear forward models and their exact adjoints.

All convolutions are circular (periodic boundary) so that blur operators
are diagonal in the 2-D Fourier basis.  Three operator kinds are provided:

========  ============================  ================================
kind      ``apply(x)``                  ``adjoint(r)``
========  ============================  ================================
deconv    ``k * x``                     ``flip(k) * r``
sr        ``down_s(k * x)``             ``flip(k) * up_s(r)``
joint     ``k * (M . x)``               ``M . (flip(k) * r)``
========  ============================  ================================
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, DimensionError
from .validation import check_image

KINDS = ("deconv", "sr", "joint")
BAYER_PATTERNS = ("RGGB", "BGGR", "GRBG", "GBRG")
_CHANNEL = {"R": 0, "G": 1, "B": 2}
# every 3x3 window of a Bayer mosaic holds at least one sample per channel
_BILINEAR = np.outer([0.25, 0.5, 0.25], [0.25, 0.5, 0.25])


@dataclass(frozen=True, eq=False)
class GaussianKernel:
    size: int
    std: float
    taps: np.ndarray = field(repr=False)

    def __str__(self):
        rows = "\n".join(" ".join(f"{t:.5f}" for t in row) for row in self.taps)
        return f"GaussianKernel(size={self.size}, std={self.std})\n{rows}"


def gaussian_kernel(size, std):
    """Sample an isotropic Gaussian at integer offsets and normalise to sum 1."""
    if not isinstance(size, (int, np.integer)) or size < 1 or size % 2 == 0:
        raise ConfigError(f"kernel size must be a positive odd integer, got {size!r}")
    if std <= 0:
        raise ConfigError(f"kernel std must be positive, got {std!r}")
    r = np.arange(size) - size // 2
    g = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * std * std))
    taps = g / g.sum()
    taps.flags.writeable = False
    return GaussianKernel(int(size), float(std), taps)


def delta_kernel(size=1):
    """Identity kernel: a single unit tap at the centre."""
    if size < 1 or size % 2 == 0:
        raise ConfigError(f"kernel size must be a positive odd integer, got {size!r}")
    taps = np.zeros((size, size))
    taps[size // 2, size // 2] = 1.0
    taps.flags.writeable = False
    return GaussianKernel(int(size), 0.0, taps)


def kernel_otf(kernel, shape):
    """Transfer function of circular convolution with ``kernel`` on ``shape``."""
    h, w = shape
    taps = kernel.taps if isinstance(kernel, GaussianKernel) else np.asarray(kernel)
    if taps.shape[0] > h or taps.shape[1] > w:
        raise DimensionError(f"kernel {taps.shape} larger than image {(h, w)}")
    pad = np.zeros((h, w))
    pad[:taps.shape[0], :taps.shape[1]] = taps
    pad = np.roll(pad, (-(taps.shape[0] // 2), -(taps.shape[1] // 2)), axis=(0, 1))
    return np.fft.fft2(pad)


def _filter(img, otf):
    freq = np.fft.fft2(img, axes=(0, 1)) * otf[:, :, None]
    return np.real(np.fft.ifft2(freq, axes=(0, 1)))


def convolve(img, kernel):
    """Channelwise circular convolution, centred on the kernel's middle tap."""
    img = check_image(img)
    return _filter(img, kernel_otf(kernel, img.shape[:2]))


def correlate(img, kernel):
    """Circular convolution with the 180-degree-rotated kernel (adjoint of :func:`convolve`)."""
    img = check_image(img)
    return _filter(img, np.conj(kernel_otf(kernel, img.shape[:2])))


def _check_scale(s):
    if not isinstance(s, (int, np.integer)) or s < 1:
        raise ConfigError(f"scale must be a positive integer, got {s!r}")


def downsample(img, s):
    """Keep every ``s``-th pixel starting at (0, 0)."""
    _check_scale(s)
    img = check_image(img)
    h, w = img.shape[:2]
    if h % s or w % s:
        raise DimensionError(f"image {h}x{w} not divisible by scale {s}")
    return img[::s, ::s].copy()


def upsample_zero(img, s):
    """Zero-insertion upsampling, the adjoint of :func:`downsample`."""
    _check_scale(s)
    img = check_image(img)
    h, w, c = img.shape
    out = np.zeros((h * s, w * s, c))
    out[::s, ::s] = img
    return out


def bayer_mask(height, width, pattern="RGGB"):
    """Binary ``(H, W, 3)`` CFA mask with the 2x2 ``pattern`` anchored at (0, 0)."""
    if pattern not in BAYER_PATTERNS:
        raise ConfigError(f"unknown Bayer pattern {pattern!r}")
    mask = np.zeros((height, width, 3))
    for idx, letter in enumerate(pattern):
        dy, dx = divmod(idx, 2)
        mask[dy::2, dx::2, _CHANNEL[letter]] = 1.0
    return mask


class ForwardOperator:
    """A linear degradation ``A`` with :meth:`apply` and :meth:`adjoint`.

    Use the factories :func:`deconvolution`, :func:`super_resolution` and
    :func:`joint_demosaic_deconvolution` rather than the constructor.
    """

    def __init__(self, kind, kernel, scale=1, pattern="RGGB"):
        if kind not in KINDS:
            raise ConfigError(f"unknown operator kind {kind!r}; choose from {KINDS}")
        _check_scale(scale)
        if kind != "sr" and scale != 1:
            raise ConfigError(f"scale only applies to 'sr', got scale={scale} for {kind!r}")
        if pattern not in BAYER_PATTERNS:
            raise ConfigError(f"unknown Bayer pattern {pattern!r}")
        self.kind = kind
        self.kernel = kernel
        self.scale = int(scale)
        self.pattern = pattern
        self._otf_cache = {}

    def __repr__(self):
        extra = f", scale={self.scale}" if self.kind == "sr" else ""
        extra += f", pattern={self.pattern!r}" if self.kind == "joint" else ""
        return (f"ForwardOperator({self.kind!r}, kernel=(size={self.kernel.size}, "
                f"std={self.kernel.std}){extra})")

    def otf(self, shape):
        shape = tuple(shape)
        if shape not in self._otf_cache:
            self._otf_cache[shape] = kernel_otf(self.kernel, shape)
        return self._otf_cache[shape]

    def mask(self, shape):
        if self.kind != "joint":
            raise ConfigError(f"operator kind {self.kind!r} has no CFA mask")
        return bayer_mask(shape[0], shape[1], self.pattern)

    def observation_shape(self, shape):
        h, w, c = shape
        if self.kind == "sr":
            if h % self.scale or w % self.scale:
                raise DimensionError(f"image {h}x{w} not divisible by scale {self.scale}")
            return (h // self.scale, w // self.scale, c)
        return (h, w, c)

    def signal_shape(self, obs_shape):
        h, w, c = obs_shape
        if self.kind == "sr":
            return (h * self.scale, w * self.scale, c)
        return (h, w, c)

    def _check_joint_channels(self, arr):
        if self.kind == "joint" and arr.shape[2] != 3:
            raise DimensionError(f"joint operator needs 3 channels, got {arr.shape[2]}")

    def apply(self, x):
        x = check_image(x, "signal")
        self._check_joint_channels(x)
        if self.kind == "joint":
            x = x * self.mask(x.shape)
        out = _filter(x, self.otf(x.shape[:2]))
        if self.kind == "sr":
            out = downsample(out, self.scale)
        return out

    def adjoint(self, r):
        r = check_image(r, "residual")
        self._check_joint_channels(r)
        if self.kind == "sr":
            r = upsample_zero(r, self.scale)
        out = _filter(r, np.conj(self.otf(r.shape[:2])))
        if self.kind == "joint":
            out = out * self.mask(out.shape)
        return out

    def normal(self, x):
        """``A^T A x``."""
        return self.adjoint(self.apply(x))

    def lift(self, y):
        """Map an observation onto the signal grid at the signal's intensity scale.

        Normalised convolution: the observation (zero-filled onto the
        signal grid for ``sr``) is smoothed and divided by the equally
        smoothed sampling density, so missing samples are interpolated and
        partial sampling does not dim the result.  For ``deconv`` this is
        ``y`` itself.
        """
        y = check_image(y, "observation")
        self._check_joint_channels(y)
        if self.kind == "deconv":
            return y.copy()
        if self.kind == "sr":
            num = upsample_zero(y, self.scale)
            density = upsample_zero(np.ones_like(y), self.scale)
            otf = np.conj(self.otf(num.shape[:2]))
        else:
            num = y
            density = _filter(self.mask(y.shape), self.otf(y.shape[:2]))
            otf = kernel_otf(_BILINEAR, y.shape[:2])
        num = _filter(num, otf)
        density = _filter(density, otf)
        return num / np.maximum(density, 1e-12)

    __call__ = apply


def deconvolution(kernel=None):
    return ForwardOperator("deconv", kernel or gaussian_kernel(15, 5.0))


def super_resolution(scale=2, kernel=None):
    return ForwardOperator("sr", kernel or gaussian_kernel(5, 3.0), scale=scale)


def joint_demosaic_deconvolution(kernel=None, pattern="RGGB"):
    return ForwardOperator("joint", kernel or gaussian_kernel(15, 5.0), pattern=pattern)


TASKS = ("deconv", "sr2", "sr4", "joint")


def operator_for_task(task):
    """Operator with the fixed experimental settings of each task name."""
    if task == "deconv":
        return deconvolution(gaussian_kernel(15, 5.0))
    if task in ("sr2", "sr4"):
        return super_resolution(int(task[2]), gaussian_kernel(5, 3.0))
    if task == "joint":
        return joint_demosaic_deconvolution(gaussian_kernel(15, 5.0), "RGGB")
    raise ConfigError(f"unknown task {task!r}; choose from {TASKS}")
