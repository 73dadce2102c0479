"""Image loading and saving.

PNG (8/16-bit, gray or colour), PPM/PGM and raw ``.npy`` arrays are
supported.  Pixel values are scaled to [0, 1] on load.  ``.npy`` files
round-trip bit-exactly; the image formats quantise to their bit depth.
"""

import os
from importlib import resources

import cv2
import numpy as np

from ..exceptions import DimensionError
from ..validation import check_image

IMAGE_SUFFIXES = (".png", ".ppm", ".pgm", ".pnm")
BUILTIN_PREFIX = "builtin:"


def builtin_images():
    root = resources.files("sspnp") / "data"
    return sorted(p.name.rsplit(".", 1)[0] for p in root.iterdir() if p.name.endswith(".png"))


def _resolve(path):
    path = os.fspath(path)
    if path.startswith(BUILTIN_PREFIX):
        name = path[len(BUILTIN_PREFIX):]
        res = resources.files("sspnp") / "data" / f"{name}.png"
        if not res.is_file():
            raise FileNotFoundError(f"no bundled image named {name!r}; "
                                    f"available: {', '.join(builtin_images())}")
        return str(res)
    return path


def load_image(path, resize=None):
    """Read an image as a float64 ``(H, W, C)`` array in [0, 1].

    ``resize`` is an optional ``(width, height)`` target (area
    interpolation when shrinking, cubic otherwise).  Paths of the form
    ``builtin:<name>`` load one of the bundled test images.
    """
    path = _resolve(path)
    if path.endswith(".npy"):
        try:
            img = check_image(np.load(path, allow_pickle=False), path)
        except (OSError, ValueError) as err:
            raise OSError(f"cannot read array file {path}: {err}") from err
    else:
        raw = cv2.imread(path, cv2.IMREAD_UNCHANGED)
        if raw is None:
            raise OSError(f"cannot read image file {path} (missing, truncated or unsupported)")
        if raw.dtype == np.uint8:
            scale = 255.0
        elif raw.dtype == np.uint16:
            scale = 65535.0
        else:
            raise OSError(f"{path}: unsupported pixel type {raw.dtype}")
        if raw.ndim == 3:
            if raw.shape[2] == 4:
                raw = raw[:, :, :3]
            raw = raw[:, :, ::-1]
        img = check_image(raw.astype(np.float64) / scale, path)
    if resize is not None:
        img = resize_image(img, resize)
    return img


def resize_image(img, size):
    """Resize to ``size = (width, height)``; values are clipped to [0, 1]."""
    img = check_image(img)
    width, height = (int(v) for v in size)
    if width < 1 or height < 1:
        raise DimensionError(f"invalid resize target {size}")
    shrink = width < img.shape[1] or height < img.shape[0]
    interp = cv2.INTER_AREA if shrink else cv2.INTER_CUBIC
    out = cv2.resize(img, (width, height), interpolation=interp)
    if out.ndim == 2:
        out = out[:, :, None]
    return np.clip(out, 0.0, 1.0)


def save_image(img, path, bit_depth=8):
    """Write ``img`` (clipped to [0, 1]) as PNG/PPM, or exactly as ``.npy``."""
    img = check_image(img)
    path = os.fspath(path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    if path.endswith(".npy"):
        np.save(path, img)
        return path
    if bit_depth not in (8, 16):
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    peak, dtype = (255.0, np.uint8) if bit_depth == 8 else (65535.0, np.uint16)
    q = np.round(np.clip(img, 0.0, 1.0) * peak).astype(dtype)
    if q.shape[2] == 1:
        q = q[:, :, 0]
    elif q.shape[2] == 3:
        q = np.ascontiguousarray(q[:, :, ::-1])
    else:
        raise DimensionError(f"cannot encode {q.shape[2]} channels as an image file")
    if not cv2.imwrite(path, q):
        raise OSError(f"cannot write image file {path}")
    return path
