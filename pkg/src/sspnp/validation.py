"""Input validation helpers used at every public entry point."""

import numbers

import numpy as np

from .exceptions import ConfigError, DimensionError, NumericError


def check_image(img, name="image", n_channels=None, min_size=1):
    """Return ``img`` as a float64 ``(H, W, C)`` array.

    2-D inputs are promoted to a single channel.  Raises
    :class:`DimensionError` for wrong dimensionality or channel count
    and :class:`NumericError` for non-finite values.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise DimensionError(f"{name} must be HxW or HxWxC, got shape {arr.shape}")
    if min(arr.shape[:2]) < min_size or arr.shape[2] < 1:
        raise DimensionError(f"{name} has shape {arr.shape}, spatial size below {min_size}")
    if n_channels is not None and arr.shape[2] != n_channels:
        raise DimensionError(f"{name} has {arr.shape[2]} channels, expected {n_channels}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite values")
    return arr


def check_same_shape(a, b, names=("a", "b")):
    if a.shape != b.shape:
        raise DimensionError(f"{names[0]} shape {a.shape} != {names[1]} shape {b.shape}")


def check_positive(value, name, strict=True, integer=False):
    if integer and not isinstance(value, numbers.Integral):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ConfigError(f"{name} must be a finite real, got {value!r}")
    if value < 0 or (strict and value == 0):
        bound = "> 0" if strict else ">= 0"
        raise ConfigError(f"{name} must be {bound}, got {value!r}")
    return value


def check_random_state(seed):
    """Turn ``seed`` into a :class:`numpy.random.Generator`."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise ConfigError(f"cannot build a random generator from {seed!r}")
