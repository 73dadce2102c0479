"""Implicit-neural-representation denoiser.

The network maps per-pixel features ``[px, py, c_1 .. c_C]`` (normalised
coordinates in [-1, 1] followed by the pixel's channel values) to denoised
channel values.  Hidden layers use one of three activations:

* ``phi``  -- Gabor-plus-sigmoid unit
  ``exp(-(a1 x + b1)^2) sin(a2 x + b2) + 1 / (exp(-(a1 x + b1)) + 1)``,
* ``sine`` -- SIREN baseline (frequency ``first_omega`` on the first layer),
* ``relu``.

The output layer is linear; :func:`apply_denoiser` clamps to [0, 1].
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import ndgrad as nd
from .exceptions import ConfigError, DimensionError
from .validation import check_image, check_random_state

ACTIVATIONS = ("phi", "sine", "relu")
N_COORDS = 2
_CHUNK = 1 << 16


@dataclass(frozen=True)
class ActivationParams:
    kind: str = "phi"
    a1: float = 1.0
    b1: float = 0.0
    a2: float = 1.0
    b2: float = 0.0
    first_omega: float = 30.0

    def __post_init__(self):
        if self.kind not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.kind!r}; choose from {ACTIVATIONS}")
        if self.kind == "phi" and (self.a1 == 0 or self.a2 == 0):
            raise ConfigError("phi activation needs a1 != 0 and a2 != 0")
        if self.kind == "sine" and self.first_omega <= 0:
            raise ConfigError("first_omega must be positive")


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def phi(x, p=ActivationParams()):
    """Evaluate the Gabor-plus-sigmoid activation elementwise."""
    if p.kind != "phi":
        raise ConfigError(f"phi() called with activation kind {p.kind!r}")
    x = np.asarray(x, dtype=np.float64)
    u = p.a1 * x + p.b1
    return np.exp(-u * u) * np.sin(p.a2 * x + p.b2) + _sigmoid(u)


def phi_derivative(x, p=ActivationParams()):
    """Closed-form derivative of :func:`phi` with respect to ``x``."""
    if p.kind != "phi":
        raise ConfigError(f"phi_derivative() called with activation kind {p.kind!r}")
    x = np.asarray(x, dtype=np.float64)
    u = p.a1 * x + p.b1
    w = p.a2 * x + p.b2
    g = np.exp(-u * u)
    s = _sigmoid(u)
    return -2.0 * p.a1 * u * g * np.sin(w) + p.a2 * g * np.cos(w) + p.a1 * s * (1.0 - s)


def _phi_tensor(z, p):
    u = nd.add(nd.mul(z, p.a1), p.b1)
    gabor = nd.mul(nd.exp(nd.negate(nd.square(u))), nd.sin(nd.add(nd.mul(z, p.a2), p.b2)))
    return nd.add(gabor, nd.sigmoid(u))


def activate(z, p, layer_index):
    """Hidden-layer nonlinearity on a :class:`~sspnp.ndgrad.Tensor`."""
    if p.kind == "phi":
        return _phi_tensor(z, p)
    if p.kind == "sine":
        omega = p.first_omega if layer_index == 0 else 1.0
        return nd.sin(nd.mul(z, omega))
    return nd.relu(z)


def activate_array(z, p, layer_index):
    """Same as :func:`activate` on plain arrays, without graph bookkeeping."""
    if p.kind == "phi":
        return phi(z, p)
    if p.kind == "sine":
        omega = p.first_omega if layer_index == 0 else 1.0
        return np.sin(omega * z)
    return np.maximum(z, 0.0)


@dataclass(frozen=True)
class ModelConfig:
    in_dim: int = 5
    hidden_dim: int = 64
    depth: int = 2
    out_dim: int = 3
    activation: ActivationParams = field(default_factory=ActivationParams)
    seed: int = 0

    def __post_init__(self):
        for name in ("in_dim", "hidden_dim", "out_dim"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.depth, (int, np.integer)) or self.depth < 0:
            raise ConfigError(f"depth must be a non-negative integer, got {self.depth!r}")


@dataclass
class DenoiserModel:
    """Weights ``(fan_in, fan_out)`` and biases of an MLP, plus its activation."""

    weights: list
    biases: list
    activation: ActivationParams

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise DimensionError("need one bias per weight matrix and at least one layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DimensionError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i and self.weights[i - 1].shape[1] != w.shape[0]:
                raise DimensionError(f"layer {i} input {w.shape[0]} != previous output "
                                     f"{self.weights[i - 1].shape[1]}")

    @property
    def in_dim(self):
        return self.weights[0].shape[0]

    @property
    def out_dim(self):
        return self.weights[-1].shape[1]

    @property
    def depth(self):
        return len(self.weights) - 1

    @property
    def hidden_dim(self):
        return self.weights[0].shape[1] if self.depth else 0

    @property
    def n_channels(self):
        return self.out_dim

    @property
    def layer_shapes(self):
        return [w.shape for w in self.weights]

    def freeze(self):
        """Make every weight array read-only; returns ``self``."""
        for arr in (*self.weights, *self.biases):
            arr.flags.writeable = False
        return self

    def checksum(self):
        h = hashlib.sha256()
        h.update(repr(self.activation).encode())
        for arr in (*self.weights, *self.biases):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def copy(self):
        return DenoiserModel([w.copy() for w in self.weights],
                             [b.copy() for b in self.biases], self.activation)


def _init_bounds(config):
    """Per-layer uniform init half-widths."""
    dims = [config.in_dim] + [config.hidden_dim] * config.depth + [config.out_dim]
    bounds = []
    for i, fan_in in enumerate(dims[:-1]):
        if config.activation.kind == "sine":
            # SIREN init with the frequency folded into hidden weights
            if i == 0:
                bound = 1.0 / fan_in
            elif i < len(dims) - 2:
                bound = np.sqrt(6.0 / fan_in)
            else:
                bound = np.sqrt(6.0 / fan_in) / config.activation.first_omega
        else:
            bound = np.sqrt(1.0 / fan_in)
        bounds.append(bound)
    return dims, bounds


def build_model(config=ModelConfig()):
    """Initialise an MLP from ``config`` with a seeded RNG and zero biases."""
    rng = check_random_state(config.seed)
    dims, bounds = _init_bounds(config)
    weights, biases = [], []
    for fan_in, fan_out, bound in zip(dims[:-1], dims[1:], bounds):
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return DenoiserModel(weights, biases, config.activation)


def pixel_coordinates(height, width):
    """``(H*W, 2)`` array of ``(px, py)`` in [-1, 1], row-major over pixels."""
    px = np.linspace(-1.0, 1.0, width) if width > 1 else np.zeros(1)
    py = np.linspace(-1.0, 1.0, height) if height > 1 else np.zeros(1)
    gx, gy = np.meshgrid(px, py)
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def pixel_features(img):
    """Stack coordinates and channel values into an ``(H*W, 2 + C)`` matrix."""
    img = check_image(img)
    h, w, c = img.shape
    return np.concatenate([pixel_coordinates(h, w), img.reshape(h * w, c)], axis=1)


def forward_tensor(params, features, activation):
    """Graph-building forward pass; ``params`` alternates weight, bias tensors."""
    out = features
    n_layers = len(params) // 2
    for i in range(n_layers):
        out = nd.add(nd.matmul(out, params[2 * i]), params[2 * i + 1])
        if i < n_layers - 1:
            out = activate(out, activation, i)
    return out


def evaluate(model, features):
    """Raw (unclamped) network output for each feature row."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.in_dim:
        raise DimensionError(f"features shape {features.shape} does not match model "
                             f"input dim {model.in_dim}")
    out = np.empty((features.shape[0], model.out_dim))
    last = len(model.weights) - 1
    for start in range(0, features.shape[0], _CHUNK):
        z = features[start:start + _CHUNK]
        for i, (w, b) in enumerate(zip(model.weights, model.biases)):
            z = z @ w + b
            if i < last:
                z = activate_array(z, model.activation, i)
        out[start:start + _CHUNK] = z
    return out


def apply_denoiser(model, img):
    """Run the denoiser pixelwise over ``img`` and clamp to [0, 1]."""
    img = check_image(img, "denoiser input")
    h, w, c = img.shape
    if c != model.out_dim or model.in_dim != N_COORDS + c:
        raise DimensionError(f"image has {c} channels; model maps {model.in_dim} -> "
                             f"{model.out_dim}")
    out = evaluate(model, pixel_features(img))
    return np.clip(out, 0.0, 1.0).reshape(h, w, c)


# -- serialization ----------------------------------------------------------

_FORMAT = "sspnp-inr-v1"


def save_model(model, path):
    """Write ``model`` to an ``.npz`` archive; floats are stored bit-exactly."""
    a = model.activation
    arrays = {
        "format": np.array(_FORMAT),
        "kind": np.array(a.kind),
        "activation": np.array([a.a1, a.b1, a.a2, a.b2, a.first_omega]),
        "dims": np.array([model.in_dim, model.hidden_dim, model.depth, model.out_dim]),
    }
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"w{i}"] = np.ascontiguousarray(w)
        arrays[f"b{i}"] = np.ascontiguousarray(b)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path):
    with np.load(path, allow_pickle=False) as data:
        if "format" not in data or str(data["format"]) != _FORMAT:
            raise ConfigError(f"{path}: not an {_FORMAT} model file")
        a1, b1, a2, b2, omega = (float(v) for v in data["activation"])
        activation = ActivationParams(str(data["kind"]), a1, b1, a2, b2, omega)
        depth = int(data["dims"][2])
        weights = [data[f"w{i}"].copy() for i in range(depth + 1)]
        biases = [data[f"b{i}"].copy() for i in range(depth + 1)]
    return DenoiserModel(weights, biases, activation)
