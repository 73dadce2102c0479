"""Experiment configuration: a flat ``key = value`` text format.

Example file::

    # deconvolution of a bundled crop
    task = deconv
    input = builtin:chelsea128
    prior = phi-inr
    train_iters = 100
    seed = 0

Unknown keys are rejected.  Every field of :class:`ExperimentConfig` is a
valid key; command-line options override file values.
"""

import dataclasses
import json
from dataclasses import dataclass, fields

from ..admm import DEFAULT_MU_BASE, DUAL_INIT_MODES, INIT_MODES, SIGMA_HI, SIGMA_LO
from ..exceptions import ConfigError
from ..inr import ActivationParams, ModelConfig, N_COORDS
from ..operators import TASKS, operator_for_task
from ..prox import PROX_METHODS, ProxConfig
from ..training import TrainConfig

PRIORS = ("phi-inr", "siren-inr", "tv")
TRAIN_SOURCES = ("lift", "observation")
_PRIOR_ACTIVATION = {"phi-inr": "phi", "siren-inr": "sine"}


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "deconv"
    input: str = None
    observation: str = None
    reference: str = None
    out: str = "runs/latest"
    prior: str = "phi-inr"
    seed: int = 0
    resize: str = None
    measurement_noise: float = 0.0
    # single-shot training
    noise_std: float = 0.1
    train_iters: int = 100
    lr: float = 1e-3
    resample_noise: bool = True
    train_on: str = "lift"
    hidden_dim: int = 64
    depth: int = 2
    a1: float = 1.0
    b1: float = 0.0
    a2: float = 1.0
    b2: float = 0.0
    siren_omega: float = 30.0
    # ADMM
    admm_iters: int = 5
    sigma_hi: float = SIGMA_HI
    sigma_lo: float = SIGMA_LO
    mu_base: float = DEFAULT_MU_BASE
    init: str = "adjoint"
    dual_init: str = "zero"
    return_z: bool = True
    # data prox
    prox_method: str = "auto"
    cg_tol: float = 1e-6
    cg_max_iter: int = 300
    # TV baseline
    tv_weight: float = 0.1
    tv_iters: int = 20

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.prior not in PRIORS:
            raise ConfigError(f"prior must be one of {PRIORS}, got {self.prior!r}")
        if self.train_on not in TRAIN_SOURCES:
            raise ConfigError(f"train_on must be one of {TRAIN_SOURCES}, got {self.train_on!r}")
        if self.init not in INIT_MODES:
            raise ConfigError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        if self.dual_init not in DUAL_INIT_MODES:
            raise ConfigError(f"dual_init must be one of {DUAL_INIT_MODES}")
        if self.prox_method not in PROX_METHODS:
            raise ConfigError(f"prox_method must be one of {PROX_METHODS}")
        if self.measurement_noise < 0:
            raise ConfigError("measurement_noise must be >= 0")
        if self.resize is not None:
            self.resize_shape  # validates

    @property
    def resize_shape(self):
        """``(width, height)`` parsed from ``resize = WxH``, or None."""
        if self.resize is None:
            return None
        try:
            w, h = (int(v) for v in str(self.resize).lower().split("x"))
        except ValueError:
            raise ConfigError(f"resize must look like 512x384, got {self.resize!r}") from None
        return (w, h)

    def operator(self):
        return operator_for_task(self.task)

    def train_config(self, log_path=None):
        return TrainConfig(noise_std=self.noise_std, n_iter=self.train_iters, lr=self.lr,
                           seed=self.seed, resample_noise=self.resample_noise,
                           log_path=log_path)

    def activation(self):
        if self.prior == "tv":
            return None
        kind = _PRIOR_ACTIVATION[self.prior]
        return ActivationParams(kind, self.a1, self.b1, self.a2, self.b2, self.siren_omega)

    def model_config(self, n_channels=3):
        return ModelConfig(in_dim=N_COORDS + n_channels, hidden_dim=self.hidden_dim,
                           depth=self.depth, out_dim=n_channels,
                           activation=self.activation(), seed=self.seed)

    def prox_config(self):
        return ProxConfig(self.prox_method, self.cg_tol, self.cg_max_iter)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def as_dict(self):
        return dataclasses.asdict(self)

    def to_text(self):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is not None:
                lines.append(f"{f.name} = {_format(value)}")
        return "\n".join(lines) + "\n"


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _field_types():
    hints = {}
    for f in fields(ExperimentConfig):
        default = f.default
        hints[f.name] = type(default) if default is not None else str
    return hints


def coerce(key, raw):
    """Convert the string ``raw`` to the type of config field ``key``."""
    types = _field_types()
    if key not in types:
        raise ConfigError(f"unknown config key {key!r}")
    kind = types[key]
    if raw is None:
        return None
    if isinstance(raw, str) and raw.strip().lower() in ("none", ""):
        return None
    if isinstance(raw, kind) and not (kind is int and isinstance(raw, bool)):
        return raw.strip() if isinstance(raw, str) else raw
    text = str(raw).strip()
    try:
        if kind is bool:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            if "/" in text:
                num, den = text.split("/")
                return float(num) / float(den)
            return float(text)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {kind.__name__}") from None
    return text


def parse_config_text(text):
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        values[key] = coerce(key, raw)
    return values


def load_config(path=None, **overrides):
    """Build a config from an optional file plus keyword overrides (None = unset).

    ``path`` is a ``key = value`` text file or a run's ``manifest.json``.
    """
    values = {}
    if path is not None:
        with open(path) as fh:
            text = fh.read()
        if str(path).endswith(".json"):
            try:
                stored = json.loads(text)["config"]
            except (ValueError, KeyError, TypeError):
                raise ConfigError(f"{path}: not a run manifest") from None
            values.update({k: coerce(k, v) for k, v in stored.items()})
        else:
            values.update(parse_config_text(text))
    for key, value in overrides.items():
        if value is not None:
            values[key] = coerce(key, value)
    return ExperimentConfig(**values)
