"""Exception hierarchy shared by every module of the package."""


class SSPnPError(Exception):
    """Base class for all errors raised by sspnp."""


class DimensionError(SSPnPError, ValueError):
    """Array shapes are incompatible with the requested operation."""


class NumericError(SSPnPError, ArithmeticError):
    """A computation produced NaN or infinite values."""


class ContractError(SSPnPError, RuntimeError):
    """A precondition of an API call was violated by the caller."""


class ConfigError(SSPnPError, ValueError):
    """Invalid configuration or hyperparameter value."""


class TrainingError(SSPnPError, RuntimeError):
    """Denoiser training diverged."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class StageError(SSPnPError, RuntimeError):
    """Wraps an error raised inside one stage of an experiment run."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


class ConvergenceWarning(RuntimeWarning):
    """An iterative solver stopped before reaching its tolerance."""
