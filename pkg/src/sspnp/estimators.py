"""scikit-learn style estimators wrapping the training and ADMM stages.

``X`` is always a single image of shape ``(H, W, C)``, not a sample
matrix: the whole method works from one observation.

>>> from sspnp import SingleShotPnP, INRDenoiser, operator_for_task
>>> pnp = SingleShotPnP(operator_for_task("deconv"), INRDenoiser(n_iter=10))
>>> estimate = pnp.fit(y).predict(y)            # doctest: +SKIP
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin, clone
from sklearn.utils.validation import check_is_fitted

from .admm import DEFAULT_MU_BASE, SIGMA_HI, SIGMA_LO, make_schedule, run_admm
from .exceptions import ConfigError
from .inr import ActivationParams, ModelConfig, N_COORDS, apply_denoiser
from .metrics import psnr
from .operators import deconvolution
from .prox import ProxConfig, tv_denoise
from .training import TrainConfig, train_single_shot
from .validation import check_image


def _seed(random_state):
    if random_state is None:
        return int(np.random.default_rng().integers(2**31))
    if isinstance(random_state, (int, np.integer)):
        return int(random_state)
    raise ConfigError(f"random_state must be an int or None, got {random_state!r}")


class INRDenoiser(TransformerMixin, BaseEstimator):
    """Pixelwise implicit-neural-representation denoiser trained on one image.

    ``fit(X)`` trains on ``X + N(0, noise_std^2)`` with ``X`` as target;
    ``transform(X)`` denoises any image with the same channel count.
    """

    def __init__(self, activation="phi", a1=1.0, b1=0.0, a2=1.0, b2=0.0, first_omega=30.0,
                 hidden_dim=64, depth=2, noise_std=0.1, n_iter=100, lr=1e-3,
                 resample_noise=True, random_state=0, loss_log=None):
        self.activation = activation
        self.a1 = a1
        self.b1 = b1
        self.a2 = a2
        self.b2 = b2
        self.first_omega = first_omega
        self.hidden_dim = hidden_dim
        self.depth = depth
        self.noise_std = noise_std
        self.n_iter = n_iter
        self.lr = lr
        self.resample_noise = resample_noise
        self.random_state = random_state
        self.loss_log = loss_log

    def fit(self, X, y=None):
        X = check_image(X)
        seed = _seed(self.random_state)
        act = ActivationParams(self.activation, self.a1, self.b1, self.a2, self.b2,
                               self.first_omega)
        model_cfg = ModelConfig(N_COORDS + X.shape[2], self.hidden_dim, self.depth,
                                X.shape[2], act, seed)
        train_cfg = TrainConfig(self.noise_std, self.n_iter, self.lr, seed,
                                self.resample_noise, self.loss_log)
        self.model_, self.loss_curve_ = train_single_shot(X, train_cfg, model_cfg)
        self.n_channels_ = X.shape[2]
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return apply_denoiser(self.model_, X)

    @classmethod
    def from_model(cls, model):
        """Wrap an already-trained :class:`~sspnp.inr.DenoiserModel`."""
        a = model.activation
        est = cls(activation=a.kind, a1=a.a1, b1=a.b1, a2=a.a2, b2=a.b2,
                  first_omega=a.first_omega, hidden_dim=model.hidden_dim, depth=model.depth)
        est.model_ = model
        est.loss_curve_ = []
        est.n_channels_ = model.out_dim
        return est


class TVDenoiser(TransformerMixin, BaseEstimator):
    """Total-variation denoiser; ``fit`` learns nothing."""

    def __init__(self, weight=0.1, n_iter=20):
        self.weight = weight
        self.n_iter = n_iter

    def fit(self, X, y=None):
        self.n_channels_ = check_image(X).shape[2]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_channels_")
        return tv_denoise(X, self.weight, self.n_iter)


class SingleShotPnP(BaseEstimator):
    """Train a denoiser on one observation, then run PnP-ADMM with it frozen.

    Parameters
    ----------
    operator : ForwardOperator, optional
        Degradation ``A``; defaults to the 15x15, std 5 Gaussian blur.
    denoiser : estimator, optional
        Any transformer with ``fit``/``transform``; defaults to
        :class:`INRDenoiser`.  It is cloned before fitting.
    train_on : {"lift", "observation"}
        Train the denoiser on ``operator.lift(y)`` (the observation placed on
        the reconstruction grid at full intensity) or on ``y`` directly.
    n_iter, sigma_hi, sigma_lo, mu_base
        ADMM schedule, see :func:`~sspnp.admm.make_schedule`.
    init, dual_init, return_z
        Passed to :func:`~sspnp.admm.run_admm`.

    Attributes
    ----------
    denoiser_ : fitted denoiser
    history_ : list of IterationRecord from the last :meth:`predict`
    """

    def __init__(self, operator=None, denoiser=None, train_on="lift", n_iter=5,
                 sigma_hi=SIGMA_HI, sigma_lo=SIGMA_LO, mu_base=DEFAULT_MU_BASE,
                 prox_method="auto", cg_tol=1e-6, cg_max_iter=300, init="adjoint",
                 dual_init="zero", return_z=True, random_state=0):
        self.operator = operator
        self.denoiser = denoiser
        self.train_on = train_on
        self.n_iter = n_iter
        self.sigma_hi = sigma_hi
        self.sigma_lo = sigma_lo
        self.mu_base = mu_base
        self.prox_method = prox_method
        self.cg_tol = cg_tol
        self.cg_max_iter = cg_max_iter
        self.init = init
        self.dual_init = dual_init
        self.return_z = return_z
        self.random_state = random_state

    def _operator(self):
        return self.operator if self.operator is not None else deconvolution()

    def fit(self, X, y=None):
        """Step 1: train the denoiser on the observation ``X``."""
        X = check_image(X, "observation")
        op = self._operator()
        if self.train_on == "lift":
            train_img = op.lift(X)
        elif self.train_on == "observation":
            train_img = X
        else:
            raise ConfigError(f"train_on must be 'lift' or 'observation', got {self.train_on!r}")
        den = clone(self.denoiser) if self.denoiser is not None else INRDenoiser(
            random_state=self.random_state)
        self.denoiser_ = den.fit(train_img)
        self.operator_ = op
        return self

    def use_fitted(self, denoiser):
        """Skip training and solve with an already-fitted ``denoiser``."""
        if not hasattr(denoiser, "transform"):
            raise ConfigError(f"{type(denoiser).__name__} has no transform method")
        self.denoiser_ = denoiser
        self.operator_ = self._operator()
        return self

    def schedule(self):
        return make_schedule(self.n_iter, self.sigma_hi, self.sigma_lo, self.mu_base)

    def predict(self, X, reference=None, callback=None):
        """Step 2: reconstruct from observation ``X`` with the frozen denoiser."""
        check_is_fitted(self, "denoiser_")
        estimate, self.history_ = run_admm(
            X, self.operator_, self.denoiser_, self.schedule(),
            ProxConfig(self.prox_method, self.cg_tol, self.cg_max_iter),
            reference=reference, init=self.init, dual_init=self.dual_init,
            return_z=self.return_z, random_state=self.random_state, callback=callback,
        )
        return estimate

    def fit_predict(self, X, reference=None):
        return self.fit(X).predict(X, reference=reference)

    def score(self, X, y):
        """PSNR of the reconstruction from observation ``X`` against clean ``y``."""
        return psnr(self.predict(X), y)
