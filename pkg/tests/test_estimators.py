import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sspnp import INRDenoiser, SingleShotPnP, TVDenoiser
from sspnp.exceptions import ConfigError
from sspnp.inr import ModelConfig, build_model
from sspnp.operators import super_resolution
from sspnp.prox import tv_denoise


@pytest.fixture(scope="module")
def small_image():
    yy, xx = np.mgrid[0:16, 0:16] / 15.0
    return np.stack([xx, yy, 0.5 * (xx + yy)], axis=2)


def test_get_params_and_clone():
    est = SingleShotPnP(operator=super_resolution(2), denoiser=INRDenoiser(n_iter=3),
                        mu_base=0.5)
    params = est.get_params()
    assert params["mu_base"] == 0.5 and params["denoiser__n_iter"] == 3
    twin = clone(est)
    assert twin.get_params()["denoiser__n_iter"] == 3
    est.set_params(denoiser__n_iter=7)
    assert est.denoiser.n_iter == 7


def test_not_fitted():
    with pytest.raises(NotFittedError):
        INRDenoiser().transform(np.zeros((4, 4, 3)))
    with pytest.raises(NotFittedError):
        SingleShotPnP().predict(np.zeros((16, 16, 3)))


def test_inr_denoiser_fit_transform(small_image):
    den = INRDenoiser(hidden_dim=8, n_iter=3, random_state=1).fit(small_image)
    assert len(den.loss_curve_) == 4
    out = den.transform(small_image)
    assert out.shape == small_image.shape and 0 <= out.min() and out.max() <= 1
    again = INRDenoiser(hidden_dim=8, n_iter=3, random_state=1).fit(small_image)
    assert again.model_.checksum() == den.model_.checksum()


def test_inr_denoiser_from_model(small_image):
    model = build_model(ModelConfig(hidden_dim=8))
    den = INRDenoiser.from_model(model)
    assert den.hidden_dim == 8
    assert den.transform(small_image).shape == small_image.shape


def test_random_state_validation(small_image):
    with pytest.raises(ConfigError):
        INRDenoiser(random_state="x").fit(small_image)


def test_tv_denoiser(small_image):
    tv = TVDenoiser(weight=0.2, n_iter=5)
    np.testing.assert_array_equal(tv.fit_transform(small_image),
                                  tv_denoise(small_image, 0.2, 5))


def test_pipeline_fit_predict(small_image):
    op = super_resolution(2)
    y = op.apply(small_image)
    pnp = SingleShotPnP(op, INRDenoiser(hidden_dim=8, n_iter=2), n_iter=3)
    est = pnp.fit_predict(y, reference=small_image)
    assert est.shape == small_image.shape
    assert len(pnp.history_) == 3 and pnp.history_[-1].psnr is not None
    assert pnp.denoiser is not pnp.denoiser_
    assert not hasattr(pnp.denoiser, "model_")
    assert np.isfinite(pnp.score(y, small_image))


def test_pipeline_train_sources(small_image):
    op = super_resolution(2)
    y = op.apply(small_image)
    lifted = SingleShotPnP(op, TVDenoiser()).fit(y)
    raw = SingleShotPnP(op, TVDenoiser(), train_on="observation").fit(y)
    assert lifted.denoiser_.n_channels_ == raw.denoiser_.n_channels_ == 3
    with pytest.raises(ConfigError):
        SingleShotPnP(op, TVDenoiser(), train_on="clean").fit(y)


def test_use_fitted_skips_training(small_image):
    op = super_resolution(2)
    y = op.apply(small_image)
    den = TVDenoiser().fit(small_image)
    pnp = SingleShotPnP(op).use_fitted(den)
    assert pnp.predict(y).shape == small_image.shape
    with pytest.raises(ConfigError):
        SingleShotPnP(op).use_fitted(object())
