import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sspnp import ndgrad as nd
from sspnp.exceptions import ConfigError, DimensionError
from sspnp.inr import (ActivationParams, DenoiserModel, ModelConfig, activate, activate_array,
                       apply_denoiser, build_model, evaluate, forward_tensor, load_model, phi,
                       phi_derivative, pixel_coordinates, pixel_features, save_model)

UNIT = ActivationParams("phi", 1.0, 0.0, 1.0, 0.0)


def test_phi_closed_form_at_zero():
    # exp(0) * sin(0) + sigmoid(0)
    assert phi(0.0, UNIT) == pytest.approx(0.5)


def test_phi_limits():
    assert abs(phi(20.0, UNIT) - 1.0) <= 1e-6
    assert abs(phi(-20.0, UNIT)) <= 1e-6


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e6, 1e6), st.floats(0.1, 5), st.floats(-2, 2), st.floats(0.1, 20),
       st.floats(-2, 2))
def test_phi_bounded_for_any_parameters(x, a1, b1, a2, b2):
    value = phi(x, ActivationParams("phi", a1, b1, a2, b2))
    assert -1.0 <= value <= 2.0


def test_phi_derivative_matches_finite_differences():
    x = np.random.default_rng(0).uniform(-3, 3, 500)
    for p in (UNIT, ActivationParams("phi", 2.0, 0.3, 10.0, -0.2)):
        h = 1e-6
        fd = (phi(x + h, p) - phi(x - h, p)) / (2 * h)
        np.testing.assert_allclose(phi_derivative(x, p), fd, rtol=1e-6, atol=1e-8)


def test_phi_rejects_other_kinds():
    with pytest.raises(ConfigError):
        phi(0.0, ActivationParams("sine"))


@pytest.mark.parametrize("kwargs", [dict(kind="gelu"), dict(a1=0.0), dict(a2=0.0),
                                    dict(kind="sine", first_omega=0.0)])
def test_activation_params_validation(kwargs):
    with pytest.raises(ConfigError):
        ActivationParams(**kwargs)


@pytest.mark.parametrize("kind", ["phi", "sine", "relu"])
def test_tensor_and_array_activations_agree(kind):
    p = ActivationParams(kind)
    z = np.random.default_rng(1).normal(size=(6, 4))
    for layer in (0, 1):
        np.testing.assert_array_equal(activate(nd.Tensor(z), p, layer).data,
                                      activate_array(z, p, layer))


def test_sine_uses_first_omega_only_on_first_layer():
    p = ActivationParams("sine", first_omega=30.0)
    z = np.array([0.01, 0.02])
    np.testing.assert_allclose(activate_array(z, p, 0), np.sin(30 * z))
    np.testing.assert_allclose(activate_array(z, p, 1), np.sin(z))


def test_model_shapes_and_init():
    model = build_model(ModelConfig())
    assert model.layer_shapes == [(5, 64), (64, 64), (64, 3)]
    assert (model.in_dim, model.hidden_dim, model.depth, model.out_dim) == (5, 64, 2, 3)
    for w, b in zip(model.weights, model.biases):
        assert np.all(np.abs(w) <= np.sqrt(1.0 / w.shape[0]))
        assert not b.any()


def test_siren_init_bounds():
    model = build_model(ModelConfig(activation=ActivationParams("sine", first_omega=30.0)))
    w0, w1, w2 = model.weights
    assert np.abs(w0).max() <= 1 / 5
    assert np.abs(w1).max() <= np.sqrt(6 / 64)
    assert np.abs(w2).max() <= np.sqrt(6 / 64) / 30


def test_build_model_is_seeded():
    a, b = build_model(ModelConfig(seed=3)), build_model(ModelConfig(seed=3))
    assert a.checksum() == b.checksum()
    assert a.checksum() != build_model(ModelConfig(seed=4)).checksum()


def test_model_layer_chaining_validated():
    with pytest.raises(DimensionError):
        DenoiserModel([np.zeros((5, 4)), np.zeros((3, 3))], [np.zeros(4), np.zeros(3)], UNIT)


def test_pixel_coordinates_cover_unit_square():
    c = pixel_coordinates(3, 4)
    assert c.shape == (12, 2)
    np.testing.assert_allclose(c[0], [-1, -1])
    np.testing.assert_allclose(c[-1], [1, 1])
    np.testing.assert_allclose(c[1], [-1 + 2 / 3, -1])


def test_pixel_features_layout():
    img = np.random.default_rng(0).random((4, 5, 3))
    f = pixel_features(img)
    assert f.shape == (20, 5)
    np.testing.assert_array_equal(f[:, 2:], img.reshape(20, 3))


def test_evaluate_matches_graph_forward():
    model = build_model(ModelConfig(hidden_dim=8))
    feats = np.random.default_rng(2).random((7, 5))
    params = []
    for w, b in zip(model.weights, model.biases):
        params += [nd.Tensor(w), nd.Tensor(b)]
    np.testing.assert_allclose(evaluate(model, feats),
                               forward_tensor(params, nd.Tensor(feats), model.activation).data)


def test_mlp_gradient_matches_finite_differences():
    from conftest import central_difference
    rng = np.random.default_rng(5)
    model = build_model(ModelConfig(hidden_dim=6))
    feats, target = rng.random((10, 5)), rng.random((10, 3))
    values = [a for pair in zip(model.weights, model.biases) for a in pair]
    params = [nd.Tensor(v, requires_grad=True) for v in values]

    def loss(ps):
        out = forward_tensor(ps, nd.Tensor(feats), model.activation)
        return nd.mean(nd.square(nd.sub(out, target)))

    grads = nd.backward(loss(params))
    for i, p in enumerate(params):
        def f(x, i=i):
            ps = [nd.Tensor(x if j == i else values[j]) for j in range(len(values))]
            return loss(ps).item()
        fd = central_difference(f, values[i])
        np.testing.assert_allclose(grads[p], fd, rtol=1e-4, atol=1e-9)


def test_apply_denoiser_clamps_and_checks_channels():
    model = build_model(ModelConfig())
    out = apply_denoiser(model, np.random.default_rng(0).random((8, 8, 3)) * 10)
    assert out.shape == (8, 8, 3) and out.min() >= 0 and out.max() <= 1
    with pytest.raises(DimensionError):
        apply_denoiser(model, np.zeros((8, 8, 1)))


def test_freeze_makes_weights_read_only():
    model = build_model(ModelConfig()).freeze()
    with pytest.raises(ValueError):
        model.weights[0][0, 0] = 1.0
    assert model.copy().weights[0].flags.writeable


def test_save_load_round_trip(tmp_path):
    model = build_model(ModelConfig(activation=ActivationParams("phi", 0.7, 0.1, 1.3, -0.2)))
    save_model(model, tmp_path / "m.npz")
    loaded = load_model(tmp_path / "m.npz")
    assert loaded.checksum() == model.checksum()
    assert loaded.activation == model.activation


def test_load_rejects_foreign_archive(tmp_path):
    np.savez(tmp_path / "x.npz", a=np.zeros(2))
    with pytest.raises(ConfigError):
        load_model(tmp_path / "x.npz")
