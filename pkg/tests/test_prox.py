import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sspnp.exceptions import ConfigError, ConvergenceWarning
from sspnp.operators import (deconvolution, gaussian_kernel, joint_demosaic_deconvolution,
                             super_resolution)
from sspnp.prox import ProxConfig, cg_solve, prox_data, prox_residual, tv_denoise

OPS = {
    "deconv": lambda: deconvolution(gaussian_kernel(5, 1.5)),
    "sr2": lambda: super_resolution(2),
    "joint": lambda: joint_demosaic_deconvolution(gaussian_kernel(5, 1.5)),
}


def dense(op, shape):
    n = int(np.prod(shape))
    return np.stack([op.apply(e.reshape(shape)).ravel() for e in np.eye(n)], axis=1)


def test_cg_matches_dense_solve(rng):
    m = rng.normal(size=(30, 30))
    a = m @ m.T + 30 * np.eye(30)
    b = rng.normal(size=30)
    u = cg_solve(lambda x: a @ x, b, tol=1e-12, max_iter=200)
    np.testing.assert_allclose(u, np.linalg.solve(a, b), rtol=1e-9)


def test_cg_zero_rhs():
    assert not cg_solve(lambda x: x, np.zeros(4)).any()


def test_cg_warns_when_not_converged(rng):
    a = np.diag(np.linspace(1, 1e4, 50))
    with pytest.warns(ConvergenceWarning):
        cg_solve(lambda x: a @ x, rng.normal(size=50), tol=1e-14, max_iter=2)


@pytest.mark.parametrize("kind", list(OPS))
def test_prox_matches_dense_solve(kind, rng):
    op = OPS[kind]()
    shape = (8, 8, 3)
    a = dense(op, shape)
    v = rng.random(shape)
    y = op.apply(rng.random(shape))
    delta = 3.0
    ref = np.linalg.solve(np.eye(a.shape[1]) + delta * a.T @ a,
                          v.ravel() + delta * a.T @ y.ravel())
    u = prox_data(v, y, op, delta, ProxConfig(cg_tol=1e-12, cg_max_iter=500))
    np.testing.assert_allclose(u.ravel(), ref, atol=1e-9)


def test_fft_and_cg_agree_on_deconvolution(rng):
    op = deconvolution()
    v, y = rng.random((16, 16, 3)), op.apply(rng.random((16, 16, 3)))
    u_fft = prox_data(v, y, op, 5.0, ProxConfig("fft"))
    u_cg = prox_data(v, y, op, 5.0, ProxConfig("cg", cg_tol=1e-12, cg_max_iter=500))
    assert np.max(np.abs(u_fft - u_cg)) <= 1e-6


def test_delta_zero_returns_v_exactly(rng):
    v = rng.random((16, 16, 3))
    for make in OPS.values():
        op = make()
        y = op.apply(rng.random((16, 16, 3)))
        u = prox_data(v, y, op, 0.0)
        np.testing.assert_array_equal(u, v)
        assert u is not v


@pytest.mark.parametrize("kind", list(OPS))
def test_optimality_residual(kind, rng):
    op = OPS[kind]()
    v = rng.random((16, 16, 3))
    y = op.apply(rng.random((16, 16, 3)))
    u = prox_data(v, y, op, 10.0)
    assert prox_residual(u, v, y, op, 10.0) <= 1e-6


def test_fft_rejected_for_non_convolution():
    with pytest.raises(ConfigError):
        op = super_resolution(2)
        prox_data(np.zeros((8, 8, 3)), np.zeros((4, 4, 3)), op, 1.0, ProxConfig("fft"))


def test_negative_delta_rejected():
    with pytest.raises(ConfigError):
        prox_data(np.zeros((8, 8, 1)), np.zeros((8, 8, 1)), deconvolution(gaussian_kernel(3, 1)),
                  -1.0)


@settings(max_examples=15, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
def test_prox_is_a_minimiser(delta, seed):
    g = np.random.default_rng(seed)
    op = deconvolution(gaussian_kernel(3, 1.0))
    v, y = g.random((8, 8, 1)), g.random((8, 8, 1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        u = prox_data(v, y, op, delta)

    def objective(w):
        return 0.5 * np.sum((w - v) ** 2) + 0.5 * delta * np.sum((op.apply(w) - y) ** 2)

    base = objective(u)
    for _ in range(3):
        assert objective(u + 1e-3 * g.normal(size=u.shape)) >= base - 1e-9


def _tv(u):
    return np.sum(np.abs(np.diff(u, axis=0))) + np.sum(np.abs(np.diff(u, axis=1)))


def test_tv_denoise_keeps_constants_and_smooths(rng):
    const = np.full((16, 16, 3), 0.4)
    np.testing.assert_allclose(tv_denoise(const), const, atol=1e-12)
    noisy = 0.5 + 0.2 * rng.normal(size=(32, 32, 1))
    out = tv_denoise(noisy, weight=0.1, n_iter=50)
    assert _tv(out) < 0.5 * _tv(noisy)
    assert abs(out.mean() - noisy.mean()) < 1e-10


def test_tv_reduces_rof_objective(rng):
    v = rng.random((16, 16, 1))
    u = tv_denoise(v, weight=0.2, n_iter=100)

    def rof(w):
        gx = np.diff(w, axis=1, append=w[:, -1:])
        gy = np.diff(w, axis=0, append=w[-1:])
        return 0.5 * np.sum((w - v) ** 2) + 0.2 * np.sum(np.sqrt(gx**2 + gy**2))

    assert rof(u) < rof(v)


def test_tv_zero_weight_is_identity(rng):
    v = rng.random((8, 8, 2))
    np.testing.assert_allclose(tv_denoise(v, weight=0.0), v)
