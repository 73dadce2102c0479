"""Proximal operators: the quadratic data-fidelity prox and a TV denoiser."""

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, ConvergenceWarning
from .validation import check_image

PROX_METHODS = ("fft", "cg", "auto")


@dataclass(frozen=True)
class ProxConfig:
    method: str = "auto"
    cg_tol: float = 1e-6
    cg_max_iter: int = 300

    def __post_init__(self):
        if self.method not in PROX_METHODS:
            raise ConfigError(f"unknown prox method {self.method!r}; choose from {PROX_METHODS}")
        if not self.cg_tol > 0:
            raise ConfigError(f"cg_tol must be positive, got {self.cg_tol!r}")
        if self.cg_max_iter < 1:
            raise ConfigError(f"cg_max_iter must be >= 1, got {self.cg_max_iter!r}")


def _dot(a, b):
    return float(np.vdot(a, b))


def cg_solve(linop, b, tol=1e-6, max_iter=100, x0=None):
    """Conjugate gradients for a symmetric positive-definite ``linop``.

    Stops once the *true* relative residual ``||linop(u) - b|| / ||b||`` is
    at most ``tol``.  On hitting ``max_iter`` a :class:`ConvergenceWarning`
    carrying the residual is emitted and the last iterate is returned.
    """
    b = np.asarray(b, dtype=np.float64)
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros_like(b)
    u = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - linop(u) if x0 is not None else b.copy()
    p = r.copy()
    rr = _dot(r, r)
    rel = np.sqrt(rr) / b_norm
    for _ in range(max_iter):
        if rel <= tol:
            break
        q = linop(p)
        alpha = rr / _dot(p, q)
        u = u + alpha * p
        r = r - alpha * q
        rr_new = _dot(r, r)
        rel = np.sqrt(rr_new) / b_norm
        if rel <= tol:
            # guard against drift of the recursive residual
            r = b - linop(u)
            rr_new = _dot(r, r)
            rel = np.sqrt(rr_new) / b_norm
        p = r + (rr_new / rr) * p
        rr = rr_new
    if rel > tol:
        warnings.warn(f"CG stopped after {max_iter} iterations with relative residual "
                      f"{rel:.3e} > {tol:.1e}", ConvergenceWarning, stacklevel=2)
    return u


def _prox_fft(v, y, op, delta):
    otf = op.otf(v.shape[:2])[:, :, None]
    num = np.fft.fft2(v, axes=(0, 1)) + delta * np.conj(otf) * np.fft.fft2(y, axes=(0, 1))
    den = 1.0 + delta * np.abs(otf) ** 2
    return np.real(np.fft.ifft2(num / den, axes=(0, 1)))


def prox_data(v, y, op, delta, cfg=ProxConfig()):
    """Minimiser of ``0.5||u - v||^2 + delta * 0.5||A u - y||^2``.

    Solves ``(I + delta A^T A) u = v + delta A^T y`` in closed form in the
    Fourier domain (deconvolution only) or by warm-started CG.
    """
    if delta < 0:
        raise ConfigError(f"delta must be non-negative, got {delta!r}")
    v = check_image(v, "v")
    y = check_image(y, "observation")
    if delta == 0:
        return v.copy()
    method = cfg.method
    if method == "auto":
        method = "fft" if op.kind == "deconv" else "cg"
    if method == "fft":
        if op.kind != "deconv":
            raise ConfigError(f"fft prox is only exact for 'deconv', not {op.kind!r}")
        return _prox_fft(v, y, op, delta)
    rhs = v + delta * op.adjoint(y)
    return cg_solve(lambda u: u + delta * op.normal(u), rhs, cfg.cg_tol, cfg.cg_max_iter, x0=v)


def prox_residual(u, v, y, op, delta):
    """Relative residual of the prox normal equations at ``u``."""
    rhs = v + delta * op.adjoint(y)
    lhs = u + delta * op.normal(u)
    return float(np.linalg.norm(lhs - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny))


# -- total variation --------------------------------------------------------

def _grad(u):
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:, :-1] = u[:, 1:] - u[:, :-1]
    gy[:-1, :] = u[1:, :] - u[:-1, :]
    return gx, gy


def _div(px, py):
    # negative adjoint of _grad
    dx = np.zeros_like(px)
    dy = np.zeros_like(py)
    dx[:, 0] = px[:, 0]
    dx[:, 1:-1] = px[:, 1:-1] - px[:, :-2]
    dx[:, -1] = -px[:, -2]
    dy[0, :] = py[0, :]
    dy[1:-1, :] = py[1:-1, :] - py[:-2, :]
    dy[-1, :] = -py[-2, :]
    return dx + dy


def tv_denoise(v, weight=0.1, n_iter=20, tau=0.25):
    """Chambolle's dual projection for ``min_u 0.5||u - v||^2 + weight TV(u)``.

    Isotropic TV with Neumann boundaries, applied to each channel
    independently.
    """
    if weight < 0:
        raise ConfigError(f"weight must be non-negative, got {weight!r}")
    if n_iter < 1:
        raise ConfigError(f"n_iter must be >= 1, got {n_iter!r}")
    v = check_image(v)
    if weight == 0 or min(v.shape[:2]) < 2:
        return v.copy()
    px = np.zeros_like(v)
    py = np.zeros_like(v)
    for _ in range(n_iter):
        gx, gy = _grad(_div(px, py) - v / weight)
        norm = np.sqrt(gx * gx + gy * gy)
        px = (px + tau * gx) / (1.0 + tau * norm)
        py = (py + tau * gy) / (1.0 + tau * norm)
    return v - weight * _div(px, py)
