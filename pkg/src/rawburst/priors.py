"""Regularizers exposed through their proximal operators.

The solver only ever calls ``prox(v, t)``, the (possibly approximate)
minimizer of 0.5 * ||x - v||^2 + t * R(x), so any denoiser can be plugged
into the iteration.  Implementations whose functional R is known also
expose ``value(x)`` so the overall objective can be tracked; the
plug-and-play smoother deliberately does not.

Every implementation is stateless: prox(v, 0) returns v unchanged and the
output is always finite.  Channels are regularized independently.
"""

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .image_io import as_tensor3


def forward_gradient(plane):
    """Forward-difference gradient with zero gradient at the last row
    and column.  Returns (gx, gy) for a 2-D plane."""
    gx = np.zeros_like(plane)
    gy = np.zeros_like(plane)
    gx[:, :-1] = plane[:, 1:] - plane[:, :-1]
    gy[:-1, :] = plane[1:, :] - plane[:-1, :]
    return gx, gy


def divergence(px, py):
    """Negative adjoint of :func:`forward_gradient`.

    Single-row or single-column images have an identically zero gradient
    along the degenerate axis, so that axis contributes nothing here.
    """
    div = np.zeros_like(px)
    if px.shape[1] > 1:
        div[:, 0] += px[:, 0]
        div[:, 1:-1] += px[:, 1:-1] - px[:, :-2]
        div[:, -1] += -px[:, -2]
    if py.shape[0] > 1:
        div[0, :] += py[0, :]
        div[1:-1, :] += py[1:-1, :] - py[:-2, :]
        div[-1, :] += -py[-2, :]
    return div


def total_variation(x):
    """Isotropic total variation, summed over pixels and channels."""
    x = as_tensor3(x)
    tv = 0.0
    for ch in range(x.shape[2]):
        gx, gy = forward_gradient(x[..., ch])
        tv += float(np.sum(np.sqrt(gx ** 2 + gy ** 2)))
    return tv


class Regularizer:
    """Base contract: ``prox(v, t)`` is required; ``value(x)`` is present
    only when the prox corresponds to a known functional."""

    has_value = False

    def prox(self, v, t):
        raise NotImplementedError

    def value(self, x):
        raise NotImplementedError(
            f"{type(self).__name__} has no explicit functional")


class IdentityPrior(Regularizer):
    """R == 0: the prox is a no-op, reducing the solver to pure gradient
    iteration on the data term."""

    has_value = True

    def prox(self, v, t):
        return as_tensor3(v)

    def value(self, x):
        return 0.0


class TotalVariationPrior(Regularizer):
    """Isotropic TV, prox solved by dual projection iterations.

    The dual variable update uses a fixed step of 1/8, for which the
    projection iteration is contractive; ``inner_iters`` and ``tol``
    bound the work per prox call.
    """

    has_value = True

    def __init__(self, inner_iters=50, tol=1e-5):
        self.inner_iters = int(inner_iters)
        self.tol = float(tol)

    def value(self, x):
        return total_variation(x)

    def prox(self, v, t):
        v = as_tensor3(v)
        if t < 0:
            raise ValueError("prox strength must be >= 0")
        if t == 0.0:
            return v
        out = np.empty_like(v)
        for ch in range(v.shape[2]):
            out[..., ch] = self._prox_plane(v[..., ch], t)
        return out

    def _prox_plane(self, plane, t):
        tau = 0.125
        px = np.zeros_like(plane)
        py = np.zeros_like(plane)
        for _ in range(self.inner_iters):
            gx, gy = forward_gradient(divergence(px, py) - plane / t)
            mag = np.sqrt(gx ** 2 + gy ** 2)
            denom = 1.0 + tau * mag
            px_new = (px + tau * gx) / denom
            py_new = (py + tau * gy) / denom
            delta = max(np.max(np.abs(px_new - px)),
                        np.max(np.abs(py_new - py)))
            px, py = px_new, py_new
            if delta < self.tol:
                break
        return plane - t * divergence(px, py)


class GaussianSmootherPrior(Regularizer):
    """Plug-and-play slot: the prox is Gaussian smoothing with blur width
    equal to the strength (separable kernel of radius ceil(3t)).

    This is an inexact prox standing in for a learned denoiser; there is
    no functional to evaluate.
    """

    def prox(self, v, t):
        v = as_tensor3(v)
        if t < 0:
            raise ValueError("denoising strength must be >= 0")
        if t == 0.0:
            return v
        radius = int(np.ceil(3.0 * t))
        out = gaussian_filter1d(v, sigma=t, axis=0, mode="nearest",
                                radius=radius)
        return gaussian_filter1d(out, sigma=t, axis=1, mode="nearest",
                                 radius=radius)


_PRIOR_FACTORIES = {
    "identity": IdentityPrior,
    "tv": TotalVariationPrior,
    "smoother": GaussianSmootherPrior,
}


def make_prior(spec):
    """Build a regularizer from a config mapping like
    {"name": "tv", "inner_iters": 50} or from a bare name string."""
    if isinstance(spec, str):
        spec = {"name": spec}
    params = dict(spec)
    name = params.pop("name", None)
    if name not in _PRIOR_FACTORIES:
        raise ValueError(
            f"unknown prior {name!r}; choose from {sorted(_PRIOR_FACTORIES)}")
    return _PRIOR_FACTORIES[name](**params)
