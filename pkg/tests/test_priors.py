import cvxpy as cp
import numpy as np
import pytest

from rawburst.priors import (GaussianSmootherPrior, IdentityPrior,
                             TotalVariationPrior, forward_gradient,
                             divergence, make_prior, total_variation)


def gradient_matrices(h, w):
    """Dense forward-difference operators (zero at last row/column) for a
    flattened h*w image, used only to express TV to the convex solver."""
    n = h * w
    dx = np.zeros((n, n))
    dy = np.zeros((n, n))
    for i in range(h):
        for j in range(w):
            p = i * w + j
            if j < w - 1:
                dx[p, p] = -1.0
                dx[p, p + 1] = 1.0
            if i < h - 1:
                dy[p, p] = -1.0
                dy[p, p + w] = 1.0
    return dx, dy


def tv_prox_oracle(v, t):
    """Brute-force isotropic TV prox via a generic convex solver."""
    h, w = v.shape
    dx, dy = gradient_matrices(h, w)
    x = cp.Variable(h * w)
    grads = cp.vstack([dx @ x, dy @ x])
    objective = 0.5 * cp.sum_squares(x - v.ravel()) + t * cp.sum(
        cp.norm(grads, axis=0))
    cp.Problem(cp.Minimize(objective)).solve(solver=cp.CLARABEL)
    return x.value.reshape(h, w)


def tv_objective(x, v, t):
    return 0.5 * float(np.sum((x - v) ** 2)) + t * total_variation(x)


class TestGradientOperators:
    def test_divergence_is_negative_adjoint(self, rng):
        x = rng.random((7, 9))
        px = rng.random((7, 9))
        py = rng.random((7, 9))
        gx, gy = forward_gradient(x)
        lhs = float(np.sum(gx * px) + np.sum(gy * py))
        rhs = -float(np.sum(x * divergence(px, py)))
        assert np.isclose(lhs, rhs)

    def test_tv_of_constant_is_zero(self):
        assert total_variation(np.full((5, 5, 2), 0.3)) == 0.0

    def test_tv_of_step_counts_edge(self):
        img = np.zeros((1, 8, 1))
        img[0, 4:, 0] = 2.0
        assert np.isclose(total_variation(img), 2.0)


class TestIdentityPrior:
    def test_prox_is_noop(self, rng):
        v = rng.random((4, 4, 3))
        p = IdentityPrior()
        assert np.array_equal(p.prox(v, 0.7), v)
        assert p.value(v) == 0.0


class TestTotalVariationPrior:
    def test_zero_strength_is_identity(self, rng):
        v = rng.random((6, 6, 2))
        assert np.array_equal(TotalVariationPrior().prox(v, 0.0), v)

    def test_constant_image_fixed_point(self):
        v = np.full((8, 8, 1), 0.4)
        out = TotalVariationPrior().prox(v, 0.05)
        assert np.allclose(out, 0.4, atol=1e-10)

    def test_one_dimensional_step_plateaus(self):
        # Exact 1-D TV prox of a two-plateau step moves each plateau
        # toward the other by t / plateau_length.
        h, t = 0.8, 0.04
        v = np.zeros((1, 8, 1))
        v[0, 4:, 0] = h
        prior = TotalVariationPrior(inner_iters=4000, tol=1e-12)
        out = prior.prox(v, t)
        expected = np.zeros(8)
        expected[:4] = t / 4.0
        expected[4:] = h - t / 4.0
        assert np.max(np.abs(out[0, :, 0] - expected)) < 1e-4
        oracle = tv_prox_oracle(v[..., 0], t)
        assert np.max(np.abs(out[..., 0] - oracle)) < 1e-4

    def test_matches_convex_solver_on_3x3(self, rng):
        prior = TotalVariationPrior(inner_iters=4000, tol=1e-12)
        for t in (0.02, 0.1):
            v = rng.random((3, 3, 1))
            out = prior.prox(v, t)
            oracle = tv_prox_oracle(v[..., 0], t)
            # Prox optimality: our objective within tolerance of the brute
            # force optimum, and the minimizers agree.
            ours = tv_objective(out, v, t)
            best = tv_objective(oracle[..., None], v, t)
            assert ours <= best + 1e-6
            assert np.max(np.abs(out[..., 0] - oracle)) < 1e-3

    def test_nonexpansive(self, rng):
        prior = TotalVariationPrior()
        for _ in range(10):
            a = rng.random((8, 8, 1))
            b = rng.random((8, 8, 1))
            pa = prior.prox(a, 0.06)
            pb = prior.prox(b, 0.06)
            assert (np.linalg.norm(pa - pb)
                    <= np.linalg.norm(a - b) + 1e-6)

    def test_prox_decreases_its_objective(self, rng):
        prior = TotalVariationPrior()
        for _ in range(5):
            v = rng.random((10, 10, 2))
            t = float(rng.uniform(0.01, 0.2))
            out = prior.prox(v, t)
            assert tv_objective(out, v, t) <= tv_objective(v, v, t)

    def test_channels_independent(self, rng):
        v = rng.random((6, 6, 2))
        prior = TotalVariationPrior()
        joint = prior.prox(v, 0.05)
        for ch in range(2):
            single = prior.prox(v[..., ch:ch + 1], 0.05)
            assert np.array_equal(joint[..., ch:ch + 1], single)


class TestGaussianSmootherPrior:
    def test_zero_strength_is_identity(self, rng):
        v = rng.random((5, 5, 1))
        assert np.array_equal(GaussianSmootherPrior().prox(v, 0.0), v)

    def test_constant_fixed_point(self):
        v = np.full((9, 9, 3), 0.7)
        out = GaussianSmootherPrior().prox(v, 1.5)
        assert np.allclose(out, 0.7)

    def test_impulse_reproduces_kernel(self):
        # Interior impulse response must equal the normalized sampled
        # Gaussian (radius ceil(3t)) evaluated from its formula.
        t = 1.0
        radius = 3
        k = np.exp(-0.5 * (np.arange(-radius, radius + 1) / t) ** 2)
        k /= k.sum()
        v = np.zeros((15, 15, 1))
        v[7, 7, 0] = 1.0
        out = GaussianSmootherPrior().prox(v, t)
        assert np.max(np.abs(out[4:11, 4:11, 0] - np.outer(k, k))) < 1e-6

    def test_has_no_value(self):
        prior = GaussianSmootherPrior()
        assert not prior.has_value
        with pytest.raises(NotImplementedError):
            prior.value(np.zeros((2, 2, 1)))


class TestFactory:
    def test_by_name_with_params(self):
        prior = make_prior({"name": "tv", "inner_iters": 7, "tol": 1e-3})
        assert isinstance(prior, TotalVariationPrior)
        assert prior.inner_iters == 7
        assert isinstance(make_prior("identity"), IdentityPrior)
        assert isinstance(make_prior("smoother"), GaussianSmootherPrior)

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            make_prior({"name": "wavelet"})
