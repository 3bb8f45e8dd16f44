import numpy as np
import pytest

from priorbo.errors import NumericError, ValidationError
from priorbo.surrogate import (
    GpHyperparameters,
    GpModel,
    log_marginal_likelihood,
    matern52,
)


def hyper(sv=1.0, ls=0.5, nv=1e-6, dim=1):
    return GpHyperparameters(sv, np.full(dim, float(ls)), nv)


class TestHyperparameters:
    def test_validation(self):
        with pytest.raises(ValidationError):
            GpHyperparameters(-1.0, np.array([0.5]), 0.1)
        with pytest.raises(ValidationError):
            GpHyperparameters(1.0, np.array([0.0]), 0.1)
        with pytest.raises(ValidationError):
            GpHyperparameters(1.0, np.array([0.5]), -0.1)

    def test_zero_noise_allowed(self):
        h = GpHyperparameters(1.0, np.array([0.5]), 0.0)
        assert h.noise_variance == 0.0


class TestKernel:
    def test_diagonal_is_signal_variance(self):
        h = hyper(sv=2.3, dim=3)
        X = np.random.default_rng(0).random((5, 3))
        K = matern52(X, X, h)
        assert np.allclose(np.diag(K), 2.3)

    def test_known_value(self):
        # r = 1: k = sv * (1 + sqrt5 + 5/3) * exp(-sqrt5)
        h = hyper(sv=1.0, ls=1.0)
        K = matern52(np.array([[0.0]]), np.array([[1.0]]), h)
        expected = (1 + np.sqrt(5) + 5 / 3) * np.exp(-np.sqrt(5))
        assert K[0, 0] == pytest.approx(expected, rel=1e-12)

    def test_positive_semidefinite(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            d = int(rng.integers(1, 5))
            X = rng.random((12, d))
            h = hyper(
                sv=float(rng.uniform(0.1, 5)),
                ls=float(rng.uniform(0.1, 3)),
                dim=d,
            )
            K = matern52(X, X, h)
            assert np.all(np.linalg.eigvalsh(K) > -1e-8)
            assert np.allclose(K, K.T)

    def test_decreases_with_distance(self):
        h = hyper()
        x0 = np.zeros((1, 1))
        k_near = matern52(x0, np.array([[0.1]]), h)[0, 0]
        k_far = matern52(x0, np.array([[0.9]]), h)[0, 0]
        assert k_near > k_far


class TestLogMarginalLikelihood:
    def test_single_point_hand_value(self):
        # y=0 at one point, sv=1, noise=1: -0.5*log(2*pi*2)
        h = GpHyperparameters(1.0, np.array([1.0]), 1.0)
        value = log_marginal_likelihood(h, np.array([[0.5]]), np.array([0.0]))
        assert value == pytest.approx(-0.5 * np.log(4 * np.pi), abs=1e-12)

    def test_duplicated_inputs_zero_noise_raise(self):
        h = GpHyperparameters(1.0, np.array([0.5]), 0.0)
        X = np.array([[0.3], [0.3]])
        with pytest.raises(NumericError):
            log_marginal_likelihood(h, X, np.array([1.0, 1.0]))

    def test_noise_explains_scatter_better(self):
        # two equal inputs with different outputs need noise to explain
        h_lo = GpHyperparameters(1.0, np.array([0.5]), 1e-4)
        h_hi = GpHyperparameters(1.0, np.array([0.5]), 0.25)
        X = np.array([[0.3], [0.3001]])
        y = np.array([1.0, -1.0])
        assert log_marginal_likelihood(h_hi, X, y) > log_marginal_likelihood(h_lo, X, y)

    def test_finite_difference_consistency(self):
        # d(LML)/d(log hyper) via central differences at two step sizes
        rng = np.random.default_rng(2)
        X = rng.random((10, 2))
        y = np.sin(3 * X[:, 0]) + 0.2 * X[:, 1]
        theta = np.log(np.array([1.3, 0.6, 0.4, 1e-2]))

        def lml_at(t):
            h = GpHyperparameters(np.exp(t[0]), np.exp(t[1:3]), np.exp(t[3]))
            return log_marginal_likelihood(h, X, y)

        for i in range(theta.size):
            grads = []
            for step in (1e-5, 2e-5):
                up = theta.copy()
                dn = theta.copy()
                up[i] += step
                dn[i] -= step
                grads.append((lml_at(up) - lml_at(dn)) / (2 * step))
            g1, g2 = grads
            assert abs(g1 - g2) <= 0.1 * max(abs(g1), abs(g2), 1e-8)


class TestFit:
    def test_noiseless_smooth_data_fits_small_noise(self):
        rng = np.random.default_rng(3)
        X = rng.random((12, 1))
        y = np.sin(6 * X[:, 0])
        model = GpModel.fit(X, y, np.random.default_rng(0))
        assert model.hyper.noise_variance <= 1e-3

    def test_fit_is_deterministic_given_rng(self):
        rng = np.random.default_rng(4)
        X = rng.random((15, 2))
        y = X[:, 0] ** 2 - X[:, 1]
        m1 = GpModel.fit(X, y, np.random.default_rng(7))
        m2 = GpModel.fit(X, y, np.random.default_rng(7))
        assert m1.hyper.signal_variance == m2.hyper.signal_variance
        assert np.array_equal(m1.hyper.lengthscales, m2.hyper.lengthscales)
        assert m1.hyper.noise_variance == m2.hyper.noise_variance

    def test_constant_outputs(self):
        X = np.linspace(0, 1, 8).reshape(-1, 1)
        y = np.full(8, 3.25)
        model = GpModel.fit(X, y, np.random.default_rng(0))
        mean, _ = model.predict(np.array([[0.123], [0.456], [0.987]]))
        assert np.allclose(mean, 3.25, atol=1e-8)

    def test_needs_two_points(self):
        with pytest.raises(ValidationError):
            GpModel.fit(np.array([[0.5]]), np.array([1.0]), np.random.default_rng(0))


class TestPredict:
    def test_interpolates_training_points_with_tiny_noise(self):
        rng = np.random.default_rng(5)
        X = rng.random((10, 2))
        y = np.cos(4 * X[:, 0]) * X[:, 1]
        model = GpModel(hyper(sv=1.0, ls=0.7, nv=1e-10, dim=2), X, y)
        mean, var = model.predict(X)
        assert np.max(np.abs(mean - y)) <= 1e-6
        assert np.all(var >= 0.0)

    def test_far_field_reverts_to_output_mean(self):
        X = np.random.default_rng(6).random((8, 1)) * 0.2
        y = 5.0 + np.sin(10 * X[:, 0])
        model = GpModel(hyper(sv=1.0, ls=0.05, nv=1e-8), X, y)
        mean, var = model.predict(np.array([0.99]))
        assert mean == pytest.approx(model.y_mean, abs=1e-3)
        assert var == pytest.approx(model.y_scale**2 * 1.0, rel=1e-3)

    def test_variance_smaller_near_data(self):
        X = np.array([[0.5]])
        y = np.array([1.0])
        model = GpModel(hyper(nv=1e-8), X, y)
        _, var_near = model.predict(np.array([0.51]))
        _, var_far = model.predict(np.array([0.99]))
        assert var_near < var_far

    def test_dimension_mismatch(self):
        model = GpModel(hyper(dim=2), np.random.random((4, 2)), np.random.random(4))
        with pytest.raises(ValidationError):
            model.predict(np.array([0.5]))


class TestSampleJoint:
    def test_moments_match_predict(self):
        rng = np.random.default_rng(7)
        X = rng.random((9, 1))
        y = np.sin(5 * X[:, 0])
        model = GpModel(hyper(sv=1.0, ls=0.3, nv=1e-4), X, y)
        U = np.array([[0.05], [0.55], [0.95]])
        mean, var = model.predict(U)
        n = 10_000
        draws = model.sample_joint(U, np.random.default_rng(11), n)
        assert draws.shape == (n, 3)
        se = np.sqrt(var / n)
        assert np.all(np.abs(draws.mean(axis=0) - mean) <= 3 * se + 1e-9)

    def test_deterministic_given_seed(self):
        X = np.random.default_rng(8).random((6, 2))
        y = X.sum(axis=1)
        model = GpModel(hyper(dim=2, nv=1e-6), X, y)
        U = np.random.default_rng(9).random((4, 2))
        d1 = model.sample_joint(U, np.random.default_rng(42), 5)
        d2 = model.sample_joint(U, np.random.default_rng(42), 5)
        assert np.array_equal(d1, d2)

    def test_degenerate_covariance_collapses_to_mean(self):
        # sampling exactly at the training points of a noiseless model
        X = np.array([[0.2], [0.8]])
        y = np.array([1.0, -1.0])
        model = GpModel(hyper(nv=1e-12), X, y)
        draws = model.sample_joint(X, np.random.default_rng(0), 64)
        assert np.allclose(draws, y, atol=2e-4)

    def test_at_training_points_noiseless_spread_is_tiny(self):
        rng = np.random.default_rng(10)
        X = rng.random((7, 1))
        y = np.cos(3 * X[:, 0])
        model = GpModel(hyper(nv=1e-10), X, y)
        draws = model.sample_joint(X, np.random.default_rng(1), 32)
        assert np.max(np.std(draws, axis=0)) <= 1e-3
