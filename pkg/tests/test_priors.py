import numpy as np
import pytest

from priorbo.errors import DegeneratePriorError, ValidationError
from priorbo.param_space import Parameter, ParameterSpace
from priorbo.priors import (
    DENSITY_FLOOR,
    KdeMixturePrior,
    TruncatedGaussianPrior,
    UniformPrior,
    build_kde_prior,
    build_operator_prior,
    prior_from_dict,
)


def unit_space(dim):
    return ParameterSpace([Parameter(f"x{i}", 0.0, 1.0) for i in range(dim)])


class TestUniform:
    def test_log_density_is_zero(self):
        prior = UniformPrior(3)
        assert prior.log_density(np.array([0.2, 0.5, 0.9])) == 0.0

    def test_samples_fill_the_cube(self):
        prior = UniformPrior(2)
        draws = prior.sample(np.random.default_rng(0), 4000)
        assert draws.shape == (4000, 2)
        assert draws.min() >= 0.0 and draws.max() <= 1.0
        assert np.allclose(draws.mean(axis=0), 0.5, atol=0.03)

    def test_rejects_outside_cube(self):
        prior = UniformPrior(2)
        with pytest.raises(ValidationError):
            prior.log_density(np.array([1.2, 0.5]))


class TestTruncatedGaussian:
    def test_centered_sample_mean(self):
        # mean 0.5, sigma 0.2: truncation is symmetric, so the sample mean
        # stays at the center
        prior = TruncatedGaussianPrior(np.full(3, 0.5), np.full(3, 0.2))
        draws = prior.sample(np.random.default_rng(1), 10_000)
        assert draws.shape == (10_000, 3)
        assert np.all((draws >= 0.0) & (draws <= 1.0))
        for k in range(3):
            assert 0.49 <= draws[:, k].mean() <= 0.51

    def test_density_integrates_to_one(self):
        prior = TruncatedGaussianPrior(np.array([0.3, 0.7]), np.array([0.15, 0.3]))
        rng = np.random.default_rng(2)
        points = rng.random((100_000, 2))
        integral = np.exp(prior.log_density(points)).mean()
        assert 0.9 <= integral <= 1.1

    def test_corner_mode_density_integrates_to_one(self):
        # renormalization makes even a corner-peaked prior a proper density
        prior = TruncatedGaussianPrior(np.array([0.0, 1.0]), np.array([0.1, 0.1]))
        rng = np.random.default_rng(3)
        points = rng.random((100_000, 2))
        integral = np.exp(prior.log_density(points)).mean()
        assert 0.9 <= integral <= 1.1

    def test_samples_prefer_high_density(self):
        prior = TruncatedGaussianPrior(np.array([0.2]), np.array([0.1]))
        draws = prior.sample(np.random.default_rng(4), 10_000)
        mean_ll = prior.log_density(draws).mean()
        assert mean_ll > 0.0  # exceeds the uniform prior's log-likelihood

    def test_log_density_matches_hand_value(self):
        # 1-d, mean 0.5, sigma 1: phi(0)/[Phi(0.5)-Phi(-0.5)]
        prior = TruncatedGaussianPrior(np.array([0.5]), np.array([1.0]))
        from scipy.stats import norm

        expected = np.log(norm.pdf(0.0) / (norm.cdf(0.5) - norm.cdf(-0.5)))
        assert prior.log_density(np.array([0.5])) == pytest.approx(expected, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValidationError):
            TruncatedGaussianPrior(np.array([1.5]), np.array([0.1]))
        with pytest.raises(ValidationError):
            TruncatedGaussianPrior(np.array([0.5]), np.array([0.0]))


class TestKdeMixture:
    def test_bimodal_density(self):
        prior = KdeMixturePrior(
            centers=np.array([[0.2, 0.2], [0.8, 0.8]]),
            bandwidths=np.array([0.05, 0.05]),
        )
        at_mode = prior.log_density(np.array([0.2, 0.2]))
        between = prior.log_density(np.array([0.5, 0.5]))
        assert at_mode > between

    def test_density_integrates_to_one_for_interior_centers(self):
        rng = np.random.default_rng(5)
        centers = 0.3 + 0.4 * rng.random((6, 2))
        prior = KdeMixturePrior(centers, np.array([0.04, 0.04]))
        points = rng.random((100_000, 2))
        integral = np.exp(prior.log_density(points)).mean()
        assert 0.9 <= integral <= 1.1

    def test_density_floor(self):
        prior = KdeMixturePrior(
            centers=np.array([[0.1, 0.1]]), bandwidths=np.array([0.01, 0.01])
        )
        far = prior.log_density(np.array([0.95, 0.95]))
        assert far == pytest.approx(np.log(DENSITY_FLOOR))

    def test_samples_stay_inside_and_near_centers(self):
        prior = KdeMixturePrior(
            centers=np.array([[0.3, 0.7]]), bandwidths=np.array([0.05, 0.05])
        )
        draws = prior.sample(np.random.default_rng(6), 5000)
        assert np.all((draws >= 0.0) & (draws <= 1.0))
        assert np.allclose(draws.mean(axis=0), [0.3, 0.7], atol=0.02)

    def test_samples_prefer_high_density(self):
        prior = KdeMixturePrior(
            centers=np.array([[0.25, 0.25], [0.7, 0.6]]),
            bandwidths=np.array([0.08, 0.08]),
        )
        draws = prior.sample(np.random.default_rng(7), 10_000)
        assert prior.log_density(draws).mean() > 0.0

    def test_degenerate_bandwidth_raises(self):
        # essentially all mass below the cube: rejection budget exhausted
        prior = KdeMixturePrior(
            centers=np.array([[0.0, 0.0]]), bandwidths=np.array([1e6, 1e6])
        )
        with pytest.raises(DegeneratePriorError):
            prior.sample(np.random.default_rng(8), 64)

    def test_validation(self):
        with pytest.raises(ValidationError):
            KdeMixturePrior(np.array([[0.5, 1.4]]), np.array([0.1, 0.1]))
        with pytest.raises(ValidationError):
            KdeMixturePrior(np.array([[0.5, 0.5]]), np.array([0.1]))


class TestBuilders:
    def test_operator_prior_maps_native_means(self):
        space = ParameterSpace([Parameter("a", 0.0, 10.0), Parameter("b", -1.0, 1.0)])
        prior = build_operator_prior(space, [5.0, 0.0], 0.2)
        assert np.allclose(prior.means, [0.5, 0.5])
        assert np.allclose(prior.stddevs, 0.2)

    def test_operator_prior_rejects_out_of_bound_means(self):
        space = ParameterSpace([Parameter("a", 0.0, 10.0)])
        with pytest.raises(ValidationError, match="a"):
            build_operator_prior(space, [12.0], 0.2)
        with pytest.raises(ValidationError):
            build_operator_prior(space, [5.0], 0.0)

    def test_kde_single_point_uses_bandwidth_floor(self):
        space = unit_space(4)
        prior = build_kde_prior(np.array([[0.5, 0.5, 0.5, 0.5]]), space)
        assert prior.n_components == 1
        # one point: spread 0, so bandwidth = 0.05 * 1**(-1/8) = 0.05
        assert np.allclose(prior.bandwidths, 0.05)

    def test_kde_scott_rule_shrinks_with_m(self):
        space = unit_space(4)
        rng = np.random.default_rng(9)
        configs = 0.2 + 0.6 * rng.random((2, 4))
        prior = build_kde_prior(configs, space)
        expected = np.maximum(np.std(prior.centers, axis=0, ddof=1), 0.05) * 2 ** (
            -1.0 / 8.0
        )
        assert np.allclose(prior.bandwidths, expected)

    def test_kde_centers_are_unit_scaled(self):
        space = ParameterSpace([Parameter("a", 0.0, 10.0), Parameter("b", 0.0, 2.0)])
        prior = build_kde_prior(np.array([[5.0, 1.0], [2.5, 0.5]]), space)
        assert np.allclose(prior.centers, [[0.5, 0.5], [0.25, 0.25]])


class TestSerialization:
    @pytest.mark.parametrize(
        "prior",
        [
            UniformPrior(3),
            TruncatedGaussianPrior(np.array([0.2, 0.9]), np.array([0.1, 0.3])),
            KdeMixturePrior(
                np.array([[0.2, 0.3], [0.6, 0.7], [0.4, 0.5]]),
                np.array([0.07, 0.11]),
            ),
        ],
    )
    def test_round_trip_preserves_log_density(self, prior):
        import json

        rebuilt = prior_from_dict(json.loads(json.dumps(prior.to_dict())))
        rng = np.random.default_rng(10)
        points = rng.random((100, prior.dim))
        assert np.array_equal(rebuilt.log_density(points), prior.log_density(points))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            prior_from_dict({"kind": "mystery"})
