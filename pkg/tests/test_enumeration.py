"""Count-estimation chain: noise model, priors, thresholds, error rates."""

import numpy as np
import pytest
from scipy.stats import binom, norm

from pimasim.enumeration import (NoiseModel, decision_regions,
                                 error_probability, iid_prior, map_estimate,
                                 observe, pattern_prior, poisson_prior,
                                 uniform_prior)
from pimasim.harness import make_rng


def test_noise_model_convention():
    noise = NoiseModel(10.0)
    assert noise.sigma_w_sq == pytest.approx(0.1)
    assert noise.real_std == pytest.approx(np.sqrt(0.05))


def test_observe_noiseless_limit():
    noise = NoiseModel(300.0)  # vanishing noise
    y = observe(7, noise, make_rng(0))
    assert y == pytest.approx(7.0, abs=1e-12)


def test_observe_moments():
    noise = NoiseModel(10.0)
    rng = make_rng(1)
    ys = observe(np.zeros(1_000_000), noise, rng)
    assert np.mean(ys) == pytest.approx(0.0, abs=1e-3)
    assert np.var(ys) == pytest.approx(0.05, abs=1e-3)


def test_iid_prior_is_binomial():
    p = iid_prior(2, np.log(2.0), 1.0)  # activation prob 1/2
    assert p.pmf == pytest.approx([0.25, 0.5, 0.25])

    prior = iid_prior(50, 1.0, 0.1)  # lambda*T = 0.1
    q = 1.0 - np.exp(-0.1)
    assert prior.pmf == pytest.approx(binom.pmf(np.arange(51), 50, q), rel=1e-9)
    assert prior.pmf.sum() == pytest.approx(1.0, abs=1e-12)
    assert int(np.argmax(prior.pmf)) == 4

    zero = iid_prior(5, 0.0, 10.0)
    assert zero.pmf[0] == pytest.approx(1.0)


def test_uniform_prior_gives_half_thresholds():
    regions = decision_regions(uniform_prior(30), NoiseModel(10.0))
    assert regions.deltas == pytest.approx(np.full(30, 0.5))


def test_threshold_closed_form():
    # prior odds e between neighbours, sigma_w^2 = 0.1 -> offset 0.55
    lp = np.arange(4, 0, -1).astype(float)  # log-pmf ratios all exactly 1
    from pimasim.enumeration import ActivePrior
    regions = decision_regions(ActivePrior(lp), NoiseModel(10.0))
    assert regions.deltas == pytest.approx(np.full(3, 0.55))


def test_log_prior_shift_invariance():
    from pimasim.enumeration import ActivePrior
    rng = make_rng(3)
    lp = rng.normal(size=21)
    noise = NoiseModel(10.0)
    a = decision_regions(ActivePrior(lp), noise)
    b = decision_regions(ActivePrior(lp + 123.4), noise)
    assert a.boundaries == pytest.approx(b.boundaries)


def test_zero_probability_hypothesis_never_chosen():
    from pimasim.enumeration import ActivePrior
    lp = np.array([0.0, -np.inf, 0.0, 0.0])
    regions = decision_regions(ActivePrior(lp), NoiseModel(10.0))
    ys = np.linspace(-2, 5, 2001)
    est = map_estimate(ys, regions)
    assert 1 not in set(est.tolist())


def test_map_estimate_clamps():
    regions = decision_regions(uniform_prior(10), NoiseModel(10.0))
    assert map_estimate(2.3, regions) == 2
    assert map_estimate(-5.0, regions) == 0
    assert map_estimate(99.0, regions) == 10


def test_uniform_prior_is_round_and_clamp():
    regions = decision_regions(uniform_prior(12), NoiseModel(10.0))
    ys = make_rng(17).uniform(-3.0, 15.0, size=5000)
    expect = np.clip(np.floor(ys + 0.5), 0, 12).astype(int)
    assert np.array_equal(map_estimate(ys, regions), expect)


def test_map_estimate_agrees_with_argmax_oracle():
    """Threshold decisions must equal the literal posterior argmax."""
    rng = make_rng(7)
    noise = NoiseModel(10.0)
    n = 30
    for prior in (uniform_prior(n), pattern_prior(n), iid_prior(n, 0.003, 40.0)):
        regions = decision_regions(prior, noise)
        log_pmf = prior.log_pmf
        nus = rng.integers(0, n + 1, size=200_000)
        ys = nus + rng.normal(0.0, noise.real_std, size=nus.size)
        est = map_estimate(ys, regions)
        b = np.arange(n + 1)
        # chunked brute force over all hypotheses
        for lo in range(0, ys.size, 50_000):
            chunk = ys[lo:lo + 50_000, None]
            post = -((chunk - b) ** 2) / noise.sigma_w_sq + log_pmf
            assert np.array_equal(np.argmax(post, axis=1), est[lo:lo + 50_000])


def test_error_probability_interior_value():
    noise = NoiseModel(10.0)
    regions = decision_regions(uniform_prior(40), noise)
    expect = 2.0 * norm.sf(0.5 / noise.real_std)
    assert expect == pytest.approx(0.0254, abs=2e-4)
    for b in (1, 5, 20, 39):
        assert error_probability(b, regions, noise) == pytest.approx(expect)
    # edges lose one tail
    assert error_probability(0, regions, noise) == pytest.approx(expect / 2)
    assert error_probability(40, regions, noise) == pytest.approx(expect / 2)


def test_error_probability_vanishes_without_noise():
    noise = NoiseModel(200.0)
    regions = decision_regions(uniform_prior(10), noise)
    assert error_probability(4, regions, noise) < 1e-12


def test_error_probability_matches_monte_carlo_skewed_prior():
    """The analytic rate must track simulation even when thresholds shift."""
    noise = NoiseModel(10.0)
    prior = iid_prior(20, 0.02, 40.0)
    regions = decision_regions(prior, noise)
    rng = make_rng(11)
    for b in (0, 1, 3, 7):
        trials = 400_000
        ys = b + rng.normal(0.0, noise.real_std, size=trials)
        err = float(np.mean(map_estimate(ys, regions) != b))
        ref = error_probability(b, regions, noise)
        se = np.sqrt(max(ref * (1 - ref), 1e-12) / trials)
        assert abs(err - ref) < 3 * se + 1e-4


def test_overall_correct_rate_consistency():
    # sum_b p(b) (1 - Pe(b)) equals the Monte Carlo hit rate
    noise = NoiseModel(10.0)
    prior = iid_prior(25, 0.01, 30.0)
    regions = decision_regions(prior, noise)
    analytic = sum(p * (1.0 - error_probability(b, regions, noise))
                   for b, p in enumerate(prior.pmf))
    rng = make_rng(13)
    trials = 500_000
    nus = rng.choice(np.arange(26), size=trials, p=prior.pmf)
    ys = nus + rng.normal(0.0, noise.real_std, size=trials)
    hit = float(np.mean(map_estimate(ys, regions) == nus))
    assert hit == pytest.approx(analytic, abs=4 * np.sqrt(0.25 / trials) + 1e-4)


def test_thresholds_flatten_for_large_populations():
    """Where counts actually occur, thresholds approach the midpoint.

    The far tails keep log-odds of order log(N) at any population size, so
    the flattening is checked over the prior's five-sigma bulk.
    """
    noise = NoiseModel(10.0)

    def bulk_dev(n):
        p = 1.0 - np.exp(-0.1)  # fixed activation probability per user
        regions = decision_regions(iid_prior(n, 1.0, 0.1), noise)
        mean, sd = n * p, np.sqrt(n * p * (1 - p))
        lo, hi = int(mean - 5 * sd), int(mean + 5 * sd)
        window = regions.deltas[max(lo, 0):min(hi, n - 1)]
        return np.max(np.abs(window - 0.5))

    assert bulk_dev(1000) < 0.05
    assert bulk_dev(1000) < bulk_dev(100)


def test_poisson_prior_thresholds_monotone():
    regions = decision_regions(poisson_prior(1e4), NoiseModel(10.0))
    assert np.all(np.diff(regions.boundaries) > 0)
