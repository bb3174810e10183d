import math

import numpy as np
import pytest

from utils.errors import DegenerateFitError, DomainError
from utils.parallel import EXPERIMENT_STREAMS, experiment_seed, pool_map, spawn_seeds, stream
from utils.stats import (
    binomial_stderr, exponential_rate, ks_normal, loglog_fit, median_of_means, robust_variance,
    tail_exponent,
)


def test_loglog_fit_recovers_power():
    x = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    fit = loglog_fit(x, 3.0 * x ** 2)
    assert fit['slope'] == pytest.approx(2.0)
    assert fit['intercept'] == pytest.approx(math.log(3.0))
    assert fit['r_squared'] == pytest.approx(1.0)


def test_loglog_fit_needs_points():
    with pytest.raises(DegenerateFitError):
        loglog_fit([1.0, 2.0], [1.0, 4.0])
    with pytest.raises(DegenerateFitError):
        loglog_fit([1.0, 2.0, 3.0], [1.0, 0.0, 9.0])


def test_robust_variance_and_ks():
    sample = stream(0, 0).normal(0.0, 1.0, size=50_000)
    assert robust_variance(sample) == pytest.approx(1.0, rel=0.03)
    assert ks_normal(sample, 1.0) < 0.01
    assert ks_normal(sample, 4.0) > 0.1
    with pytest.raises(DegenerateFitError):
        ks_normal(sample, 0.0)


def test_tail_exponent_of_pareto():
    sample = stream(1, 0).pareto(2.0, size=200_000) + 1.0
    alpha, k = tail_exponent(sample)
    assert alpha == pytest.approx(2.0, abs=0.1)
    assert k == 20_000
    with pytest.raises(DegenerateFitError):
        tail_exponent(sample[:100])


def test_exponential_rate():
    lags = np.arange(1, 20)
    assert exponential_rate(lags, 0.5 ** lags) == pytest.approx(0.5)
    assert exponential_rate([1, 2], [1e-9, 1e-10], floor=1e-6) == 0.0


def test_median_of_means_resists_outliers():
    values = np.ones(160)
    values[0] = 1e9
    assert median_of_means(values) == 1.0


def test_binomial_stderr():
    assert binomial_stderr(25, 100) == pytest.approx(math.sqrt(0.25 * 0.75 / 100))
    assert math.isnan(binomial_stderr(0, 0))


def test_streams_match_spawned_children():
    from numpy.random import default_rng
    expected = default_rng(spawn_seeds(42, 5)[3]).uniform(size=4)
    assert np.array_equal(stream(42, 3).uniform(size=4), expected)
    assert not np.array_equal(stream(42, 2).uniform(size=4), expected)


def test_experiments_get_their_own_seeds():
    seeds = [experiment_seed(7, name) for name in EXPERIMENT_STREAMS]
    assert len(set(seeds)) == len(EXPERIMENT_STREAMS)
    assert experiment_seed(7, 'decay') == experiment_seed(7, 'decay')
    assert experiment_seed(7, 'decay') != experiment_seed(8, 'decay')
    assert all(seed >= 0 for seed in seeds)
    # conservation and the transition oracle both draw from stream 0 of their seed
    first = stream(experiment_seed(7, 'conservation'), 0).uniform(size=4)
    second = stream(experiment_seed(7, 'transition_oracle'), 0).uniform(size=4)
    assert not np.array_equal(first, second)
    with pytest.raises(DomainError):
        experiment_seed(7, 'unknown')


def test_pool_map_keeps_order():
    items = [float(i) for i in range(40)]
    assert pool_map(math.sqrt, items, workers=2) == [math.sqrt(x) for x in items]
    assert pool_map(math.sqrt, [], workers=2) == []
