import math

import numpy as np
import pytest
from scipy import special

from utils.errors import InfeasibleTowerError
from utils.excursions import HEAD_SIZE, synthetic_law
from utils.parallel import stream
from utils.validation import feasibility_bound, validate_tower_law


def test_exact_law_and_total_mass():
    law = synthetic_law([1.0, -1.0], [0.3, 0.2])
    assert law.total_mass == pytest.approx(1.0, abs=1e-12)
    for n in (2, 10, HEAD_SIZE, HEAD_SIZE + 1, 50_000):
        assert law.mass(n, 0) == pytest.approx(2.0 * 0.3 * n ** -3, rel=1e-13)
        assert law.mass(n, 1) == pytest.approx(2.0 * 0.2 * n ** -3, rel=1e-13)


def test_residual_sits_at_one():
    law = synthetic_law([1.0], [0.5])
    assert law.mass(1) == pytest.approx(1.0 - (special.zeta(3.0) - 1.0), rel=1e-14)


def test_survival_matches_masses():
    law = synthetic_law([1.0], [0.5])
    head = sum(law.mass(k) for k in range(1, 11))
    assert law.survival(10) == pytest.approx(1.0 - head, rel=1e-10)
    assert law.survival(5000) == pytest.approx(special.zeta(3.0, 5001.0), rel=1e-12)
    assert law.survival(0) == pytest.approx(1.0)


def test_mean_return():
    law = synthetic_law([1.0], [0.5])
    exact = law.mass(1) + (special.zeta(2.0) - 1.0)
    assert law.mean_r == pytest.approx(exact, rel=1e-14)


def test_jump_means():
    law = synthetic_law([1.0, -1.0], [0.25, 0.25])
    assert law.mean_jr() == pytest.approx(0.0, abs=1e-14)
    single = synthetic_law([2.0], [0.5])
    assert single.conditional_mean_jr(1, 2) == pytest.approx(2.0)
    assert single.conditional_mean_jr(2, 3) == pytest.approx(4.0)


def test_feasibility_guard():
    assert feasibility_bound() == pytest.approx(1.0 / (2.0 * (special.zeta(3.0) - 1.0)))
    with pytest.raises(InfeasibleTowerError):
        synthetic_law([1.0], [3.0])
    with pytest.raises(InfeasibleTowerError):
        synthetic_law([1.0], [1.0], scale=3.0)
    ok, _ = validate_tower_law([1.0], [0.0])
    assert not ok


def test_tail_sampler_is_conditioned():
    law = synthetic_law([1.0], [0.5], head_size=64)
    draws = law.tail_sampler(stream(5, 0), 20_000)
    assert draws.min() >= 65
    # P(R > 128 | R > 64) = zeta(3, 129) / zeta(3, 65)
    expected = special.zeta(3.0, 129.0) / special.zeta(3.0, 65.0)
    assert np.mean(draws > 128) == pytest.approx(expected, abs=0.02)


def test_draws_and_sums_agree_with_the_law():
    law = synthetic_law([1.0, -1.0], [0.3, 0.2])
    r, j = law.draw(stream(2, 0), 200_000)
    assert r.min() >= 1
    assert set(np.unique(j)) <= {0, 1}
    assert np.mean(r == 1) == pytest.approx(law.mass(1), abs=0.005)

    sum_r, _ = law.sum_draws(stream(2, 1), 1_000_000)
    assert sum_r / 1_000_000 == pytest.approx(law.mean_r, rel=0.02)


def test_sum_of_nothing():
    law = synthetic_law([1.0], [0.5])
    assert law.sum_draws(stream(0, 0), 0) == (0.0, 0.0)
