import math

import numpy as np
import pytest

from models.geometry import GeodesicKind, ProfileParams
from models.reports import FLUX_TOTAL
from utils.errors import DomainError
from utils.flux import (
    bouncing_band_mass, exact_tail, flux_arrays, flux_uniformity_check, neck_tail_report, sample_flux,
    sigma_R_sq, tail_histogram, tail_law_report, tail_table, winding_count, winding_counts,
    winding_from_gap, winding_of_band, zero_winding_mass,
)

L = 0.5


def test_samples_are_reproducible_per_index():
    theta, cos_psi, section = flux_arrays(7, 10)
    theta_long, cos_long, section_long = flux_arrays(7, 100_000)
    assert np.array_equal(theta, theta_long[:10])
    assert np.array_equal(cos_psi, cos_long[:10])
    assert np.array_equal(section, section_long[:10])


def test_sample_flux_families():
    samples = sample_flux(1, 2000)
    families = {s.family for s in samples}
    assert families == {(-1, -1), (-1, 1), (1, -1), (1, 1)}
    assert all(0.0 <= s.psi <= math.pi for s in samples)


def test_winding_count_at_band_edges():
    for n in (1, 3, 17):
        psi = math.atan(L / (n * math.pi))
        assert winding_count(L, psi) == n
        assert winding_count(L, math.pi - psi) == n
    assert winding_count(L, math.pi / 2) == 0


def test_winding_count_tangential():
    with pytest.raises(DomainError):
        winding_count(L, 0.0)
    with pytest.raises(DomainError):
        winding_counts(L, np.array([0.5, 1.0]))


def test_vectorized_counts_agree():
    psi = np.linspace(0.01, math.pi - 0.01, 101)
    scalar = [winding_count(L, p) for p in psi]
    assert list(winding_counts(L, np.cos(psi))) == scalar


def test_winding_from_gap_matches_angle():
    gap = 1e-6
    psi = math.acos(1.0 - gap)
    assert winding_from_gap(L, gap) == winding_count(L, psi)


def test_exact_tail_invalid():
    with pytest.raises(DomainError):
        exact_tail(L, 0)


def test_tail_table_sums_to_total_flux():
    table = tail_table(L, 50)
    assert table.flux_total == pytest.approx(FLUX_TOTAL, rel=1e-12)
    assert table.zero_mass == zero_winding_mass(L)


def test_tail_law():
    report = tail_law_report(L, [100, 300, 1000])
    assert report.metrics['max_relative_deviation'] <= 0.02
    row = report.rows[-1]
    assert row['normalized'] == pytest.approx(row['predicted'], rel=0.02)


def test_sigma_R_sq():
    assert sigma_R_sq(L, FLUX_TOTAL) == pytest.approx(1.0 / (8.0 * math.pi ** 2))
    with pytest.raises(DomainError):
        sigma_R_sq(L, 0.0)


def test_histogram_agrees_with_exact_law():
    report = tail_histogram(L, seed=11, count=200_000, n_max=20)
    assert report.metrics['bins_outside_interval'] <= 1
    assert report.metrics['zero_mass_mc'] == pytest.approx(report.metrics['zero_mass_exact'], rel=0.02)
    again = tail_histogram(L, seed=11, count=200_000, n_max=20)
    assert again.rows == report.rows


def test_bouncing_band_mass(params):
    assert bouncing_band_mass(params, 40) == pytest.approx(FLUX_TOTAL * (1 / 1600 - 1 / 1681))
    with pytest.raises(DomainError):
        bouncing_band_mass(params, 10)


def test_winding_of_band():
    n = 1000
    assert winding_of_band(L, n) == pytest.approx(L * n / (math.sqrt(2.0) * math.pi), rel=1e-2)


def test_flux_sampler_is_uniform():
    report = flux_uniformity_check(11, 20_000, alpha=1e-3)
    m = report.metrics
    assert m['uniform_pass'] is True
    assert m['ks_cos_psi'] <= m['ks_threshold']
    assert m['ks_theta'] <= m['ks_threshold']
    assert abs(m['mean_cos_psi']) < 3.0 / math.sqrt(20_000)
    assert len(report.rows) == 4
    assert sum(row['hits'] for row in report.rows) == 20_000
    with pytest.raises(DomainError):
        flux_uniformity_check(11, 10)


@pytest.mark.parametrize('r, target', [(5.0, 10.0 / 3.0), (6.0, 3.0)])
def test_neck_tail_exponent(r, target):
    report = neck_tail_report(ProfileParams(r=r, L=0.5, eps0=1.0), 100_000, seed=0)
    assert report.metrics['target_exponent'] == pytest.approx(target)
    assert report.metrics['fitted_exponent'] == pytest.approx(target, abs=0.15)


def test_neck_tail_needs_samples(params):
    with pytest.raises(DomainError):
        neck_tail_report(params, 1000, seed=0)
