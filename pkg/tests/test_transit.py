import math

import numpy as np
import pytest

from models.geometry import BandIndex, GeodesicKind, UnitVector
from utils.errors import DomainError, KindError
from utils.surface import xi
from utils.parallel import stream
from utils.transit import (
    NeckTimeTable, band_grid, band_interval, band_of, band_width_check, conservation_check,
    distortion_check, entry_vector, half_times, integrate, monotonicity_check, sample_band,
    scaling_report, transition, transition_by_ode, transition_oracle_check, turning_point,
    zeta_deflection, zeta_derivatives,
)


def test_integrate_conserves_clairaut(params):
    for psi in (0.1, 0.7, 2.0, -1.2):
        trajectory = integrate(params, UnitVector(0.0, 0.0, psi), 50.0)
        assert trajectory.clairaut_drift < 1e-9


def test_integrate_rejects_bad_input(params):
    with pytest.raises(DomainError):
        integrate(params, UnitVector(2.0, 0.0, 0.1), 1.0)
    with pytest.raises(DomainError):
        integrate(params, UnitVector(0.0, 0.0, 0.1), -1.0)


def test_conservation_check(params):
    report = conservation_check(params, samples=8, T=20.0, seed=3)
    m = report.metrics
    assert m['max_drift'] < 1e-9
    assert len(report.rows) == 4
    assert m['near_asymptotic'] == 4
    # crossing starts close to |c| = 1 wind on the cylinder for far longer than T
    assert m['full_horizon'] >= 2
    assert m['span_max'] == 20.0
    assert m['exited'] + m['full_horizon'] == 8
    assert m['turning_points'] >= 0


def test_turning_point(params):
    c = 1.0001
    s0 = turning_point(params, c)
    assert xi(params, s0) == pytest.approx(c, rel=1e-14)
    assert turning_point(params, 1.0) == params.L
    with pytest.raises(KindError):
        turning_point(params, 0.9)
    with pytest.raises(KindError):
        turning_point(params, 1.5)


@pytest.mark.parametrize('c', [0.99, -0.999, 1.0005, -1.0002])
def test_transition_matches_ode(params, c):
    x = entry_vector(params, c, theta=0.5)
    result = transition(params, x)
    advance, time, exit_vector = transition_by_ode(params, x)
    assert abs(result.zeta - advance) < 1e-6
    assert abs(result.transit_time - time) < 1e-6
    assert exit_vector.s == pytest.approx(result.exit.s, abs=1e-8)


def test_transition_kinds(params):
    crossing = transition(params, entry_vector(params, 0.95))
    assert crossing.kind is GeodesicKind.CROSSING
    assert crossing.exit.s == pytest.approx(params.eps1)
    assert crossing.upsilon2 > 0

    bouncing = transition(params, entry_vector(params, 1.0005))
    assert bouncing.kind is GeodesicKind.BOUNCING
    assert bouncing.upsilon2 == 0.0
    assert bouncing.exit.s == pytest.approx(-params.eps1)


def test_transition_rejects_asymptotic(params):
    with pytest.raises(KindError):
        transition(params, entry_vector(params, 1.0))


def test_transition_needs_section(params):
    with pytest.raises(DomainError):
        transition(params, UnitVector(0.6, 0.0, 0.3))


def test_band_of(params):
    c = 1.0 - 1.0 / 30.5 ** 2
    band = band_of(params, entry_vector(params, c))
    assert band == BandIndex(30, GeodesicKind.CROSSING, 1)
    assert band_of(params, entry_vector(params, 0.5)) is None


def test_band_interval():
    lo, hi = band_interval(10, GeodesicKind.BOUNCING)
    assert lo == pytest.approx(1.0 + 1.0 / 121.0)
    assert hi == pytest.approx(1.01)
    with pytest.raises(DomainError):
        band_interval(0, GeodesicKind.CROSSING)
    with pytest.raises(KindError):
        band_interval(5, GeodesicKind.ASYMPTOTIC)


def test_cylinder_time_scaling(params):
    report = scaling_report(params, 'Upsilon2', GeodesicKind.CROSSING, [100, 200, 400, 800], samples_per_band=3)
    assert report.metrics['slope'] == pytest.approx(1.0, abs=0.05)


def test_band_width_coefficient(params):
    report = band_width_check(params, [1000, 2000], GeodesicKind.CROSSING)
    assert report.metrics['last_ratio'] == pytest.approx(1.0, abs=0.01)


def test_neck_time_table(params):
    table = NeckTimeTable.build(params, GeodesicKind.CROSSING, 1e-6, 1e-2, points=12)
    assert np.all(np.diff(table.values) < 0)

    gap = 3.3e-4
    exact, _ = half_times(params, 1.0 - gap)
    assert table(gap) == pytest.approx(exact, rel=1e-3)

    below = table(np.array([1e-8, 1e-7]))
    assert below[0] > below[1] > table.values[0]

    with pytest.raises(DomainError):
        table(0.0)
    with pytest.raises(DomainError):
        table(0.1)


def test_zeta_deflection_matches_ode(params):
    assert zeta_deflection(params, 0.0) == 0.0
    advance, _, _ = transition_by_ode(params, entry_vector(params, 0.0))
    assert advance == pytest.approx(0.0, abs=1e-12)

    for c in (0.95, -0.999, 1.0005):
        advance, _, _ = transition_by_ode(params, entry_vector(params, c))
        assert zeta_deflection(params, c) == pytest.approx(abs(advance), abs=1e-6)


def _zeta_of_psi(params, psi):
    return zeta_deflection(params, params.xi_eps1 * math.cos(psi))


@pytest.mark.parametrize('c, h', [(0.9, 1e-4), (0.999, 1e-6), (1.0005, 1e-6)])
def test_zeta_prime_against_finite_differences(params, c, h):
    psi = math.acos(c / params.xi_eps1)
    zp, _ = zeta_derivatives(params, psi)
    central = (_zeta_of_psi(params, psi + h) - _zeta_of_psi(params, psi - h)) / (2.0 * h)
    assert zp == pytest.approx(central, rel=1e-4)


def test_zeta_second_derivative_against_finite_differences(params):
    psi = math.acos(0.9 / params.xi_eps1)
    h = 1e-4
    _, zpp = zeta_derivatives(params, psi)
    up, _ = zeta_derivatives(params, psi + h)
    down, _ = zeta_derivatives(params, psi - h)
    assert zpp == pytest.approx((up - down) / (2.0 * h), rel=1e-4)


def test_zeta_prime_mirrors_across_quadrants(params):
    psi = math.acos(0.99 / params.xi_eps1)
    zp, zpp = zeta_derivatives(params, psi)
    mirrored, mirrored_pp = zeta_derivatives(params, math.pi - psi)
    assert mirrored == pytest.approx(-zp, rel=1e-12)
    assert mirrored_pp == pytest.approx(zpp, rel=1e-12)
    with pytest.raises(KindError):
        zeta_derivatives(params, math.acos(1.0 / params.xi_eps1))


@pytest.mark.parametrize('quantity, kind, expected, tolerance', [
    ('Upsilon1', GeodesicKind.CROSSING, 0.6, 0.05),
    ('ZetaPrime', GeodesicKind.CROSSING, 3.0, 0.1),
    ('ZetaDoublePrime', GeodesicKind.CROSSING, 5.0, 0.15),
    ('ZetaPrime', GeodesicKind.BOUNCING, 2.6, 0.1),
])
def test_asymptotic_band_exponents(params, quantity, kind, expected, tolerance):
    report = scaling_report(params, quantity, kind, band_grid(1000, 8000, 4), samples_per_band=3)
    assert report.metrics['expected_slope'] == pytest.approx(expected)
    assert report.metrics['slope'] == pytest.approx(expected, abs=tolerance)


def test_distortion_check(params):
    band = BandIndex(200, GeodesicKind.CROSSING, 1)
    report = distortion_check(params, band, pairs=5, seed=2)
    m = report.metrics
    assert len(report.rows) == 5
    assert m['pairs'] == 5
    assert math.isfinite(m['sup_distortion']) and m['sup_distortion'] > 0.0
    assert math.isfinite(m['sup_time_ratio']) and m['sup_time_ratio'] > 0.0
    with pytest.raises(DomainError):
        distortion_check(params, band, pairs=0)


@pytest.mark.parametrize('kind', [GeodesicKind.CROSSING, GeodesicKind.BOUNCING])
def test_monotonicity_inside_bands(params, kind):
    report = monotonicity_check(params, kind, [100, 200, 400])
    assert report.metrics['grid_points'] == 9
    assert report.metrics['time_violations'] == 0
    assert report.metrics['zeta_violations'] == 0


def test_sample_band_vectors(params):
    band = BandIndex(40, GeodesicKind.BOUNCING, -1)
    vectors = sample_band(params, band, 6, stream(4, 0))
    assert len(vectors) == 6
    assert all(band_of(params, x) == band for x in vectors)
    assert len({x.theta for x in vectors}) == 6
    assert all(x.theta == 0.0 for x in sample_band(params, band, 3))


def test_transition_oracle_check(params):
    report = transition_oracle_check(params, count=6, n_max=60, seed=1)
    assert report.metrics['vectors'] == 6
    assert {row['kind'] for row in report.rows} == {'<', '>'}
    assert report.metrics['max_zeta_error'] < 1e-6
    assert report.metrics['max_time_error'] < 1e-6
