import math

import pytest

from models.config import RunSection
from models.geometry import UnitVector
from utils.errors import DomainError
from utils.riccati import (
    check_corollaries, check_curvature_lipschitz, check_lemma_key, k_minus, k_plus, lemma_key_grid,
    modulus_probe, riccati_run,
)


@pytest.mark.parametrize('kappa', [0.25, 1.0, 4.0])
def test_constant_curvature(params, kappa):
    run = riccati_run(params, None, 1e-8, constant_kappa=kappa)
    assert run.converged
    assert run.k_plus == pytest.approx(math.sqrt(kappa), abs=1e-6)


def test_constant_curvature_needs_positive_kappa(params):
    with pytest.raises(DomainError):
        riccati_run(params, None, constant_kappa=0.0)
    with pytest.raises(DomainError):
        riccati_run(params, None, tol=0.0, constant_kappa=1.0)


def test_flat_parallel_has_no_expansion(params):
    # the central parallel is a closed geodesic of the flat cylinder
    run = riccati_run(params, UnitVector(0.0, 0.0, 0.0))
    assert 0.0 <= run.k_plus < 1e-5


def test_exiting_geodesic_uses_fixed_point(params):
    sample = k_plus(params, UnitVector(0.8, 0.0, 1.2))
    assert sample.a == pytest.approx(0.3)
    assert sample.k_plus > 0.0
    assert sample.k_minus > 0.0


def test_curvature_lipschitz_constants_finite(params):
    report = check_curvature_lipschitz(params, pairs=200, seed=1)
    for key in ('C_general', 'C_neck', 'mean_value_ratio'):
        assert math.isfinite(report.metrics[key])
    assert report.metrics['C_general'] > 0


def test_lemma_key_grid_has_both_signs(params):
    points = lemma_key_grid(params, 2, 3, psi_min=1e-2)
    assert len(points) == 12
    assert sum(x.psi < 0 for x in points) == 6
    assert min(abs(x.psi) for x in points) == pytest.approx(1e-2)


def test_lemma_key_covers_both_curvatures(params):
    report = check_lemma_key(params, s_points=2, psi_points=2, psi_min=1e-2)
    m = report.metrics
    assert len(report.rows) == 3 * 3 * 2
    assert any(row['psi'] < 0 for row in report.rows)
    assert all(row['k_minus'] >= 0.0 for row in report.rows)
    for name in ('sup_upper', 'inf_lower_psi', 'inf_lower_a'):
        assert math.isfinite(m[f'fine_{name}']) and m[f'fine_{name}'] > 0.0
    assert math.isfinite(m['max_refinement_change'])

    # mirror symmetry of the surface: k_minus(s, psi) = k_plus(s, -psi)
    by_point = {(row['s'], row['psi']): row for row in report.rows}
    for (s, psi), row in by_point.items():
        assert row['k_minus'] == pytest.approx(by_point[(s, -psi)]['k_plus'], rel=1e-4, abs=1e-5)


def test_lemma_key_rejects_tiny_psi(params):
    with pytest.raises(DomainError):
        check_lemma_key(params, psi_min=1e-8)


def test_time_reversal(params):
    x = UnitVector(0.7, 0.0, 0.9)
    reversed_x = UnitVector(0.7, 0.0, 0.9 - math.pi)
    assert k_minus(params, x) == pytest.approx(k_plus(params, reversed_x).k_plus, abs=1e-5)


def test_corollary_constants_finite(params):
    report = check_corollaries(params, samples=20, seed=3)
    m = report.metrics
    assert m['samples'] == 20
    assert len(report.rows) == 20 - m['extension_samples']
    assert m['q'] == pytest.approx(1.0)
    for key in ('C_kminus_kplus', 'C_curvature_flat', 'C_curvature_neck',
                'C_neck_lipschitz', 'C_combined_lipschitz'):
        assert math.isfinite(m[key]) and m[key] >= 0.0
    assert m['C_kminus_kplus'] > 0.0


def test_modulus_exponent_is_lipschitz_like(params):
    x = UnitVector(0.5 * (params.L + params.eps1), 0.0, math.pi / 3.0)
    report = modulus_probe(params, x, [0.0] + RunSection().modulus_deltas)
    assert report.rows[0]['difference'] == 0.0
    assert report.metrics['reference_exponent'] == 1.0
    assert report.metrics['fitted_exponent'] == pytest.approx(1.0, abs=0.3)
