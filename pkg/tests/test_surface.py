import math

import pytest

from models.geometry import GeodesicKind, ProfileParams, UnitVector
from utils.errors import ConfigError, DirectionError, DomainError
from utils.surface import (
    asymptotic_angle, clairaut, classify, curvature, curvature_derivative, kind_of_constant,
    neck_depth, profile, reverse,
)
from utils.transit import entry_vector


def test_profile_flat_on_cylinder(params):
    assert profile(params, 0.0) == (1.0, 0.0, 0.0)
    assert profile(params, params.L) == (1.0, 0.0, 0.0)


def test_profile_in_neck(params):
    x, xp, xpp = profile(params, 0.75)
    assert x == pytest.approx(1.0 + 0.25 ** 5)
    assert xp == pytest.approx(5.0 * 0.25 ** 4)
    assert xpp == pytest.approx(20.0 * 0.25 ** 3)

    x_left, xp_left, _ = profile(params, -0.75)
    assert x_left == x
    assert xp_left == -xp


def test_profile_outside_surface(params):
    with pytest.raises(DomainError):
        profile(params, 1.5)


def test_curvature_sign(params):
    assert curvature(params, 0.2) == 0.0
    assert curvature(params, 0.7) < 0.0
    assert curvature(params, -0.7) == curvature(params, 0.7)


def test_curvature_derivative_matches_difference(params):
    s, h = 0.8, 1e-6
    numeric = (curvature(params, s + h) - curvature(params, s - h)) / (2 * h)
    assert curvature_derivative(params, s) == pytest.approx(numeric, rel=1e-5)


def test_clairaut_on_parallel(params):
    assert clairaut(params, UnitVector(0.0, 1.0, 0.0)) == 1.0
    assert clairaut(params, UnitVector(0.0, 1.0, math.pi / 2)) == pytest.approx(0.0, abs=1e-16)


def test_classify_kinds(params):
    assert classify(params, entry_vector(params, 0.9)) is GeodesicKind.CROSSING
    assert classify(params, entry_vector(params, 1.0005)) is GeodesicKind.BOUNCING
    assert kind_of_constant(1.0 + 1e-14) is GeodesicKind.ASYMPTOTIC


def test_classify_rejects_outward_vector(params):
    away = UnitVector(params.eps1, 0.0, math.pi / 3)
    with pytest.raises(DirectionError):
        classify(params, away)


def test_reverse_twice_is_identity():
    x = UnitVector(0.3, 1.0, 0.4)
    assert reverse(reverse(x)).psi == pytest.approx(x.psi)


def test_asymptotic_angle(params):
    psi0 = asymptotic_angle(params)
    assert 0 < psi0 < math.pi / 2
    assert params.xi_eps1 * math.cos(psi0) == pytest.approx(1.0)


def test_neck_depth(params):
    assert neck_depth(params, 0.1) == 0.0
    assert neck_depth(params, -0.9) == pytest.approx(0.4)


def test_invalid_profile():
    with pytest.raises(ConfigError):
        ProfileParams(r=4.0)
    with pytest.raises(ConfigError):
        ProfileParams(L=1.0, eps0=1.0)
