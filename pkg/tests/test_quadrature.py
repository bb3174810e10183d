import math

import pytest

from utils.errors import QuadratureError
from utils.quadrature import adaptive_quad, scale_points, sqrt_endpoint_quad


def test_polynomial():
    assert adaptive_quad(lambda x: x * x, 0.0, 1.0) == pytest.approx(1.0 / 3.0, rel=1e-12)


def test_empty_interval():
    assert adaptive_quad(math.exp, 1.0, 1.0) == 0.0


def test_inverse_sqrt_endpoint():
    # integral of (s - 1)^(-1/2) over [1, 2] is 2
    value = sqrt_endpoint_quad(lambda u: 2.0, 1.0, 2.0)
    assert value == pytest.approx(2.0, rel=1e-12)


def test_divergent_integral_raises():
    with pytest.raises(QuadratureError):
        adaptive_quad(lambda x: 1.0 / x, 0.0, 1.0)


def test_scale_points_inside_interval():
    points = scale_points(0.0, 1.0, 0.0, 0.05)
    assert points == sorted(points)
    assert all(0.0 < p < 1.0 for p in points)
    assert scale_points(0.0, 1.0, 0.0, 0.0) == []
