"""Profile, curvature and Clairaut integral of the surface of revolution.

Everything here is a pure function of (params, inputs).
"""
import math

from scipy import integrate

from models.geometry import GeodesicKind, UnitVector
from utils.errors import DirectionError, DomainError

TOL_C = 1e-12
TWO_PI = 2.0 * math.pi


def _check_s(params, s):
    if not abs(s) <= params.eps0:
        raise DomainError(f's = {s!r} outside [-{params.eps0}, {params.eps0}]')


def xi(params, s):
    '''Profile value without the domain check (used inside integrators)'''
    a = abs(s) - params.L
    if a <= 0.0:
        return 1.0
    return 1.0 + a ** params.r


def xi_prime(params, s):
    a = abs(s) - params.L
    if a <= 0.0:
        return 0.0
    return math.copysign(params.r * a ** (params.r - 1.0), s)


def xi_double_prime(params, s):
    a = abs(s) - params.L
    if a <= 0.0:
        return 0.0
    return params.r * (params.r - 1.0) * a ** (params.r - 2.0)


def profile(params, s):
    """Return (xi, xi', xi'') at s"""
    _check_s(params, s)
    return xi(params, s), xi_prime(params, s), xi_double_prime(params, s)


def gauss_curvature(params, s):
    '''K(s) = -xi'' / (xi (1 + xi'^2)^2), unchecked'''
    a = abs(s) - params.L
    if a <= 0.0:
        return 0.0
    x, xp, xpp = xi(params, s), xi_prime(params, s), xi_double_prime(params, s)
    return -xpp / (x * (1.0 + xp * xp) ** 2)


def curvature(params, s):
    _check_s(params, s)
    return gauss_curvature(params, s)


def curvature_derivative(params, s):
    """dK/ds; zero on the cylinder"""
    _check_s(params, s)
    a = abs(s) - params.L
    if a <= 0.0:
        return 0.0
    r = params.r
    x, xp, xpp = xi(params, s), xi_prime(params, s), xi_double_prime(params, s)
    xppp = math.copysign(r * (r - 1.0) * (r - 2.0) * a ** (r - 3.0), s)
    w = 1.0 + xp * xp
    d = x * w * w
    d_prime = w * (xp * w + 4.0 * x * xp * xpp)
    return -(xppp * d - xpp * d_prime) / (d * d)


def neck_depth(params, s):
    '''a = |s| - L clamped at 0'''
    return max(abs(s) - params.L, 0.0)


def arc_length(params, s0, s1):
    """Length of the meridian segment between s0 and s1"""
    _check_s(params, s0)
    _check_s(params, s1)
    lo, hi = min(s0, s1), max(s0, s1)
    points = [p for p in (-params.L, params.L) if lo < p < hi]
    value, _ = integrate.quad(
        lambda s: math.sqrt(1.0 + xi_prime(params, s) ** 2), lo, hi,
        points=points or None, epsabs=0.0, epsrel=1e-12, limit=200,
    )
    return value


def clairaut(params, x):
    """Clairaut constant c = xi(s) cos(psi)"""
    _check_s(params, x.s)
    return xi(params, x.s) * math.cos(x.psi)


def reverse(x):
    '''Time reversal: same footpoint, opposite direction'''
    return UnitVector(x.s, x.theta, math.remainder(x.psi + math.pi, TWO_PI))


def acute_angle(psi):
    '''Reference angle in [0, pi/2] between the direction and the parallel'''
    return abs(math.remainder(psi, math.pi))


def asymptotic_angle(params):
    """psi_0 in (0, pi/2) with xi(eps1) cos(psi_0) = 1"""
    return math.acos(1.0 / params.xi_eps1)


def points_toward_cylinder(params, x):
    if abs(x.s) <= params.L:
        return True
    return x.s * math.sin(x.psi) < 0.0


def kind_of_constant(c, tol_c=TOL_C):
    '''Classify a Clairaut constant by |c| against 1'''
    gap = abs(c) - 1.0
    if gap > tol_c:
        return GeodesicKind.BOUNCING
    if gap < -tol_c:
        return GeodesicKind.CROSSING
    return GeodesicKind.ASYMPTOTIC


def classify(params, x, tol_c=TOL_C):
    if tol_c <= 0:
        raise DomainError('tol_c must be positive')
    if not points_toward_cylinder(params, x):
        raise DirectionError(f'{x} points away from the flat cylinder')
    return kind_of_constant(clairaut(params, x), tol_c)
