"""Adaptive quadrature wrappers.

scipy's QUADPACK driver does the work; these helpers add breakpoint
placement around a known length scale, the s = s0 + u^2 substitution for
inverse-square-root endpoints, and turn every non-converged integral into a
QuadratureError instead of a warning.
"""
import math

from scipy import integrate

from utils.errors import QuadratureError

DEFAULT_QUAD_TOL = 1e-10
MAX_SUBDIVISIONS = 500


def scale_points(lo, hi, origin, scale, factors=(0.1, 0.3, 1.0, 3.0, 10.0)):
    '''Breakpoints origin + f*scale that fall strictly inside (lo, hi)'''
    if not scale > 0:
        return []
    points = sorted({origin + f * scale for f in factors})
    return [p for p in points if lo < p < hi]


def adaptive_quad(func, lo, hi, rel_tol=DEFAULT_QUAD_TOL, points=None, label='integral'):
    """Integrate func over [lo, hi] to relative tolerance rel_tol.

    Raises QuadratureError when QUADPACK reports a problem or the error
    estimate exceeds the requested tolerance.
    """
    if hi <= lo:
        return 0.0

    result = integrate.quad(
        func, lo, hi,
        epsabs=0.0, epsrel=rel_tol,
        limit=MAX_SUBDIVISIONS,
        points=points or None,
        full_output=1,
    )
    value, abserr = result[0], result[1]

    if len(result) > 3:
        raise QuadratureError(f'{label} on [{lo:.6g}, {hi:.6g}]: {result[3].strip()}')

    if not math.isfinite(value):
        raise QuadratureError(f'{label} on [{lo:.6g}, {hi:.6g}] is not finite')

    # QUADPACK may stop at its own roundoff limit without flagging it
    if abserr > max(10.0 * rel_tol * abs(value), 1e-300):
        raise QuadratureError(
            f'{label}: error estimate {abserr:.3g} above tolerance for value {value:.6g}'
        )

    return value


def sqrt_endpoint_quad(regularized, s0, s1, rel_tol=DEFAULT_QUAD_TOL, u_scale=None, label='integral'):
    '''Integral over [s0, s1] of an integrand with a (s - s0)^(-1/2) endpoint.

    Uses s = s0 + u^2, so ds = 2u du; `regularized(u)` must return the
    already-multiplied 2u * g(s0 + u^2), which is bounded as u -> 0.
    '''
    u_max = math.sqrt(max(s1 - s0, 0.0))
    points = scale_points(0.0, u_max, 0.0, u_scale) if u_scale else None
    return adaptive_quad(regularized, 0.0, u_max, rel_tol, points=points, label=label)
