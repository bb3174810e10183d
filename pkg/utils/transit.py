"""Geodesic integration and the transition map through the surface of revolution.

The closed-form side works with the gap ||c| - 1| rather than with c
itself, so bands close to the asymptotic family keep full relative
precision. Neck integrals use the neck depth x = |s| - L as variable.
"""
from functools import partial
import math
import warnings

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from models.geometry import (
    BandIndex, GeodesicKind, GeodesicState, Trajectory, TransitionResult, UnitVector,
)
from models.reports import StatReport
from utils.errors import ConvergenceError, DegenerateFitError, DomainError, KindError, TangencyError
from utils.parallel import pool_map, stream
from utils.quadrature import DEFAULT_QUAD_TOL, adaptive_quad, scale_points, sqrt_endpoint_quad
from utils.stats import geometric_mean, loglog_fit
from utils.surface import TOL_C, TWO_PI, clairaut, classify, kind_of_constant, xi, xi_prime

DEFAULT_ODE_TOL = 1e-9
SECTION_TOL = 1e-9
ODE_HORIZON = 1e4
NEAR_GAP_MIN = 1e-9
NEAR_GAP_MAX = 1e-5

QUANTITIES = ('Upsilon1', 'Upsilon2', 'ZetaPrime', 'ZetaDoublePrime')


# ---------------------------------------------------------------------------
# geodesic ODE
# ---------------------------------------------------------------------------

def _ode_rtol(tol):
    return max(tol * 1e-3, 1e-13)


def _geodesic_rhs(params):
    def rhs(t, y):
        s, _, psi = y
        x = xi(params, s)
        xp = xi_prime(params, s)
        w = math.sqrt(1.0 + xp * xp)
        cos_psi = math.cos(psi)
        return [math.sin(psi) / w, cos_psi / x, xp * cos_psi / (x * w)]
    return rhs


def _boundary_event(bound):
    def leaves(t, y):
        return abs(y[0]) - bound
    leaves.terminal = True
    leaves.direction = 1.0
    return leaves


def _turning_event(t, y):
    return math.sin(y[2])


_turning_event.terminal = False


def integrate(params, x, T, tol=DEFAULT_ODE_TOL, bound=None, turning_events=True, dense_output=False):
    """Integrate the geodesic through x for time T.

    The run halts early when |s| reaches `bound` (default eps0) from inside;
    the exit time is then recorded on the trajectory. Turning points
    (psi crossing 0 or pi) are recorded as non-terminal events.
    """
    if not abs(x.s) <= params.eps0:
        raise DomainError(f's = {x.s!r} outside [-{params.eps0}, {params.eps0}]')
    if not (math.isfinite(T) and T >= 0):
        raise DomainError(f'Integration time must be finite and nonnegative (got {T})')
    if not tol > 0:
        raise DomainError('ODE tolerance must be positive')

    bound = params.eps0 if bound is None else bound
    events = [_boundary_event(bound)]
    if turning_events:
        events.append(_turning_event)

    rtol = _ode_rtol(tol)
    sol = solve_ivp(
        _geodesic_rhs(params), (0.0, T), [x.s, x.theta, x.psi],
        method='DOP853', rtol=rtol, atol=rtol, events=events, dense_output=dense_output,
    )
    if sol.status == -1:
        raise TangencyError(f'Integration from {x} failed: {sol.message}')

    states = [GeodesicState(float(t), float(s), float(th), float(p))
              for t, s, th, p in zip(sol.t, sol.y[0], sol.y[1], sol.y[2])]

    c0 = xi(params, x.s) * math.cos(x.psi)
    drift = max(abs(xi(params, st.s) * math.cos(st.psi) - c0) for st in states)

    exit_time = float(sol.t_events[0][0]) if sol.status == 1 else None
    turning = [float(t) for t in sol.t_events[1]] if turning_events else []

    return Trajectory(
        states=states, exit_time=exit_time, turning_times=turning,
        clairaut_drift=drift, dense=sol.sol,
    )


def transition_by_ode(params, x, tol=DEFAULT_ODE_TOL, horizon=ODE_HORIZON, tol_c=TOL_C):
    '''Direct ODE oracle for the transition map.

    Returns (theta advance, Omega-to-Omega time, exit vector).
    '''
    if classify(params, x, tol_c) is GeodesicKind.ASYMPTOTIC:
        raise KindError('Asymptotic geodesics never leave the surface of revolution')

    trajectory = integrate(params, x, horizon, tol, bound=params.eps1, turning_events=False)
    if trajectory.exit_time is None:
        raise ConvergenceError(f'No exit from |s| < eps1 within time {horizon}')

    final = trajectory.final
    exit_vector = UnitVector(final.s, final.theta % TWO_PI, math.remainder(final.psi, TWO_PI))
    return final.theta - x.theta, trajectory.exit_time, exit_vector


# ---------------------------------------------------------------------------
# closed-form integrals
# ---------------------------------------------------------------------------

def _neck_width(params):
    return params.eps1 - params.L


def _crossing_terms(params, gap, x):
    '''(xi, sqrt(1 + xi'^2), xi^2 - c^2) at neck depth x for |c| = 1 - gap'''
    r = params.r
    xr = x ** r
    xi_s = 1.0 + xr
    xp = r * x ** (r - 1.0)
    return xi_s, math.sqrt(1.0 + xp * xp), (gap + xr) * (xi_s + 1.0 - gap)


def _crossing_neck(params, gap, weight, tol, label):
    width = _neck_width(params)
    points = scale_points(0.0, width, 0.0, gap ** (1.0 / params.r))
    m = 1.0 - gap

    def integrand(x):
        xi_s, w, q = _crossing_terms(params, gap, x)
        return weight(m, xi_s, w, q)

    return adaptive_quad(integrand, 0.0, width, tol, points=points, label=label)


def _turning_depth(params, gap):
    b = gap ** (1.0 / params.r)
    if not b < _neck_width(params):
        raise KindError(f'Turning point at depth {b:.6g} lies outside the transition window')
    return b


def _bouncing_terms(params, gap, b, u):
    '''(xi, sqrt(1 + xi'^2), 2u / sqrt(xi^2 - c^2)) at depth b + u^2'''
    r = params.r
    t = u * u / b
    depth = b + u * u
    xi_s = 1.0 + depth ** r
    xp = r * depth ** (r - 1.0)
    # (xi - |c|) / u^2, free of cancellation near the turning point
    if t < 1e-8:
        ratio = r * b ** (r - 1.0) * (1.0 + 0.5 * (r - 1.0) * t)
    else:
        ratio = b ** r * math.expm1(r * math.log1p(t)) / (u * u)
    return xi_s, math.sqrt(1.0 + xp * xp), 2.0 / math.sqrt(ratio * (xi_s + 1.0 + gap))


def _bouncing_neck(params, gap, weight, tol, label):
    b = _turning_depth(params, gap)
    m = 1.0 + gap

    def regularized(u):
        xi_s, w, k = _bouncing_terms(params, gap, b, u)
        return weight(m, xi_s, w) * k

    return sqrt_endpoint_quad(
        regularized, b, _neck_width(params), tol, u_scale=math.sqrt(b), label=label,
    )


def _neck_time(params, kind, gap, tol):
    """Upsilon_1: time spent in one neck"""
    if kind is GeodesicKind.CROSSING:
        return _crossing_neck(params, gap, lambda m, xi_s, w, q: xi_s * w / math.sqrt(q), tol, 'Upsilon1')
    return _bouncing_neck(params, gap, lambda m, xi_s, w: xi_s * w, tol, 'Upsilon1')


def _cylinder_time(params, kind, gap):
    '''Upsilon_2: half the time spent on the flat cylinder'''
    if kind is GeodesicKind.BOUNCING:
        return 0.0
    return params.L / math.sqrt(gap * (2.0 - gap))


def _zeta(params, kind, gap, tol):
    if kind is GeodesicKind.CROSSING:
        m = 1.0 - gap
        if m == 0.0:
            return 0.0
        flat = params.L * m / math.sqrt(gap * (2.0 - gap))
        neck = _crossing_neck(params, gap, lambda m, xi_s, w, q: m * w / (xi_s * math.sqrt(q)), tol, 'zeta')
        return 2.0 * (flat + neck)
    return 2.0 * _bouncing_neck(params, gap, lambda m, xi_s, w: m * w / xi_s, tol, 'zeta')


def _crossing_zeta_m(params, gap, tol, second=False):
    '''d zeta / d|c| and, optionally, d^2 zeta / d|c|^2 for a crossing excursion'''
    m = 1.0 - gap
    one_minus_m2 = gap * (2.0 - gap)
    L = params.L
    first = 2.0 * (L * one_minus_m2 ** -1.5 + _crossing_neck(
        params, gap, lambda m, xi_s, w, q: xi_s * w * q ** -1.5, tol, 'zeta_m'))
    if not second:
        return first, None
    second_value = 6.0 * m * (L * one_minus_m2 ** -2.5 + _crossing_neck(
        params, gap, lambda m, xi_s, w, q: xi_s * w * q ** -2.5, tol, 'zeta_mm'))
    return first, second_value


def _bouncing_zeta_m(params, gap, tol):
    """d zeta / d|c| for a bouncing excursion.

    Written in y = xi and z = sqrt(y^2 - c^2), where the integrand is regular
    and the c-derivative can be taken under the integral sign.
    """
    r = params.r
    m = 1.0 + gap
    a = params.xi_eps1
    a_minus_m = (a - 1.0) - gap
    if not a_minus_m > 0:
        raise KindError('Clairaut constant outside the transition window')
    z_max = math.sqrt(a_minus_m * (a + m))

    def g_and_slope(y_minus_1, y):
        q = r * y_minus_1 ** ((r - 1.0) / r)
        dq = (r - 1.0) * y_minus_1 ** (-1.0 / r)
        root = math.sqrt(1.0 + q * q)
        g = root / (y * y * q)
        dg = -dq / (y * y * q * q * root) - 2.0 * root / (y ** 3 * q)
        return g, dg

    def integrand(z):
        y = math.sqrt(m * m + z * z)
        g, dg = g_and_slope(gap + z * z / (y + m), y)
        return g + m * m * dg / y

    points = scale_points(0.0, z_max, 0.0, math.sqrt(2.0 * gap))
    body = adaptive_quad(integrand, 0.0, z_max, tol, points=points, label='zeta_m')
    g_end, _ = g_and_slope(a - 1.0, a)
    return 2.0 * body - 2.0 * m * m * g_end / z_max


def _richardson(f, x0, h):
    coarse = (f(x0 + h) - f(x0 - h)) / (2.0 * h)
    fine = (f(x0 + 0.5 * h) - f(x0 - 0.5 * h)) / h
    return (4.0 * fine - coarse) / 3.0


def _zeta_m_pair(params, kind, gap, tol, second=True):
    if kind is GeodesicKind.CROSSING:
        return _crossing_zeta_m(params, gap, tol, second)

    first = _bouncing_zeta_m(params, gap, tol)
    if not second:
        return first, None
    # no closed form for the bouncing second derivative; report-only
    h = min(1e-2 * gap, 0.25 * ((params.xi_eps1 - 1.0) - gap))
    return first, _richardson(lambda g: _bouncing_zeta_m(params, g, tol), gap, h)


def _psi_derivatives(params, kind, gap, zm, zmm):
    '''Chain rule from |c| to psi on the section; returns (dzeta/dpsi, d2zeta/dpsi2) for c > 0, psi in (0, pi/2)'''
    a = params.xi_eps1
    m = 1.0 - gap if kind is GeodesicKind.CROSSING else 1.0 + gap
    a_minus_m = (a - 1.0) + gap if kind is GeodesicKind.CROSSING else (a - 1.0) - gap
    a_sin_sq = a_minus_m * (a + m)
    zp = -zm * math.sqrt(a_sin_sq)
    zpp = None if zmm is None else zmm * a_sin_sq - m * zm
    return zp, zpp


def _kind_and_gap(c):
    gap = abs(abs(c) - 1.0)
    if gap == 0.0:
        raise KindError('|c| = 1: asymptotic geodesics have no transition')
    return (GeodesicKind.BOUNCING if abs(c) > 1.0 else GeodesicKind.CROSSING), gap


def turning_point(params, c):
    """s0 > 0 with xi(s0) = |c| (the left turning point is -s0)"""
    m = abs(c)
    if m < 1.0:
        raise KindError(f'|c| = {m} < 1: crossing geodesics do not turn')
    s0 = params.L + (m - 1.0) ** (1.0 / params.r)
    if s0 > params.eps1:
        raise KindError(f'Turning point {s0:.6g} beyond eps1 = {params.eps1}')
    return s0


def zeta_deflection(params, c, quad_tol=DEFAULT_QUAD_TOL):
    '''Angular deflection zeta >= 0 of the excursion with Clairaut constant c'''
    if c == 0:
        return 0.0
    kind, gap = _kind_and_gap(c)
    return _zeta(params, kind, gap, quad_tol)


def zeta_derivatives(params, psi, quad_tol=DEFAULT_QUAD_TOL, tol_c=TOL_C):
    """(zeta', zeta'') with respect to the section angle psi.

    zeta is the unsigned deflection of the vector at |s| = eps1 with
    c = xi(eps1) cos(psi).
    """
    a = params.xi_eps1
    c = a * math.cos(psi)
    kind = kind_of_constant(c, tol_c)
    if kind is GeodesicKind.ASYMPTOTIC:
        raise KindError('psi is the asymptotic angle')
    gap = abs(abs(c) - 1.0)
    zm, zmm = _zeta_m_pair(params, kind, gap, quad_tol)
    zp, zpp = _psi_derivatives(params, kind, gap, zm, zmm)
    # the formulas above hold for sin(psi) cos(psi) > 0; the other quadrants mirror
    orientation = math.copysign(1.0, math.sin(psi)) * math.copysign(1.0, math.cos(psi))
    return orientation * zp, zpp


def half_times(params, c, quad_tol=DEFAULT_QUAD_TOL):
    '''(Upsilon_1, Upsilon_2)'''
    kind, gap = _kind_and_gap(c)
    return _neck_time(params, kind, gap, quad_tol), _cylinder_time(params, kind, gap)


def transition(params, x, quad_tol=DEFAULT_QUAD_TOL, tol_c=TOL_C):
    """Closed-form transition map f0 for x on |s| = eps1 pointing inwards"""
    if abs(abs(x.s) - params.eps1) > SECTION_TOL:
        raise DomainError(f'{x} is not on the transition section |s| = {params.eps1}')

    kind = classify(params, x, tol_c)
    if kind is GeodesicKind.ASYMPTOTIC:
        raise KindError(f'{x} is asymptotic to the flat cylinder')

    c = clairaut(params, x)
    gap = abs(abs(c) - 1.0)
    upsilon1 = _neck_time(params, kind, gap, quad_tol)
    upsilon2 = _cylinder_time(params, kind, gap)
    zeta = math.copysign(_zeta(params, kind, gap, quad_tol), c)
    theta = (x.theta + zeta) % TWO_PI

    if kind is GeodesicKind.BOUNCING:
        exit_vector = UnitVector(x.s, theta, -x.psi)
        turning_s = math.copysign(params.L + gap ** (1.0 / params.r), x.s)
    else:
        exit_vector = UnitVector(-x.s, theta, x.psi)
        turning_s = None

    return TransitionResult(
        kind=kind, exit=exit_vector,
        upsilon0=upsilon1 + upsilon2, upsilon1=upsilon1, upsilon2=upsilon2,
        zeta=zeta, band=band_of(params, x), turning_s=turning_s,
    )


# ---------------------------------------------------------------------------
# homogeneity bands
# ---------------------------------------------------------------------------

def band_gaps_bounds(n):
    '''(1/(n+1)^2, 1/n^2): the gap range of band n'''
    return 1.0 / (n + 1) ** 2, 1.0 / (n * n)


def band_interval(n, kind):
    """Open interval of |c| for band n of the given kind"""
    if n < 1:
        raise DomainError(f'Band index must be positive (got {n})')
    lo_gap, hi_gap = band_gaps_bounds(n)
    if kind is GeodesicKind.BOUNCING:
        return 1.0 + lo_gap, 1.0 + hi_gap
    if kind is GeodesicKind.CROSSING:
        return 1.0 - hi_gap, 1.0 - lo_gap
    raise KindError('Asymptotic vectors belong to no band')


def band_of_constant(c, n0):
    m = abs(c)
    if m == 1.0 or not math.isfinite(m):
        return None
    kind = GeodesicKind.BOUNCING if m > 1.0 else GeodesicKind.CROSSING
    side = 1 if c > 0 else -1
    guess = int(math.floor(1.0 / math.sqrt(abs(m - 1.0))))
    for n in (guess - 1, guess, guess + 1):
        if n < max(n0, 1):
            continue
        lo, hi = band_interval(n, kind)
        if lo < m < hi:
            return BandIndex(n, kind, side)
    return None


def band_of(params, x):
    return band_of_constant(clairaut(params, x), params.n0)


def band_gaps(params, band, count, rng=None):
    '''Gaps ||c| - 1| inside the band: a midpoint grid, or uniform draws when rng is given'''
    lo_gap, hi_gap = band_gaps_bounds(band.n)
    if band.kind is GeodesicKind.BOUNCING and hi_gap > params.xi_eps1 - 1.0:
        raise KindError(f'Band {band.label} reaches beyond the transition window')
    if rng is None:
        fractions = (np.arange(count) + 0.5) / count
    else:
        fractions = rng.uniform(size=count)
    return lo_gap + (hi_gap - lo_gap) * fractions


def constant_from_gap(kind, gap, side=1):
    m = 1.0 + gap if kind is GeodesicKind.BOUNCING else 1.0 - gap
    return side * m


def entry_vector(params, c, side=-1, theta=0.0):
    """Vector on s = side * eps1 pointing into the neck with Clairaut constant c"""
    a = params.xi_eps1
    if not abs(c) < a:
        raise DomainError(f'|c| = {abs(c)} must be below xi(eps1) = {a}')
    psi = math.acos(c / a)
    return UnitVector(side * params.eps1, theta, psi if side < 0 else -psi)


def sample_band(params, band, count, rng=None, side=-1):
    '''Entry vectors on s = side * eps1 with constants in the band; random theta when rng is given'''
    gaps = band_gaps(params, band, count, rng)
    thetas = np.zeros(count) if rng is None else rng.uniform(0.0, TWO_PI, count)
    return [entry_vector(params, constant_from_gap(band.kind, g, band.side), side, float(th))
            for g, th in zip(gaps, thetas)]


# ---------------------------------------------------------------------------
# scaling and distortion experiments
# ---------------------------------------------------------------------------

def expected_exponent(params, quantity, kind):
    r = params.r
    bouncing = kind is GeodesicKind.BOUNCING
    return {
        'Upsilon1': (r - 2.0) / r,
        'Upsilon2': 1.0,
        'ZetaPrime': 3.0 - 2.0 / r if bouncing else 3.0,
        'ZetaDoublePrime': 5.0 - 2.0 / r if bouncing else 5.0,
    }[quantity]


def quantity_at_gap(params, quantity, kind, gap, quad_tol=DEFAULT_QUAD_TOL):
    if quantity == 'Upsilon1':
        return _neck_time(params, kind, gap, quad_tol)
    if quantity == 'Upsilon2':
        return _cylinder_time(params, kind, gap)
    zm, zmm = _zeta_m_pair(params, kind, gap, quad_tol, second=quantity == 'ZetaDoublePrime')
    zp, zpp = _psi_derivatives(params, kind, gap, zm, zmm)
    return zp if quantity == 'ZetaPrime' else zpp


def _band_statistic(params, quantity, kind, samples, quad_tol, n):
    gaps = band_gaps(params, BandIndex(n, kind), samples)
    return geometric_mean([quantity_at_gap(params, quantity, kind, g, quad_tol) for g in gaps])


def band_grid(lo, hi, count):
    '''About `count` log-spaced distinct band indices in [lo, hi]'''
    return [int(n) for n in np.unique(np.round(np.geomspace(lo, hi, count)).astype(int))]


def scaling_report(params, quantity, kind, n_values, samples_per_band=5,
                   quad_tol=DEFAULT_QUAD_TOL, workers=1):
    """Log-log fit of the per-band geometric mean of `quantity` against n"""
    if quantity not in QUANTITIES:
        raise DomainError(f'Unknown quantity {quantity!r}; expected one of {QUANTITIES}')
    if samples_per_band < 3:
        raise DomainError('samples_per_band must be at least 3')
    if kind is GeodesicKind.ASYMPTOTIC:
        raise KindError('Scaling laws are per band; asymptotic vectors have none')

    n_values = sorted(set(int(n) for n in n_values))
    if any(n < params.n0 for n in n_values):
        raise DomainError(f'Band indices must be >= n0 = {params.n0}')
    if len(n_values) < 3:
        raise DegenerateFitError(f'{quantity}: need at least 3 bands, got {len(n_values)}')
    if quantity == 'Upsilon2' and kind is GeodesicKind.BOUNCING:
        raise DegenerateFitError('Upsilon2 vanishes identically for bouncing excursions')

    values = pool_map(
        partial(_band_statistic, params, quantity, kind, samples_per_band, quad_tol),
        n_values, workers,
    )
    fit = loglog_fit(n_values, values, label=quantity)

    report = StatReport(experiment=f'scaling_{quantity}_{kind.value}')
    report.metrics.update(fit)
    report.metrics.update({
        'quantity': quantity,
        'kind': kind.value,
        'expected_slope': expected_exponent(params, quantity, kind),
        'bands': len(n_values),
    })
    for n, value in zip(n_values, values):
        report.add_row(band_n=n, kind=kind.symbol, quantity=quantity, value=value)
    return report


def _band_point(params, kind, gap, quad_tol):
    a = params.xi_eps1
    m = constant_from_gap(kind, gap)
    zm, _ = _zeta_m_pair(params, kind, gap, quad_tol, second=False)
    zp, _ = _psi_derivatives(params, kind, gap, zm, None)
    return {
        'psi': math.acos(m / a),
        'zeta': _zeta(params, kind, gap, quad_tol),
        'zeta_p': zp,
        'upsilon0': _neck_time(params, kind, gap, quad_tol) + _cylinder_time(params, kind, gap),
    }


def distortion_check(params, band, pairs, quad_tol=DEFAULT_QUAD_TOL, seed=0):
    '''Empirical distortion and time-Lipschitz constants over random pairs inside one band'''
    if pairs < 1:
        raise DomainError('pairs must be positive')

    gaps = band_gaps(params, band, 2 * pairs, stream(seed, band.n))
    points = [_band_point(params, band.kind, g, quad_tol) for g in gaps]

    report = StatReport(experiment=f'distortion_{band.label}', seed=seed)
    sup_distortion = 0.0
    sup_time = 0.0
    for p, q in zip(points[:pairs], points[pairs:]):
        d_psi = abs(p['psi'] - q['psi'])
        d_img = abs(p['zeta'] - q['zeta']) + d_psi
        if d_img == 0.0:
            distortion = time_ratio = 0.0
        else:
            distortion = abs(math.log(abs(p['zeta_p'])) - math.log(abs(q['zeta_p']))) / d_img ** (1.0 / 3.0)
            time_ratio = abs(2.0 * p['upsilon0'] - 2.0 * q['upsilon0']) / (d_psi + d_img)
        sup_distortion = max(sup_distortion, distortion)
        sup_time = max(sup_time, time_ratio)
        report.add_row(band_n=band.n, kind=band.kind.symbol, d_img=d_img,
                       distortion=distortion, time_ratio=time_ratio)

    report.metrics.update({
        'band': band.label,
        'pairs': pairs,
        'sup_distortion': sup_distortion,
        'sup_time_ratio': sup_time,
    })
    return report


def band_width_coefficient(params):
    """Limit of n^3 times the exit-angle spread of a band"""
    a = params.xi_eps1
    return 2.0 / math.sqrt((a - 1.0) * (a + 1.0))


def band_width_check(params, n_values, kind):
    a = params.xi_eps1
    coefficient = band_width_coefficient(params)
    report = StatReport(experiment=f'band_width_{kind.value}')
    for n in sorted(set(int(n) for n in n_values)):
        lo_gap, hi_gap = band_gaps_bounds(n)
        if kind is GeodesicKind.BOUNCING and hi_gap > a - 1.0:
            raise KindError(f'Band {n}> reaches beyond the transition window')
        lo, hi = band_interval(n, kind)
        # |psi_exit| = |psi_in|, so the exit spread is the entry spread
        width = abs(math.acos(lo / a) - math.acos(hi / a))
        measured = n ** 3 * width
        report.add_row(band_n=n, kind=kind.symbol, width=width,
                       measured=measured, ratio=measured / coefficient)

    report.metrics.update({
        'coefficient': coefficient,
        'last_ratio': report.rows[-1]['ratio'] if report.rows else math.nan,
    })
    return report


def monotonicity_check(params, kind, n_values, samples_per_band=3, quad_tol=DEFAULT_QUAD_TOL):
    '''Count grid points where Upsilon0 or zeta fail to decrease as the gap grows'''
    gaps = np.sort(np.concatenate([
        band_gaps(params, BandIndex(int(n), kind), samples_per_band) for n in n_values
    ]))
    times = [_neck_time(params, kind, g, quad_tol) + _cylinder_time(params, kind, g) for g in gaps]
    zetas = [_zeta(params, kind, g, quad_tol) for g in gaps]

    time_violations = int(np.sum(np.diff(times) > 0))
    zeta_violations = int(np.sum(np.diff(zetas) > 0))
    if time_violations or zeta_violations:
        warnings.warn(f'{kind.value}: monotonicity violated at '
                      f'{time_violations + zeta_violations} grid points')

    report = StatReport(experiment=f'monotonicity_{kind.value}')
    report.metrics.update({
        'grid_points': int(gaps.size),
        'time_violations': time_violations,
        'zeta_violations': zeta_violations,
    })
    for g, t, z in zip(gaps, times, zetas):
        report.add_row(gap=float(g), upsilon0=t, zeta=z)
    return report


# ---------------------------------------------------------------------------
# ODE cross-checks
# ---------------------------------------------------------------------------

def _run_of(params, T, tol, x):
    trajectory = integrate(params, x, T, tol)
    span = T if trajectory.exit_time is None else trajectory.exit_time
    return trajectory.clairaut_drift, span, len(trajectory.turning_times)


def _near_asymptotic_starts(params, count, rng):
    """Entry vectors with log-uniform gaps ||c| - 1| in [1e-9, 1e-5], alternating kinds"""
    gaps = np.exp(rng.uniform(math.log(NEAR_GAP_MIN), math.log(NEAR_GAP_MAX), count))
    starts = []
    for i, gap in enumerate(gaps):
        kind = GeodesicKind.BOUNCING if i % 2 else GeodesicKind.CROSSING
        side = 1 if rng.uniform() < 0.5 else -1
        starts.append(entry_vector(params, constant_from_gap(kind, float(gap), side),
                                   theta=float(rng.uniform(0.0, TWO_PI))))
    return starts


def conservation_check(params, samples=10_000, T=1e3, seed=0, tol=DEFAULT_ODE_TOL, workers=1):
    """sup |c(t) - c(0)| over random geodesics run for time T (or until they leave).

    Half of the starts are uniform on the surface and mostly leave within
    a few time units; the other half enter the neck close to the
    asymptotic constant and stay for long stretches.
    """
    rng = stream(seed, 0)
    uniform = samples - samples // 2
    starts = [
        UnitVector(float(s), float(th), float(p))
        for s, th, p in zip(rng.uniform(-params.eps0, params.eps0, uniform),
                            rng.uniform(0.0, TWO_PI, uniform),
                            rng.uniform(-math.pi, math.pi, uniform))
    ]
    starts += _near_asymptotic_starts(params, samples // 2, rng)
    results = pool_map(partial(_run_of, params, T, tol), starts, workers)
    drifts = np.array([d for d, _, _ in results])
    spans = np.array([span for _, span, _ in results])

    report = StatReport(experiment='clairaut_conservation', seed=seed)
    report.metrics.update({
        'samples': samples,
        'near_asymptotic': samples // 2,
        'horizon': T,
        'max_drift': float(drifts.max()),
        'exited': int(np.sum(spans < T)),
        'full_horizon': int(np.sum(spans >= T)),
        'span_max': float(spans.max()),
        'span_median': float(np.median(spans)),
        'turning_points': int(sum(turns for _, _, turns in results)),
    })
    for q in (0.5, 0.9, 0.99, 1.0):
        report.add_row(quantile=q, drift=float(np.quantile(drifts, q)))
    return report


def _oracle_point(params, quad_tol, ode_tol, x):
    result = transition(params, x, quad_tol)
    advance, time, _ = transition_by_ode(params, x, ode_tol)
    return result, advance, time


def transition_oracle_check(params, count=1000, n_max=50, seed=0, quad_tol=DEFAULT_QUAD_TOL,
                            ode_tol=DEFAULT_ODE_TOL, workers=1):
    '''Closed-form zeta and 2 Upsilon_0 against the ODE on random band vectors of both kinds'''
    rng = stream(seed, 0)
    lowest_bouncing = max(params.n0, math.ceil(1.0 / math.sqrt(params.xi_eps1 - 1.0)))
    entries = []
    for i in range(count):
        kind = GeodesicKind.BOUNCING if i % 2 and lowest_bouncing <= n_max else GeodesicKind.CROSSING
        lo = lowest_bouncing if kind is GeodesicKind.BOUNCING else params.n0
        band = BandIndex(int(rng.integers(lo, n_max + 1)), kind, 1 if rng.uniform() < 0.5 else -1)
        entries.append((band, sample_band(params, band, 1, rng)[0]))

    results = pool_map(partial(_oracle_point, params, quad_tol, ode_tol), [x for _, x in entries], workers)

    report = StatReport(experiment='transition_oracle', seed=seed)
    zeta_errors, time_errors = [], []
    for (band, x), (result, advance, time) in zip(entries, results):
        zeta_error = abs(result.zeta - advance)
        time_error = abs(2.0 * result.upsilon0 - time)
        zeta_errors.append(zeta_error)
        time_errors.append(time_error)
        report.add_row(kind=band.kind.symbol, band_n=band.n, c=clairaut(params, x),
                       zeta=result.zeta, ode_advance=advance, zeta_error=zeta_error,
                       time=2.0 * result.upsilon0, ode_time=time, time_error=time_error)

    report.metrics.update({
        'vectors': count,
        'max_zeta_error': max(zeta_errors),
        'max_time_error': max(time_errors),
    })
    return report


# ---------------------------------------------------------------------------
# tabulated neck time
# ---------------------------------------------------------------------------

def _neck_time_at(params, kind, quad_tol, gap):
    return _neck_time(params, kind, gap, quad_tol)


class NeckTimeTable:
    """Upsilon_1 as a function of the gap ||c| - 1| for one kind.

    Monotone cubic interpolation in log-log coordinates between the
    tabulated gaps; below the smallest gap the table continues with the
    leading power law gap^(-(r-2)/(2r)).
    """

    def __init__(self, params, kind, gaps, values):
        self.params = params
        self.kind = kind
        self.gaps = np.asarray(gaps, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.exponent = -(params.r - 2.0) / (2.0 * params.r)
        self._interp = PchipInterpolator(np.log(self.gaps), np.log(self.values), extrapolate=False)

    @classmethod
    def build(cls, params, kind, gap_min, gap_max, points=64, quad_tol=DEFAULT_QUAD_TOL, workers=1):
        if not 0 < gap_min < gap_max:
            raise DomainError('Need 0 < gap_min < gap_max')
        if kind is GeodesicKind.BOUNCING:
            _turning_depth(params, gap_max)
        gaps = np.geomspace(gap_min, gap_max, points)
        values = pool_map(partial(_neck_time_at, params, kind, quad_tol), gaps.tolist(), workers)
        if np.any(np.diff(values) > 0):
            warnings.warn(f'Neck time table for {kind.value} is not monotone')
        return cls(params, kind, gaps, values)

    def __call__(self, gaps):
        g = np.atleast_1d(np.asarray(gaps, dtype=float))
        if np.any(g <= 0) or np.any(g > self.gaps[-1] * (1.0 + 1e-12)):
            raise DomainError(f'Gap outside (0, {self.gaps[-1]:.6g}]')

        out = np.empty_like(g)
        low = g < self.gaps[0]
        inside = ~low
        out[inside] = np.exp(self._interp(np.log(np.minimum(g[inside], self.gaps[-1]))))
        out[low] = self.values[0] * (g[low] / self.gaps[0]) ** self.exponent
        return out if np.ndim(gaps) else float(out[0])
