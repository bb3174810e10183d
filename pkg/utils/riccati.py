"""Riccati solutions along geodesics and the curvature estimates they satisfy.

k_plus(x) is u(0) for the unstable solution of u' = -u^2 - K(gamma(t)),
gamma the geodesic through x. Outside the surface of revolution the
curvature is the constant -kappa_cap, whose Riccati fixed point is
sqrt(kappa_cap); a backward geodesic that leaves the surface therefore
starts u at that value, exactly, at its exit time.
"""
from functools import partial
import math

import numpy as np
from scipy.integrate import solve_ivp

from models.geometry import UnitVector
from models.reports import CurvatureSample, RiccatiRun, StatReport
from utils.errors import ConvergenceError, DomainError, RiccatiBlowUp
from utils.parallel import pool_map, stream
from utils.stats import loglog_fit
from utils.surface import (
    acute_angle, arc_length, curvature, curvature_derivative, gauss_curvature, neck_depth,
    reverse, xi,
)
from utils.transit import DEFAULT_ODE_TOL, integrate

DEFAULT_RICCATI_TOL = 1e-6
U_INIT = 1e3
SWITCH_TO_W = 10.0
SWITCH_TO_U = 5.0
START_HORIZON = 8.0
MAX_HORIZON = 2.0 ** 20
PSI_FLOOR = 1e-6


def _upward_crossing(level):
    def hits(t, y):
        return y[0] - level
    hits.terminal = True
    hits.direction = 1.0
    return hits


def _integrate_riccati(curv, T, u0, tol, record=False):
    """Solve u' = -u^2 - curv(t) on [-T, 0] from u(-T) = u0.

    While u > 10 the solver works with w = 1/u (w' = 1 + K w^2) and
    switches back once u drops below 5.
    """
    if T <= 0:
        return u0, [(0.0, u0, curv(0.0))] if record else []

    rtol = max(tol * 1e-4, 1e-12)
    atol = tol * 1e-3
    t, u = -T, u0
    samples = []
    while True:
        reciprocal = u > SWITCH_TO_W
        if reciprocal:
            def rhs(tt, y):
                return [1.0 + curv(tt) * y[0] * y[0]]
            event, start = _upward_crossing(1.0 / SWITCH_TO_U), 1.0 / u
        else:
            def rhs(tt, y):
                return [-y[0] * y[0] - curv(tt)]
            event, start = _upward_crossing(SWITCH_TO_W), u

        sol = solve_ivp(rhs, (t, 0.0), [start], method='DOP853', rtol=rtol, atol=atol, events=[event])
        if sol.status == -1:
            raise ConvergenceError(f'Riccati integration failed: {sol.message}')

        values = 1.0 / sol.y[0] if reciprocal else sol.y[0]
        if not np.all(np.isfinite(values)) or values.min() < -tol:
            raise RiccatiBlowUp(f'u left [0, inf) near t = {sol.t[np.argmin(values)]:.6g}')

        if record:
            samples.extend((float(tt), float(v), curv(tt)) for tt, v in zip(sol.t, values))
        t, u = float(sol.t[-1]), float(values[-1])
        if sol.status == 0:
            return max(u, 0.0), samples


def _backward_curvature(params, trajectory, kappa):
    exit_time = trajectory.exit_time
    dense = trajectory.dense

    def curv(t):
        tau = -t
        if exit_time is not None and tau >= exit_time:
            return -kappa
        return gauss_curvature(params, float(dense(tau)[0]))
    return curv


def riccati_run(params, x, tol=DEFAULT_RICCATI_TOL, constant_kappa=None,
                ode_tol=DEFAULT_ODE_TOL, horizon=START_HORIZON, max_horizon=MAX_HORIZON):
    '''Unstable Riccati solution along the geodesic through x.

    With constant_kappa set, K is -constant_kappa everywhere (synthetic
    constant-curvature mode) and x only fixes the start of the horizon.
    '''
    if not tol > 0:
        raise DomainError('Riccati tolerance must be positive')

    if constant_kappa is not None:
        if not constant_kappa > 0:
            raise DomainError('constant_kappa must be positive')

        def curv(t):
            return -constant_kappa
        exit_time = None
    else:
        if not abs(x.s) <= params.eps0:
            raise DomainError(f'{x} is outside the surface of revolution')
        backward = integrate(params, reverse(x), max_horizon, ode_tol,
                             bound=params.eps0, turning_events=False, dense_output=True)
        exit_time = backward.exit_time
        curv = _backward_curvature(params, backward, params.kappa_cap)

    if exit_time is not None:
        u0 = math.sqrt(params.kappa_cap)
        value, samples = _integrate_riccati(curv, exit_time, u0, tol, record=True)
        return RiccatiRun(horizon=exit_time, u_init=u0, init_policy='fixed_point',
                          samples=samples, converged=True, k_plus=value)

    T = horizon
    previous, _ = _integrate_riccati(curv, T, U_INIT, tol)
    doublings = 0
    while 2.0 * T <= max_horizon:
        T *= 2.0
        doublings += 1
        current, samples = _integrate_riccati(curv, T, U_INIT, tol, record=True)
        if abs(current - previous) < tol:
            return RiccatiRun(horizon=T, u_init=U_INIT, init_policy='large', samples=samples,
                              converged=True, k_plus=current, doublings=doublings)
        previous = current

    raise ConvergenceError(f'k_plus at {x} not converged by horizon {T:g}')


def k_minus(params, x, tol=DEFAULT_RICCATI_TOL, **kwargs):
    """Stable curvature: k_plus of the reversed vector"""
    return riccati_run(params, reverse(x), tol, **kwargs).k_plus


def k_plus(params, x, tol=DEFAULT_RICCATI_TOL, **kwargs):
    '''Both geodesic curvatures at x'''
    return CurvatureSample(
        x=x,
        a=neck_depth(params, x.s),
        k_plus=riccati_run(params, x, tol, **kwargs).k_plus,
        k_minus=k_minus(params, x, tol, **kwargs),
    )


def _both_curvatures(params, tol, x):
    sample = k_plus(params, x, tol)
    return sample.k_plus, sample.k_minus


def lemma_key_grid(params, s_points, psi_points, psi_min=1e-4):
    """Nested (s, psi) grid on the right half of the surface, |psi| in [psi_min, pi/2] with both signs"""
    s_values = np.linspace(0.0, params.eps0, s_points)
    magnitudes = np.geomspace(psi_min, 0.5 * math.pi, psi_points)
    return [UnitVector(float(s), 0.0, float(sign * p))
            for s in s_values for p in magnitudes for sign in (1.0, -1.0)]


def _lemma_key_ratios(params, points, values):
    r = params.r
    upper, lower_psi, lower_a = 0.0, math.inf, math.inf
    for x, pair in zip(points, values):
        a = neck_depth(params, x.s)
        psi = acute_angle(x.psi)
        for k in pair:
            upper = max(upper, k / max(a ** ((r - 2.0) / 2.0), psi ** ((r - 2.0) / r)))
            lower_psi = min(lower_psi, k / psi)
            if a > 0:
                lower_a = min(lower_a, k / a ** ((r - 1.0) / 2.0))
    return {'sup_upper': upper, 'inf_lower_psi': lower_psi, 'inf_lower_a': lower_a}


def check_lemma_key(params, s_points=5, psi_points=7, tol=DEFAULT_RICCATI_TOL,
                    psi_min=1e-4, workers=1):
    '''Extremal ratios of k_plus and k_minus against the key curvature bounds.

    Evaluated on an (s, psi) grid and on its 2x refinement.
    '''
    if psi_min < PSI_FLOOR:
        raise DomainError(f'psi_min must be at least {PSI_FLOOR}')

    report = StatReport(experiment='lemma_key')
    fine_psi = 2 * psi_points - 1
    fine_points = lemma_key_grid(params, 2 * s_points - 1, fine_psi, psi_min)
    fine_values = pool_map(partial(_both_curvatures, params, tol), fine_points, workers)

    # the coarse grid is every other s and every other |psi| of the fine one
    row = 2 * fine_psi
    coarse = [(x, k) for i, (x, k) in enumerate(zip(fine_points, fine_values))
              if (i // row) % 2 == 0 and ((i % row) // 2) % 2 == 0]
    coarse_ratios = _lemma_key_ratios(params, *zip(*coarse))
    fine_ratios = _lemma_key_ratios(params, fine_points, fine_values)

    changes = {
        name: abs(fine_ratios[name] - coarse_ratios[name]) / abs(coarse_ratios[name])
        for name in coarse_ratios if math.isfinite(coarse_ratios[name]) and coarse_ratios[name] != 0
    }

    # exponent of k_plus against psi on the central circle s = 0
    column = [(x.psi, kp) for x, (kp, _) in zip(fine_points, fine_values)
              if x.s == 0.0 and x.psi > 0 and kp > 0]
    small = [(p, k) for p, k in column if p <= 0.1]
    fit = loglog_fit(*zip(*(small if len(small) >= 3 else column)), label='k_plus vs psi')

    for x, (kp, km) in zip(fine_points, fine_values):
        report.add_row(s=x.s, psi=x.psi, a=neck_depth(params, x.s), k_plus=kp, k_minus=km)

    report.metrics.update({f'coarse_{k}': v for k, v in coarse_ratios.items()})
    report.metrics.update({f'fine_{k}': v for k, v in fine_ratios.items()})
    report.metrics.update({
        'max_refinement_change': max(changes.values()) if changes else 0.0,
        'psi_exponent': fit['slope'],
        'psi_exponent_range': [(params.r - 2.0) / params.r, 1.0],
    })
    return report


def _draw_corollary_points(params, samples, seed, extension_fraction):
    rng = stream(seed, 0)
    points = []
    for _ in range(samples):
        if rng.uniform() < extension_fraction:
            points.append(None)
            continue
        s = rng.uniform(-params.eps0, params.eps0)
        psi = rng.uniform(-math.pi, math.pi)
        if acute_angle(psi) < PSI_FLOOR:
            psi = math.copysign(PSI_FLOOR, psi)
        points.append(UnitVector(s, rng.uniform(0.0, 2.0 * math.pi), psi))
    return points


def _corollary_sample(params, tol, x):
    kappa = params.kappa_cap
    if x is None:
        k = riccati_run(params, None, tol, constant_kappa=kappa).k_plus
        return {'region': 'extension', 'x': None, 'K': -kappa, 'k_plus': k, 'k_minus': k}
    sample = k_plus(params, x, tol)
    region = 'neck' if sample.a > 0 else 'cylinder'
    return {'region': region, 'x': x, 'K': curvature(params, x.s),
            'k_plus': sample.k_plus, 'k_minus': sample.k_minus}


def _footprint_distance(params, s0, s1):
    """Meridian distance; a lower bound for the distance on the surface"""
    return arc_length(params, s0, s1)


def check_corollaries(params, samples=200, seed=0, tol=DEFAULT_RICCATI_TOL,
                      extension_fraction=0.1, workers=1):
    '''Empirical constants of the curvature corollaries over random samples'''
    r = params.r
    q = min(1.0, 2.0 * (r - 3.0) / (r - 1.0))
    points = _draw_corollary_points(params, samples, seed, extension_fraction)
    results = pool_map(partial(_corollary_sample, params, tol), points, workers)

    c_kpm = c_flat = c_neck = 0.0
    for item in results:
        kp, km, K = item['k_plus'], item['k_minus'], abs(item['K'])
        if kp > 0 and km > 0:
            c_kpm = max(c_kpm, km ** (r / (r - 2.0)) / kp, kp ** (r / (r - 2.0)) / km)
        if item['region'] == 'neck':
            c_neck = max(c_neck, K / kp ** (2.0 * (r - 2.0) / (r - 1.0)))
        elif kp > 0:
            c_flat = max(c_flat, K / kp ** 2)

    # neighbouring footprints on the same side of the surface
    on_surface = sorted((item for item in results if item['x'] is not None), key=lambda i: i['x'].s)
    c_neck_lip = c_combined = 0.0
    for first, second in zip(on_surface, on_surface[1:]):
        s0, s1 = first['x'].s, second['x'].s
        d = _footprint_distance(params, s0, s1)
        if d == 0.0:
            continue
        dK = abs(first['K'] - second['K'])
        k0, k1 = first['k_plus'], second['k_plus']
        c_combined = max(c_combined, dK / ((k0 ** q + k1 ** q) * d + d * d))
        if first['region'] == second['region'] == 'neck' and s0 * s1 > 0:
            scale = max(abs(first['K']), abs(second['K'])) ** ((r - 3.0) / (r - 2.0))
            c_neck_lip = max(c_neck_lip, dK / (scale * d))

    report = StatReport(experiment='curvature_corollaries', seed=seed)
    for item in on_surface:
        x = item['x']
        report.add_row(s=x.s, psi=x.psi, a=neck_depth(params, x.s),
                       k_plus=item['k_plus'], k_minus=item['k_minus'])
    report.metrics.update({
        'samples': len(results),
        'extension_samples': len(results) - len(on_surface),
        'C_kminus_kplus': c_kpm,
        'C_curvature_flat': c_flat,
        'C_curvature_neck': c_neck,
        'C_neck_lipschitz': c_neck_lip,
        'C_combined_lipschitz': c_combined,
        'q': q,
    })
    return report


def check_curvature_lipschitz(params, pairs=1000, seed=0):
    """Lipschitz-type bounds on K over random footprint pairs (no Riccati solves)"""
    r = params.r
    rng = stream(seed, 1)
    general = neck_only = mean_value = 0.0
    for _ in range(pairs):
        s0, s1 = rng.uniform(-params.eps0, params.eps0, size=2)
        d = arc_length(params, s0, s1)
        if d == 0.0:
            continue
        K0, K1 = curvature(params, s0), curvature(params, s1)
        dK = abs(K0 - K1)
        weaker = min(abs(K0), abs(K1)) ** 0.5
        general = max(general, dK / (weaker * d + d * d))

        if neck_depth(params, s0) > 0 and neck_depth(params, s1) > 0 and s0 * s1 > 0:
            scale = max(abs(K0), abs(K1)) ** ((r - 3.0) / (r - 2.0))
            neck_only = max(neck_only, dK / (scale * d))
            slope = max(abs(curvature_derivative(params, s0)), abs(curvature_derivative(params, s1)))
            if slope > 0:
                mean_value = max(mean_value, dK / (slope * abs(s1 - s0)))

    report = StatReport(experiment='curvature_lipschitz', seed=seed)
    report.metrics.update({
        'pairs': pairs,
        'C_general': general,
        'C_neck': neck_only,
        'mean_value_ratio': mean_value,
    })
    for name in ('C_general', 'C_neck', 'mean_value_ratio'):
        report.add_row(constant=name, value=report.metrics[name])
    return report


def _forward_run(params, start, T, u0, tol, ode_tol):
    '''k_plus at the end of the forward geodesic from `start` run for time T, or None if it leaves early'''
    trajectory = integrate(params, start, T, ode_tol, bound=params.eps0,
                           turning_events=False, dense_output=True)
    if trajectory.exit_time is not None:
        return None
    dense = trajectory.dense

    def curv(t):
        return gauss_curvature(params, float(dense(t + T)[0]))

    value, _ = _integrate_riccati(curv, T, u0, tol)
    return value, trajectory.final


def _separation(params, p, q):
    arc = arc_length(params, p.s, q.s)
    d_theta = math.remainder(q.theta - p.theta, 2.0 * math.pi)
    return math.hypot(arc, xi(params, 0.5 * (p.s + q.s)) * d_theta)


def modulus_probe(params, x, deltas, tol=1e-10, ode_tol=1e-11, horizon=64.0):
    """Difference of k_plus along pairs of geodesics with equal backward Riccati data.

    The partner geodesic starts from the base geodesic's point at time -T
    with the angle moved by delta, so both solves share u(-T). Report-only.
    """
    backward = integrate(params, reverse(x), MAX_HORIZON, ode_tol, bound=params.eps0, turning_events=False)
    if backward.exit_time is not None:
        T, u0 = backward.exit_time, math.sqrt(params.kappa_cap)
    else:
        T, u0 = horizon, U_INIT
        backward = integrate(params, reverse(x), T, ode_tol, bound=params.eps0, turning_events=False)

    start = reverse(backward.final.vector)
    base = _forward_run(params, start, T, u0, tol, ode_tol)
    if base is None:
        raise ConvergenceError(f'Base geodesic through {x} left the surface early')
    k0, foot0 = base

    report = StatReport(experiment='modulus_probe')
    skipped = 0
    for delta in deltas:
        if delta == 0:
            report.add_row(delta=0.0, separation=0.0, difference=0.0)
            continue
        shifted = _forward_run(params, UnitVector(start.s, start.theta, start.psi + delta), T, u0, tol, ode_tol)
        if shifted is None:
            skipped += 1
            continue
        k1, foot1 = shifted
        report.add_row(delta=float(delta), separation=_separation(params, foot0, foot1),
                       difference=abs(k1 - k0))

    usable = [(row['separation'], row['difference']) for row in report.rows
              if row['separation'] > 0 and row['difference'] > 0]
    exponent = loglog_fit(*zip(*usable), label='modulus')['slope'] if len(usable) >= 3 else math.nan
    report.metrics.update({
        'horizon': T,
        'k_plus': k0,
        'fitted_exponent': exponent,
        'reference_exponent': 1.0 if params.r >= 5 else (params.r - 1.0) / 4.0,
        'skipped': skipped,
    })
    return report
