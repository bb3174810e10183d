"""Flux measure on the cylinder sections and the laws of the return times.

In (theta, c) coordinates the flux measure is dtheta dc on every section,
so c is uniform. On the boundary circles s = +-L of the flat cylinder
c = cos(psi), which makes cos(psi) uniform on (-1, 1). The four sampled
families (two circles, two winding directions) carry total flux 8 pi.
"""
from functools import partial
import math

import numpy as np
from scipy import stats

from models.geometry import GeodesicKind
from models.reports import FLUX_TOTAL, FluxSample, StatReport, TailTable
from utils.errors import DomainError
from utils.parallel import pool_map, stream
from utils.quadrature import DEFAULT_QUAD_TOL
from utils.stats import binomial_stderr, ks_threshold, ks_uniform, tail_exponent
from utils.surface import acute_angle
from utils.transit import NeckTimeTable

SHARD_SIZE = 1 << 16
WINDING_SNAP = 1e-12
THREE_SIGMA_COVERAGE = 0.9973
MIN_NECK_SAMPLES = 100_000


def _shard_draws(seed, shard, size):
    rng = stream(seed, shard)
    theta = rng.uniform(0.0, 2.0 * math.pi, size)
    cos_psi = rng.uniform(-1.0, 1.0, size)
    section = np.where(rng.uniform(size=size) < 0.5, -1, 1)
    return theta, cos_psi, section


def flux_arrays(seed, count):
    '''(theta, cos psi, section) arrays; sample i depends only on (seed, i)'''
    if count < 1:
        raise DomainError('count must be at least 1')
    parts = []
    for shard in range((count + SHARD_SIZE - 1) // SHARD_SIZE):
        parts.append(_shard_draws(seed, shard, SHARD_SIZE))
    theta, cos_psi, section = (np.concatenate(p)[:count] for p in zip(*parts))
    return theta, cos_psi, section


def sample_flux(seed, count):
    theta, cos_psi, section = flux_arrays(seed, count)
    return [FluxSample(float(t), float(math.acos(u)), int(k))
            for t, u, k in zip(theta, cos_psi, section)]


def _snap_floor_float(x):
    nearest = np.rint(x)
    snapped = np.abs(x - nearest) <= WINDING_SNAP * np.maximum(1.0, np.abs(x))
    return np.where(snapped, nearest, np.floor(x))


def _snap_floor(x):
    return _snap_floor_float(x).astype(np.int64)


def winding_count(L, psi):
    """R_C = n iff tan(psi~) lies in (L/((n+1)pi), L/(n pi)]"""
    reference = acute_angle(psi)
    if reference == 0.0:
        raise DomainError('Tangential direction: the geodesic never leaves the circle')
    if reference == 0.5 * math.pi:
        return 0
    return int(_snap_floor(np.array(L / (math.pi * math.tan(reference))))[()])


def winding_counts(L, cos_psi):
    '''Vectorized winding_count in terms of cos(psi)'''
    u = np.abs(np.asarray(cos_psi, dtype=float))
    if np.any(u >= 1.0):
        raise DomainError('Tangential direction in sample')
    return _snap_floor(L * u / (math.pi * np.sqrt((1.0 - u) * (1.0 + u))))


def winding_from_gap(L, gap):
    '''R_C for crossing constants |c| = 1 - gap, as floats (gap may be far below machine epsilon)'''
    gap = np.asarray(gap, dtype=float)
    return _snap_floor_float(L * (1.0 - gap) / (math.pi * np.sqrt(gap * (2.0 - gap))))


def _cos_gap(a, b):
    """1/sqrt(1+a) - 1/sqrt(1+b) without cancellation (a, b squared tangents)"""
    ra, rb = math.sqrt(1.0 + a), math.sqrt(1.0 + b)
    return (b - a) / (ra * rb * (ra + rb))


def exact_tail(L, n):
    '''Flux mass of {R_C = n} over the four families'''
    if n < 1:
        raise DomainError(f'n must be at least 1 (got {n})')
    upper = (L / (n * math.pi)) ** 2
    lower = (L / ((n + 1) * math.pi)) ** 2
    return FLUX_TOTAL * _cos_gap(lower, upper)


def zero_winding_mass(L):
    """Flux mass of {R_C = 0}: tan(psi~) > L/pi"""
    return FLUX_TOTAL / math.sqrt(1.0 + (L / math.pi) ** 2)


def beyond_mass(L, n_max):
    '''Flux mass of {R_C > n_max}'''
    y2 = (L / ((n_max + 1) * math.pi)) ** 2
    root = math.sqrt(1.0 + y2)
    return FLUX_TOTAL * y2 / (root * (1.0 + root))


def sigma_R_sq(L, A_total=FLUX_TOTAL):
    if not A_total > 0:
        raise DomainError(f'A_total must be positive (got {A_total})')
    return 4.0 * L * L / (A_total * math.pi)


def tail_table(L, n_max, A_total=FLUX_TOTAL):
    masses = {n: exact_tail(L, n) for n in range(1, n_max + 1)}
    return TailTable(
        masses=masses, flag='exact', total_mass=A_total,
        zero_mass=zero_winding_mass(L), remainder=beyond_mass(L, n_max),
    )


def _shard_histogram(L, seed, n_max, count, shard):
    size = min(SHARD_SIZE, count - shard * SHARD_SIZE)
    _, cos_psi, _ = _shard_draws(seed, shard, SHARD_SIZE)
    counts = np.minimum(winding_counts(L, cos_psi[:size]), n_max + 1)
    return np.bincount(counts, minlength=n_max + 2)


def tail_histogram(L, seed, count, n_max=200, workers=1):
    """Monte Carlo masses of {R_C = n} against the exact law.

    A bin passes when its count lies in the central 99.73% interval of the
    exact binomial law, which is the 3-sigma rule wherever the normal
    approximation applies and stays meaningful for bins expecting < 1 hit.
    """
    shards = range((count + SHARD_SIZE - 1) // SHARD_SIZE)
    histogram = np.sum(pool_map(partial(_shard_histogram, L, seed, n_max, count), shards, workers), axis=0)

    report = StatReport(experiment='tail_histogram', seed=seed)
    failures = 0
    max_z = 0.0
    mc_masses, stderrs = {}, {}
    for n in range(1, n_max + 1):
        exact = exact_tail(L, n)
        p = exact / FLUX_TOTAL
        hits = int(histogram[n])
        mc = FLUX_TOTAL * hits / count
        stderr = binomial_stderr(p * count, count, FLUX_TOTAL)
        lo, hi = stats.binom.interval(THREE_SIGMA_COVERAGE, count, p)
        if not lo <= hits <= hi:
            failures += 1
        max_z = max(max_z, abs(mc - exact) / stderr)
        mc_masses[n], stderrs[n] = mc, stderr
        report.add_row(n=n, exact_mass=exact, mc_mass=mc, mc_stderr=stderr)

    report.metrics.update({
        'samples': count,
        'bins': n_max,
        'bins_outside_interval': failures,
        'max_abs_z': max_z,
        'zero_mass_mc': FLUX_TOTAL * int(histogram[0]) / count,
        'zero_mass_exact': zero_winding_mass(L),
    })
    report.table = TailTable(masses=mc_masses, flag='monte_carlo', stderr=stderrs,
                             zero_mass=FLUX_TOTAL * int(histogram[0]) / count,
                             remainder=FLUX_TOTAL * int(histogram[n_max + 1]) / count)
    return report


def tail_law_report(L, n_values, A_total=FLUX_TOTAL):
    '''n^3 exact_tail(L, n) pi / (8 L^2) per n, plus the normalized law against 2 sigma_R^2 n^-3'''
    report = StatReport(experiment='tail_law')
    sigma = sigma_R_sq(L, A_total)
    worst = 0.0
    for n in n_values:
        mass = exact_tail(L, n)
        ratio = n ** 3 * mass * math.pi / (8.0 * L * L)
        worst = max(worst, abs(ratio - 1.0))
        report.add_row(n=n, tail_mass=mass, scaled=ratio,
                       normalized=mass / A_total, predicted=2.0 * sigma / n ** 3)
    report.metrics.update({'max_relative_deviation': worst, 'sigma_R_sq': sigma})
    return report


def bouncing_band_mass(params, n):
    """Flux mass of a bouncing band (both signs of c, both sides)"""
    if n < 1:
        raise DomainError(f'n must be at least 1 (got {n})')
    if 1.0 / (n * n) > params.xi_eps1 - 1.0:
        raise DomainError(f'Band {n}> reaches beyond the transition window')
    return FLUX_TOTAL * (1.0 / (n * n) - 1.0 / ((n + 1) ** 2))


def winding_of_band(L, n):
    '''Winding count at the midpoint of crossing band n (about L n / (sqrt(2) pi))'''
    gap = 0.5 * (1.0 / (n * n) + 1.0 / ((n + 1) ** 2))
    m = 1.0 - gap
    return L * m / (math.pi * math.sqrt(gap * (2.0 - gap)))


def neck_tail_report(params, samples, seed, window=1e-8, tail_frac=0.1,
                     quad_tol=DEFAULT_QUAD_TOL, table_points=48, workers=1):
    """Tail exponent of the neck time 2 Upsilon_1 near the asymptotic family.

    c is uniform under the flux measure, so entry vectors with |c - 1| <=
    window are drawn as c = 1 + window (2U - 1).
    """
    if samples < MIN_NECK_SAMPLES:
        raise DomainError(f'neck tail needs at least {MIN_NECK_SAMPLES} samples')
    if not 0 < window < params.xi_eps1 - 1.0:
        raise DomainError('window must lie inside the transition window')

    gap_min = window * 1e-9
    tables = {
        kind: NeckTimeTable.build(params, kind, gap_min, window, table_points, quad_tol, workers)
        for kind in (GeodesicKind.CROSSING, GeodesicKind.BOUNCING)
    }

    rng = stream(seed, 0)
    offsets = window * (2.0 * rng.uniform(size=samples) - 1.0)
    offsets = offsets[offsets != 0.0]
    gaps = np.abs(offsets)
    neck_times = np.where(
        offsets > 0,
        2.0 * tables[GeodesicKind.BOUNCING](np.minimum(gaps, window)),
        2.0 * tables[GeodesicKind.CROSSING](np.minimum(gaps, window)),
    )

    alpha, tail_points = tail_exponent(neck_times, tail_frac, label='neck time')
    target = 2.0 * params.r / (params.r - 2.0)

    report = StatReport(experiment='neck_tail', seed=seed)
    ordered = np.sort(neck_times)
    survival = (ordered.size - np.arange(ordered.size)) / ordered.size
    for q in np.unique(np.geomspace(1, ordered.size, 60).astype(int)) - 1:
        report.add_row(upsilon_n=float(ordered[q]), survival=float(survival[q]))
    report.metrics.update({
        'samples': int(neck_times.size),
        'tail_points': tail_points,
        'fitted_exponent': alpha,
        'target_exponent': target,
        'lp_margin': alpha - 2.0,
    })
    return report


def flux_uniformity_check(seed, count, alpha=0.01):
    """KS distances of the flux sampler against its target marginals.

    cos(psi) must be U(-1, 1) and theta U(0, 2 pi); each of the four
    families should hold a quarter of the samples.
    """
    if count < 100:
        raise DomainError('the uniformity check needs at least 100 samples')
    samples = sample_flux(seed, count)
    theta = np.array([s.theta for s in samples])
    cos_psi = np.cos([s.psi for s in samples])
    threshold = ks_threshold(count, alpha)
    ks_cos = ks_uniform(cos_psi, -1.0, 1.0)
    ks_theta = ks_uniform(theta, 0.0, 2.0 * math.pi)

    report = StatReport(experiment='flux_uniformity', seed=seed)
    families = {}
    for s in samples:
        families[s.family] = families.get(s.family, 0) + 1
    worst_family = 0.0
    for (section, direction), hits in sorted(families.items()):
        share = hits / count
        worst_family = max(worst_family, abs(share - 0.25) / math.sqrt(0.1875 / count))
        report.add_row(section=section, direction=direction, hits=hits, share=share)

    report.metrics.update({
        'samples': count,
        'ks_threshold': threshold,
        'ks_cos_psi': ks_cos,
        'ks_theta': ks_theta,
        'mean_cos_psi': float(cos_psi.mean()),
        'max_family_z': worst_family,
        'uniform_pass': bool(ks_cos <= threshold and ks_theta <= threshold),
    })
    return report
