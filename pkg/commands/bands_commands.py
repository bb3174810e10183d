import math

from models.geometry import BandIndex, GeodesicKind
from models.reports import StatReport
from utils.errors import DegenerateFitError, KindError
from utils.parallel import experiment_seed
from utils.transit import (
    band_grid, band_width_check, distortion_check, monotonicity_check, scaling_report,
)

KINDS = (GeodesicKind.CROSSING, GeodesicKind.BOUNCING)
SCALED = ('Upsilon1', 'Upsilon2', 'ZetaPrime', 'ZetaDoublePrime')
SLOPE_TOLERANCE = {'Upsilon1': 0.05, 'Upsilon2': 0.05, 'ZetaPrime': 0.1, 'ZetaDoublePrime': 0.15}


def _lowest_bouncing_band(params):
    return max(params.n0, math.ceil(1.0 / math.sqrt(params.xi_eps1 - 1.0)))


def band_ranges(params, runs):
    '''(label, band grid) for the low range and the asymptotic range'''
    return [
        ('low', band_grid(max(runs.low_band_min, params.n0), runs.low_band_max, runs.band_count)),
        ('high', band_grid(max(runs.band_min, params.n0), runs.band_max, runs.band_count)),
    ]


def _scaling_fits(params, runs, quad_tol, workers, store, slopes, label, n_values):
    reports = []
    for quantity in SCALED:
        for kind in KINDS:
            if quantity == 'Upsilon2' and kind is GeodesicKind.BOUNCING:
                continue
            grid = n_values
            if kind is GeodesicKind.BOUNCING:
                grid = [n for n in n_values if n >= _lowest_bouncing_band(params)]

            print(f"🔄 {quantity} on {kind.value} bands ({label} range)...")
            try:
                report = scaling_report(params, quantity, kind, grid, runs.samples_per_band, quad_tol, workers)
            except DegenerateFitError as e:
                print(f"⚠️ Skipping {quantity}/{kind.value} ({label}): {e}")
                continue

            report.experiment = f'{report.experiment}_{label}'
            store.write_report(report)
            reports.append(report)
            m = report.metrics
            within = abs(m['slope'] - m['expected_slope']) <= SLOPE_TOLERANCE[quantity]
            slopes.add_row(range=label, band_lo=grid[0], band_hi=grid[-1], quantity=quantity,
                           kind=kind.value, slope=m['slope'], expected=m['expected_slope'],
                           slope_stderr=m['slope_stderr'], r_squared=m['r_squared'], bands=m['bands'],
                           within_tolerance=within)
            mark = '✓' if within else '⚠️'
            print(f"{mark} slope {m['slope']:.4f} (expected {m['expected_slope']:.4f})")
    return reports


def run(config, store, workers=1):
    """Per-band scaling fits on both band ranges, band widths, monotonicity and distortion"""
    params = config.params()
    runs = config.runs
    quad_tol = config.tolerances.quad_tol

    slopes = StatReport(experiment='band_slopes', seed=config.seed)
    reports = [slopes]
    ranges = band_ranges(params, runs)
    for label, grid in ranges:
        reports.extend(_scaling_fits(params, runs, quad_tol, workers, store, slopes, label, grid))
    store.write_report(slopes)

    n_values = ranges[-1][1]

    for kind in KINDS:
        grid = n_values if kind is GeodesicKind.CROSSING else \
            [n for n in n_values if n >= _lowest_bouncing_band(params)]
        if not grid:
            continue
        width = band_width_check(params, grid, kind)
        order = monotonicity_check(params, kind, grid, quad_tol=quad_tol)
        store.write_report(width)
        store.write_report(order)
        reports.extend([width, order])

        for n in runs.distortion_bands:
            try:
                report = distortion_check(params, BandIndex(n, kind), runs.distortion_pairs, quad_tol,
                                          experiment_seed(config.seed, 'distortion'))
            except KindError as e:
                print(f"⚠️ {e}")
                continue
            store.write_report(report)
            reports.append(report)

    print(f"✅ {len(reports)} band reports written")
    return reports
