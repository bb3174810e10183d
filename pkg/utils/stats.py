"""Fits and summary statistics used by the experiments."""
import math

import numpy as np
from scipy import stats

from utils.errors import DegenerateFitError

MIN_FIT_POINTS = 3
MIN_TAIL_SAMPLES = 50


def loglog_fit(x, y, label='fit'):
    '''Least-squares line through (log x, log y); returns slope, intercept, r_squared, slope_stderr'''
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < MIN_FIT_POINTS:
        raise DegenerateFitError(f'{label}: need at least {MIN_FIT_POINTS} points, got {x.size}')
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise DegenerateFitError(f'{label}: log-log fit needs positive finite data')

    result = stats.linregress(np.log(x), np.log(y))
    return {
        'slope': float(result.slope),
        'intercept': float(result.intercept),
        'r_squared': float(result.rvalue ** 2),
        'slope_stderr': float(result.stderr),
    }


def geometric_mean(values):
    values = np.abs(np.asarray(values, dtype=float))
    if values.size == 0 or np.any(values == 0):
        raise DegenerateFitError('geometric mean of an empty or vanishing sample')
    return float(stats.gmean(values))


def survival_function(values):
    """Empirical P(X >= x) at the sorted sample points (ascending x)"""
    ordered = np.sort(np.asarray(values, dtype=float))
    n = ordered.size
    return ordered, (n - np.arange(n)) / n


def tail_exponent(values, tail_frac=0.1, label='tail'):
    '''Tail index from a straight-line fit to the log-log survival function.

    Uses the largest `tail_frac` share of the sample; returns alpha with
    P(X > x) ~ x^-alpha together with the number of tail points used.
    '''
    ordered, survival = survival_function(values)
    k = int(math.ceil(ordered.size * tail_frac))
    if k < MIN_TAIL_SAMPLES:
        raise DegenerateFitError(f'{label}: only {k} tail samples (need {MIN_TAIL_SAMPLES})')

    x_tail = ordered[-k:]
    p_tail = survival[-k:]
    if np.any(x_tail <= 0):
        raise DegenerateFitError(f'{label}: tail contains nonpositive values')

    slope, _ = np.polyfit(np.log10(x_tail), np.log10(p_tail), 1)
    return float(-slope), k


def robust_variance(samples):
    """Variance of the normal law with the same interquartile range"""
    return float(stats.iqr(samples, scale='normal') ** 2)


def ks_normal(samples, variance):
    '''KS distance between the sample and N(0, variance)'''
    if not variance > 0:
        raise DegenerateFitError('KS distance to a normal law needs positive variance')
    return float(stats.kstest(samples, 'norm', args=(0.0, math.sqrt(variance))).statistic)


def ks_uniform(samples, lo, hi):
    return float(stats.kstest(samples, 'uniform', args=(lo, hi - lo)).statistic)


def ks_threshold(n, alpha=0.01):
    """Asymptotic one-sample KS critical value"""
    return float(stats.kstwobign.isf(alpha) / math.sqrt(n))


def median_of_means(values, blocks=16):
    values = np.asarray(values, dtype=float)
    if values.size < blocks:
        return float(np.median(values))
    return float(np.median([chunk.mean() for chunk in np.array_split(values, blocks)]))


def exponential_rate(lags, values, floor=0.0):
    '''Fit |value| ~ C gamma^lag over the points above `floor`; returns gamma'''
    lags = np.asarray(lags, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    keep = values > floor
    if keep.sum() < 2:
        return 0.0
    slope, _ = np.polyfit(lags[keep], np.log(values[keep]), 1)
    return float(math.exp(slope))


def binomial_stderr(hits, total, scale=1.0):
    '''Standard error of scale * hits / total'''
    if total <= 0:
        return math.nan
    p = hits / total
    return scale * math.sqrt(p * (1.0 - p) / total)
