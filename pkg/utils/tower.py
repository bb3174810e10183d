"""Tower construction, Birkhoff sums and the limit-law experiments.

Two kinds of model share this engine: the synthetic tower, with
mu(R0 = n, J = alpha_i) = 2 sigma_i^2 n^-3 exactly, and the coupled model,
whose excursion law is computed from the transition through the surface
of revolution.
"""
from functools import partial
import math
import warnings

import numpy as np
from scipy import special
from scipy import stats as sps

from models.geometry import GeodesicKind
from models.reports import FLUX_TOTAL, StatReport
from models.tower import CoupledModel, TowerModel
from utils.errors import DegenerateFitError, DomainError, InfeasibleTowerError
from utils.excursions import ExcursionLaw, synthetic_law
from utils.flux import beyond_mass, winding_from_gap
from utils.parallel import pool_map, stream
from utils.quadrature import DEFAULT_QUAD_TOL
from utils.stats import exponential_rate, ks_normal, loglog_fit, median_of_means, robust_variance
from utils.transit import NeckTimeTable

OBSERVABLES = ('JR0', 'R0', 'R', 'V', 'indicator_base')
WIP_TIMES = (0.25, 0.5, 1.0)
COUPLED_HEAD = 4096
GAP_FLOOR = 1e-30
TABLE_GAP_MIN = 1e-12
TABLE_POINTS = 64
BISECTION_STEPS = 64
BLOCKS = 16
ORBIT_STREAM = 1 << 32
TAIL_CHECK_N = 1000
TAIL_TOLERANCE = 0.10
N_COV_TOLERANCE = 0.25
SLOPE_RANGE = (-1.2, -0.8)
SYNTHETIC_PAIR_EXPONENT = 2.5
COUPLED_PAIR_EXPONENT = 3.0


def _check_observable(observable):
    if observable not in OBSERVABLES:
        raise DomainError(f'Unknown observable {observable!r}; expected one of {OBSERVABLES}')


def _jump_part(observable):
    return observable in ('JR0', 'V')


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def build_tower(section):
    """Synthetic tower from a tower section with alphas, sigmas_sq, tau_mode, tau_mean"""
    tau_mean = section.tau_mean if section.tau_mode == 'geometric' else 1.0
    if section.tau_mode == 'geometric' and not tau_mean > 2.0:
        raise InfeasibleTowerError('geometric tau_mode needs tau_mean > 2')
    law = synthetic_law(section.alphas, section.sigmas_sq, scale=tau_mean)
    return TowerModel(law, tau_mode=section.tau_mode, tau_mean=tau_mean)


class CoupledReturns:
    '''Return time R(gap) of an excursion and the exact law it induces.

    On crossing excursions R = R_C + R_N with R_N = round(2 Upsilon_1);
    bouncing excursions never reach the cylinder, so R = R_N. neck_step
    (1 by default) divides the neck time before rounding when a coarser
    neck clock is wanted.
    R is at least 1 and nonincreasing in the gap ||c| - 1| for both kinds,
    so {R >= k} is a gap interval (0, G_k) of flux 8 pi G_k.
    '''

    def __init__(self, params, tables, neck_step, A_total):
        self.L = params.L
        self.tables = tables
        self.neck_step = neck_step
        self.density = FLUX_TOTAL / A_total
        self.bouncing_max = tables[GeodesicKind.BOUNCING].gaps[-1]
        self.bouncing_window = params.xi_eps1 - 1.0
        self.head_size = None

    def crossing(self, gap):
        neck = np.rint(2.0 * self.tables[GeodesicKind.CROSSING](np.minimum(gap, 1.0)) / self.neck_step)
        return np.maximum(1.0, winding_from_gap(self.L, gap) + neck)

    def bouncing(self, gap):
        neck = np.rint(2.0 * self.tables[GeodesicKind.BOUNCING](np.minimum(gap, self.bouncing_max)) / self.neck_step)
        return np.maximum(1.0, neck)

    def _threshold(self, fn, k, gap_max):
        """sup{gap in (0, gap_max]: fn(gap) >= k}, by bisection in log(gap)"""
        k = np.asarray(k, dtype=float)
        lo = np.full(k.shape, math.log(GAP_FLOOR))
        hi = np.full(k.shape, math.log(gap_max))
        whole = fn(np.full(k.shape, gap_max)) >= k
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            ok = fn(np.exp(mid)) >= k
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        return np.where(whole, gap_max, np.exp(lo))

    def thresholds(self, k):
        return (self._threshold(self.crossing, k, 1.0),
                self._threshold(self.bouncing, k, self.bouncing_window))

    def at_least(self, k):
        '''P(R >= k) for k >= 2'''
        crossing, bouncing = self.thresholds(k)
        return self.density * (crossing + bouncing)

    def survival(self, n):
        value = self.at_least(np.asarray(n, dtype=float) + 1.0)
        return float(value) if np.ndim(value) == 0 else value

    def pmf(self, n):
        n = np.asarray(n, dtype=float)
        return self.at_least(n) - self.at_least(n + 1.0)

    def sample(self, rng, size):
        """Draws of R conditioned on R > head_size"""
        k = float(self.head_size + 1)
        crossing, bouncing = (float(g[0]) for g in self.thresholds(np.array([k])))
        use_crossing = rng.uniform(size=size) * (crossing + bouncing) < crossing
        u = 1.0 - rng.uniform(size=size)
        values = np.where(use_crossing, self.crossing(u * crossing), self.bouncing(u * bouncing))
        return np.maximum(values, k).astype(np.int64)


def build_coupled_model(params, section, quad_tol=DEFAULT_QUAD_TOL, workers=1, head_size=COUPLED_HEAD):
    """Tower over the excursions through the surface of revolution.

    The four excursion families carry flux 8 pi xi(eps1) (crossing |c| < 1
    and bouncing 1 < |c| < xi(eps1)); the rest of A_total is the bounded
    block, where R = 1 and J = 0.
    """
    excursion_flux = FLUX_TOTAL * params.xi_eps1
    if not section.A_total > excursion_flux:
        raise InfeasibleTowerError(
            f'A_total = {section.A_total:.6g} must exceed the excursion flux {excursion_flux:.6g}'
        )
    if not section.neck_step > 0:
        raise InfeasibleTowerError('neck_step must be positive')

    bouncing_top = 0.999 * (params.xi_eps1 - 1.0)
    tables = {
        GeodesicKind.CROSSING: NeckTimeTable.build(
            params, GeodesicKind.CROSSING, TABLE_GAP_MIN, 1.0, TABLE_POINTS, quad_tol, workers),
        GeodesicKind.BOUNCING: NeckTimeTable.build(
            params, GeodesicKind.BOUNCING, TABLE_GAP_MIN, bouncing_top, TABLE_POINTS, quad_tol, workers),
    }
    returns = CoupledReturns(params, tables, section.neck_step, section.A_total)
    returns.head_size = head_size

    bounded = 1.0 - excursion_flux / section.A_total
    # at_least[k - 2] = P(R >= k) for k = 2..H+1
    at_least = returns.at_least(np.arange(2, head_size + 2, dtype=float))
    upper = np.concatenate(([1.0 - bounded], at_least))
    excursion_mass = np.maximum(upper[:-1] - upper[1:], 0.0)

    head = np.zeros((head_size, 3))
    head[:, 0] = 0.5 * excursion_mass
    head[:, 1] = 0.5 * excursion_mass
    head[0, 2] = bounded

    # sum_{k >= H+2} P(R >= k) continued with the leading k^-2 decay
    remainder = at_least[-1] * (head_size + 1) ** 2 * special.zeta(2.0, head_size + 2.0)
    mean_r = 1.0 + math.fsum(at_least) + remainder

    sigma = 4.0 * params.L ** 2 / (section.A_total * math.pi)
    law = ExcursionLaw(
        alphas=(section.alpha0, section.alpha_pi, 0.0),
        sigmas_sq=(0.5 * sigma, 0.5 * sigma, 0.0),
        head=head,
        tail_weights=(0.5, 0.5, 0.0),
        tail_survival=returns.survival,
        tail_pmf=returns.pmf,
        tail_sampler=returns.sample,
        mean_r=mean_r,
        label='coupled',
    )
    tau_mean = section.tau_mean if section.tau_mode == 'geometric' else 1.0
    return CoupledModel(
        law, tau_mode=section.tau_mode, tau_mean=tau_mean, label='coupled',
        params=params, A_total=section.A_total, h_bar=section.h_bar,
        alpha0=section.alpha0, alpha_pi=section.alpha_pi, neck_step=section.neck_step,
        excursion_flux=excursion_flux, tables=tables,
    )


# ---------------------------------------------------------------------------
# orbits
# ---------------------------------------------------------------------------

class BaseClock:
    """Marks the base points along a stationary orbit, one chunk at a time.

    Starting from mu_Delta the orbit is on the base with probability
    1/tau_bar; otherwise the wait for the next base point is Geometric(p).
    """

    def __init__(self, model, rng):
        self.model = model
        self.rng = rng
        self.unit = model.tau_mode == 'unit'
        if self.unit or rng.uniform() < 1.0 / model.tau_bar:
            self.wait = 0
        else:
            self.wait = int(rng.geometric(model.tau_p))

    def flags(self, count):
        out = np.zeros(count, dtype=bool)
        if self.unit:
            out[:] = True
            return out

        p = self.model.tau_p
        batch = max(16, int(count / self.model.tau_bar) + 16)
        start = self.wait
        while start < count:
            heights = 1 + self.rng.geometric(p, size=batch)
            starts = start + np.concatenate(([0], np.cumsum(heights)))
            out[starts[starts < count]] = True
            start = int(starts[-1])
            beyond = starts[starts >= count]
            if beyond.size:
                start = int(beyond[0])
                break
        self.wait = start - count
        return out


def orbit_values(model, length, seed):
    '''(R0, J) along a stationary orbit of `length` tower steps; both vanish off the base'''
    rng = stream(seed, ORBIT_STREAM)
    clock = BaseClock(model, rng)
    carries = np.ones(length, dtype=bool) if model.every_level else clock.flags(length)
    r0 = np.zeros(length, dtype=np.int64)
    jump = np.zeros(length)
    r, j = model.law.draw(rng, int(carries.sum()))
    r0[carries] = r
    jump[carries] = model.law.alphas[j]
    return r0, jump


def orbit_series(model, length, seed, chunk=1 << 20):
    """Indicator of the base along one long orbit.

    For the coupled model the clock is the global return map g: a tower
    step with return time R lasts R steps of g, and the base indicator
    marks the first of them.
    """
    rng = stream(seed, ORBIT_STREAM)
    clock = BaseClock(model, rng)
    series = np.zeros(length, dtype=np.uint8)
    position = 0
    while position < length:
        base = clock.flags(chunk)
        if model.every_level:
            r, _ = model.law.draw(rng, chunk)
        else:
            r = np.ones(chunk, dtype=np.int64)
        starts = position + np.concatenate(([0], np.cumsum(r[:-1])))
        hits = starts[base & (starts < length)]
        series[hits] = 1
        position += int(r.sum())
    return series


# ---------------------------------------------------------------------------
# Birkhoff sums
# ---------------------------------------------------------------------------

def _cut_points(n_steps, fractions):
    return [int(round(f * n_steps)) for f in fractions]


def _sum_sample(model, n_steps, seed, observable, fractions, index):
    '''Centered sums S_m for m = fraction * n_steps, one sample'''
    rng = stream(seed, index)
    cuts = _cut_points(n_steps, fractions)
    if model.every_level or model.tau_mode == 'unit':
        visits = np.diff(np.concatenate(([0], cuts)))
    else:
        base = np.flatnonzero(BaseClock(model, rng).flags(n_steps))
        visits = np.diff(np.concatenate(([0], np.searchsorted(base, cuts))))

    mean = model.mean(observable)
    sums = []
    running = 0.0
    for count in visits:
        sum_r, sum_jr = model.law.sum_draws(rng, int(count))
        running += sum_jr if _jump_part(observable) else sum_r
        sums.append(running)
    return np.array(sums) - mean * np.array(cuts, dtype=float)


def simulate(model, n_steps, n_samples, seed, observable, workers=1, fractions=(1.0,), first_index=0):
    """Centered Birkhoff sums per sample, or a base-indicator orbit.

    Sum observables return an array of shape (n_samples,) (one fraction) or
    (n_samples, len(fractions)); 'indicator_base' returns the 0/1 series of
    a single orbit of length n_steps.
    """
    _check_observable(observable)
    if n_steps < 1:
        raise DomainError('n_steps must be positive')
    if observable == 'indicator_base':
        return orbit_series(model, n_steps, seed)

    task = partial(_sum_sample, model, n_steps, seed, observable, tuple(fractions))
    sums = np.array(pool_map(task, range(first_index, first_index + n_samples), workers))
    return sums[:, 0] if len(fractions) == 1 else sums


# ---------------------------------------------------------------------------
# second moment
# ---------------------------------------------------------------------------

def exact_second_moment(model, p):
    '''sum_{m <= p} sum_i alpha_i^2 m^2 mu_Delta(R0 = m, J = alpha_i)'''
    if p < 1:
        raise DomainError(f'p must be at least 1 (got {p})')
    m = np.arange(1, int(p) + 1)
    masses = model.law.masses(m) * model.level_weight
    return float(np.sum((m.astype(float) ** 2)[:, None] * masses * model.law.alphas ** 2))


def second_moment_report(model, p_values):
    report = StatReport(experiment='second_moment')
    sigma = model.sigma_J_sq
    deviations = []
    for p in p_values:
        moment = exact_second_moment(model, p)
        deviation = moment - 2.0 * sigma * math.log(p)
        deviations.append(deviation)
        report.add_row(p=int(p), second_moment=moment, deviation=deviation)
    report.metrics.update({
        'sigma_J_sq': sigma,
        'oscillation': float(max(deviations) - min(deviations)),
    })
    return report


# ---------------------------------------------------------------------------
# limit laws
# ---------------------------------------------------------------------------

def standard_clt_check(model, observable, n_grid, n_samples, seed, workers=1):
    """sqrt(n) normalization for the degenerate branch sigma_J^2 = 0"""
    report = StatReport(experiment=f'standard_clt_{observable}', seed=seed)
    largest = 0.0
    for g, n in enumerate(n_grid):
        sums = simulate(model, n, n_samples, seed, observable, workers, first_index=g * n_samples)
        z = sums / math.sqrt(n)
        largest = max(largest, float(np.max(np.abs(sums))))
        variance = float(np.var(z))
        ks = ks_normal(z, variance) if variance > 0 else 0.0
        report.add_row(n=int(n), variance=variance, ks_distance=ks, max_abs_sum=float(np.max(np.abs(sums))))
    report.metrics.update({'degenerate': True, 'max_abs_sum': largest})
    return report


def nonstandard_clt_test(model, observable, n_grid, n_samples, seed, workers=1, wip=False):
    """S_n / (n log n)^(1/2) against N(0, sigma^2) along n_grid.

    The variance is read off the interquartile range (the summands have
    infinite variance, so the sample variance is dominated by the largest
    draws); the raw sample variance is reported next to it.
    """
    _check_observable(observable)
    if observable == 'indicator_base':
        raise DomainError('indicator_base has no Birkhoff-sum limit law here')
    sigma = model.sigma_sq(observable)
    if sigma == 0.0:
        return standard_clt_check(model, observable, n_grid, n_samples, seed, workers)
    if wip:
        return wip_test(model, observable, n_grid, n_samples, seed, workers)

    report = StatReport(experiment=f'clt_{observable}', seed=seed)
    errors = []
    for g, n in enumerate(n_grid):
        sums = simulate(model, n, n_samples, seed, observable, workers, first_index=g * n_samples)
        z = sums / math.sqrt(n * math.log(n))
        fitted = robust_variance(z)
        ratio = fitted / sigma
        errors.append(abs(ratio - 1.0))
        report.add_row(
            n=int(n),
            variance_ratio=ratio,
            ks_distance=ks_normal(z, sigma),
            ks_fitted=ks_normal(z, fitted),
            fitted_variance=fitted,
            raw_variance_ratio=float(np.var(z)) / sigma,
        )

    report.metrics.update({
        'sigma_sq': sigma,
        'final_variance_ratio': report.rows[-1]['variance_ratio'],
        'final_ks_fitted': report.rows[-1]['ks_fitted'],
        'error_nonincreasing': bool(all(b <= a for a, b in zip(errors, errors[1:]))),
    })
    return report


def wip_test(model, observable, n_grid, n_samples, seed, workers=1):
    """Finite-dimensional marginals W_n(t), t in {1/4, 1/2, 1}.

    Time is flow time T = n h_bar R_bar on the coupled model (n tower
    steps on the synthetic one), so Var W_n(t) -> sigma_v^2 t with
    sigma_v^2 = sigma^2 / (h_bar R_bar).
    """
    sigma = model.sigma_sq(observable)
    sigma_v = sigma / model.time_scale
    report = StatReport(experiment=f'wip_{observable}', seed=seed)
    worst = 0.0
    for g, n in enumerate(n_grid):
        sums = simulate(model, n, n_samples, seed, observable, workers,
                        fractions=WIP_TIMES, first_index=g * n_samples)
        flow_time = n * model.time_scale
        w = sums / math.sqrt(flow_time * math.log(flow_time))
        increments = np.diff(np.column_stack((np.zeros(len(w)), w)), axis=1)
        for col, t in enumerate(WIP_TIMES):
            variance = robust_variance(w[:, col])
            ratio = variance / (sigma_v * t)
            if n == n_grid[-1]:
                worst = max(worst, abs(ratio - 1.0))
            if col == 0:
                correlation = 0.0
            else:
                correlation = float(sps.spearmanr(increments[:, col], w[:, col - 1]).statistic)
            report.add_row(n=int(n), t=t, variance=variance, target=sigma_v * t,
                           ratio=ratio, increment_correlation=correlation)

    report.metrics.update({
        'sigma_v_sq': sigma_v,
        'time_scale': model.time_scale,
        'max_ratio_error': worst,
    })
    return report


# ---------------------------------------------------------------------------
# correlation structure
# ---------------------------------------------------------------------------

def _block_means(values, blocks=BLOCKS):
    parts = np.array_split(values, blocks)
    means = np.array([p.mean() for p in parts])
    return median_of_means(values, blocks), float(means.std(ddof=1) / math.sqrt(blocks))


def pair_condition_check(model, k_max, l_max, n_set, orbit_len, seed, exponent=None):
    """Joint law of (R0, R0 o f^n) against C k^-a l^-a.

    a defaults to 3 on the coupled model and 2 + 1/2 on the synthetic one;
    the smallest feasible C per n is reported with the largest deviation
    from the product of the marginals.
    """
    if exponent is None:
        exponent = COUPLED_PAIR_EXPONENT if isinstance(model, CoupledModel) else SYNTHETIC_PAIR_EXPONENT
    r0, _ = orbit_values(model, orbit_len, seed)
    k = np.arange(1, k_max + 1, dtype=float)
    l = np.arange(1, l_max + 1, dtype=float)
    bound = np.outer(k ** -exponent, l ** -exponent)
    marginal = np.bincount(np.minimum(r0, max(k_max, l_max) + 1), minlength=max(k_max, l_max) + 2) / r0.size
    product = np.outer(marginal[1:k_max + 1], marginal[1:l_max + 1])

    report = StatReport(experiment='pair_condition', seed=seed)
    constants = {}
    worst_z = 0.0
    for n in n_set:
        x, y = r0[:-n], r0[n:]
        keep = (x >= 1) & (x <= k_max) & (y >= 1) & (y <= l_max)
        codes = (x[keep] - 1) * l_max + (y[keep] - 1)
        joint = np.bincount(codes, minlength=k_max * l_max).reshape(k_max, l_max) / x.size
        constants[int(n)] = float(np.max(joint / bound))
        listed = product > 0
        stderr = np.sqrt(product[listed] * (1.0 - product[listed]) / x.size)
        if listed.any():
            worst_z = max(worst_z, float(np.max(np.abs(joint[listed] - product[listed]) / stderr)))
        for a in range(k_max):
            for b in range(l_max):
                report.add_row(n=int(n), k=a + 1, l=b + 1, joint=float(joint[a, b]),
                               product=float(product[a, b]), bound_ratio=float(joint[a, b] / bound[a, b]))

    report.metrics.update({
        'exponent': exponent,
        'constants': constants,
        'max_constant': max(constants.values()),
        'max_independence_z': worst_z,
    })
    return report


def Adde_correlation(model, d, e, d_p, e_p, n_max, orbit_len, seed):
    '''Correlations of A_{d,e} = (J R0 - E[J R0 | d <= R0 < e]) 1{d <= R0 < e} along one orbit'''
    if not (d <= e and d_p <= e_p):
        raise DomainError('Need d <= e and d\' <= e\'')
    r0, jump = orbit_values(model, orbit_len, seed)
    value = jump * r0

    def centered(lo, hi):
        if lo == hi:
            return np.zeros_like(value)
        window = (r0 >= lo) & (r0 < hi)
        return np.where(window, value - model.law.conditional_mean_jr(lo, hi), 0.0)

    first, second = centered(d, e), centered(d_p, e_p)
    report = StatReport(experiment='Adde_correlation', seed=seed)
    lags, estimates, errors = [], [], []
    for n in range(1, n_max + 1):
        estimate, stderr = _block_means(first[:-n] * second[n:])
        lags.append(n)
        estimates.append(estimate)
        errors.append(stderr)
        report.add_row(lag=n, correlation=estimate, stderr=stderr)

    floor = 3.0 * max(errors) if errors else 0.0
    report.metrics.update({
        'mean_A': float(first.mean()),
        'max_abs_correlation': float(np.max(np.abs(estimates))) if estimates else 0.0,
        'gamma': exponential_rate(lags, estimates, floor=floor),
        'noise_floor': floor,
    })
    return report


# ---------------------------------------------------------------------------
# decay of correlations
# ---------------------------------------------------------------------------

def _return_pmf(model, size):
    """P(phi* = k), k = 0..size, where phi* sums R over one column"""
    k = np.arange(1, size + 1)
    if model.every_level:
        step = np.concatenate(([0.0], model.law.masses(k).sum(axis=1)))
    else:
        step = np.zeros(size + 1)
        step[1] = 1.0
    if model.tau_mode == 'unit':
        return step

    p = model.tau_p
    total = np.zeros(size + 1)
    power = np.convolve(step, step)[:size + 1]
    t = 2
    while t <= size and (1.0 - p) ** (t - 2) > 1e-18:
        total += model.tau_pmf(t) * power
        power = np.convolve(power, step)[:size + 1]
        t += 1
    return total


def block_sum_tail(model, n_values):
    """n^2 mu(phi* > n) from the exact law, with its winding part.

    phi* is the sum of R over one column of the tower; on the synthetic
    tower R0 lives on the base only, so phi* = R0 there.
    """
    n_values = [int(n) for n in n_values]
    target = model.tau_bar * model.sigma_sq('R')
    report = StatReport(experiment='block_sum_tail')
    coupled = isinstance(model, CoupledModel)

    if model.every_level and model.tau_mode != 'unit':
        pmf = _return_pmf(model, max(n_values))
        cumulative = np.cumsum(pmf)
        tails = {n: float(1.0 - cumulative[n]) for n in n_values}
    else:
        tails = {n: model.law.survival(n) for n in n_values}

    for n in n_values:
        row = {'n': n, 'tail_mass': tails[n], 'scaled': n * n * tails[n]}
        if coupled:
            row['winding_scaled'] = model.tau_bar * n * n * beyond_mass(model.params.L, n) / model.A_total
        report.add_row(**row)

    # acceptance is read at n = 10^3 when the grid has it, else at the largest n
    checked = next((row for row in report.rows if row['n'] == TAIL_CHECK_N), report.rows[-1])
    deviation = abs(checked['scaled'] / target - 1.0)
    report.metrics.update({
        'target': target,
        'checked_n': checked['n'],
        'relative_deviation': deviation,
        'tail_pass': bool(deviation <= TAIL_TOLERANCE),
    })
    if coupled:
        # diagnostic only: the neck part of R is left out
        report.metrics['winding_relative_deviation'] = abs(checked['winding_scaled'] / target - 1.0)
    return report


def renewal_prediction(model, lags):
    '''Exact covariance of the base indicator from the renewal equation'''
    lags = [int(n) for n in lags]
    size = max(lags)
    pmf = _return_pmf(model, size)
    u = np.zeros(size + 1)
    u[0] = 1.0
    for n in range(1, size + 1):
        u[n] = np.dot(pmf[1:n + 1], u[n - 1::-1])
    mean_return = model.tau_bar * (model.r_bar if model.every_level else 1.0)
    rate = 1.0 / mean_return

    report = StatReport(experiment='renewal_prediction')
    for n in lags:
        cov = rate * (u[n] - rate)
        report.add_row(lag=n, renewal_cov=cov, n_cov=n * cov)
    report.metrics.update({'mean_return': mean_return, 'base_measure': rate})
    return report


def _lagged_covariance(series, lags, blocks=BLOCKS):
    """Autocovariance at each lag: median of block estimates and its standard error"""
    lags = list(lags)
    span = max(lags)
    edges = np.linspace(0, series.size, blocks + 1).astype(int)
    estimates = np.zeros((blocks, len(lags)))
    for b in range(blocks):
        block = series[edges[b]:edges[b + 1]].astype(np.float64)
        if block.size <= span:
            raise DomainError('orbit too short for the requested lags')
        mean = block.mean()
        for i, n in enumerate(lags):
            estimates[b, i] = np.dot(block[:-n], block[n:]) / (block.size - n) - mean * mean
    return np.median(estimates, axis=0), estimates.std(axis=0, ddof=1) / math.sqrt(blocks)


def decay_experiments(coupled, orbit_len, lags, seed, tail_n=(10, 100, 1000)):
    """Block-sum tail and the n^-1 decay of the base-indicator autocovariance.

    In the g-invariant probability the base has measure 1/E[phi*], which
    is both integral of v and integral of w for v = w = 1_base; the n^-1
    constant then reads tau_bar sigma_R^2 (int v)(int w) / E[phi*].
    """
    lags = [int(n) for n in lags]
    tail = block_sum_tail(coupled, tail_n)
    renewal = renewal_prediction(coupled, lags)
    series = orbit_series(coupled, orbit_len, seed)
    cov, stderr = _lagged_covariance(series, lags)

    rate = renewal.metrics['base_measure']
    asymptotic = coupled.tau_bar * coupled.sigma_sq('R') * rate * rate * rate

    report = StatReport(experiment='decay', seed=seed)
    undersampled = []
    for n, c, err, pred in zip(lags, cov, stderr, renewal.rows):
        flagged = bool(abs(c) < 3.0 * err)
        if flagged:
            undersampled.append(n)
        report.add_row(lag=n, cov=float(c), stderr=float(err), renewal_cov=pred['renewal_cov'],
                       n_cov=float(n * c), undersampled=int(flagged))
    if undersampled:
        warnings.warn(f'{len(undersampled)} lags are within 3 standard errors of zero')
        report.notes.append(f'undersampled lags: {undersampled}')

    usable = [(n, c) for n, c in zip(lags, cov) if n not in undersampled and c > 0]
    try:
        fit = loglog_fit([n for n, _ in usable], [c for _, c in usable], label='autocovariance')
        slope = fit['slope']
    except DegenerateFitError as e:
        report.notes.append(str(e))
        slope = math.nan

    upper = [n * c for n, c in zip(lags, cov) if n >= lags[len(lags) // 2]]
    n_cov_limit = float(np.mean(upper))
    renewal_n_cov = renewal.rows[-1]['n_cov']
    n_cov_deviation = abs(n_cov_limit / asymptotic - 1.0)
    renewal_deviation = abs(renewal_n_cov / asymptotic - 1.0)
    slope_pass = bool(SLOPE_RANGE[0] <= slope <= SLOPE_RANGE[1])
    n_cov_pass = bool(n_cov_deviation <= N_COV_TOLERANCE)
    tail_pass = tail.metrics['tail_pass']
    report.metrics.update({
        'slope': slope,
        'slope_pass': slope_pass,
        'n_cov_limit': n_cov_limit,
        'n_cov_deviation': n_cov_deviation,
        'n_cov_pass': n_cov_pass,
        'renewal_n_cov': renewal_n_cov,
        'renewal_deviation': renewal_deviation,
        'renewal_pass': bool(renewal_deviation <= N_COV_TOLERANCE),
        'asymptotic_constant': asymptotic,
        'orbit_len': orbit_len,
        'undersampled_lags': len(undersampled),
        'tail_n': tail.metrics['checked_n'],
        'tail_scaled': next(row['scaled'] for row in tail.rows if row['n'] == tail.metrics['checked_n']),
        'tail_target': tail.metrics['target'],
        'tail_relative_deviation': tail.metrics['relative_deviation'],
        'tail_pass': tail_pass,
        'tail_winding_relative_deviation': tail.metrics.get('winding_relative_deviation', math.nan),
        'acceptance_pass': bool(slope_pass and n_cov_pass and tail_pass),
    })
    report.table = tail
    return report
