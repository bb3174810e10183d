"""Discrete excursion laws for (R0, J) with n^-3 tails.

A law is stored as an exact head table of masses for R0 = 1..H (one column
per value alpha_i of J) and a tail R0 > H described by its survival
function, its point masses and an exact conditional sampler.
"""
import math

import numpy as np
from scipy import special

from utils.errors import DomainError, InfeasibleTowerError
from utils.validation import ensure_tower_law, feasibility_bound

HEAD_SIZE = 1024
MASS_TOL = 1e-12


class ExcursionLaw:
    '''Joint law of the return time R0 >= 1 and the jump value J'''

    def __init__(self, alphas, sigmas_sq, head, tail_weights, tail_survival, tail_pmf, tail_sampler,
                 mean_r, label='excursion'):
        self.alphas = np.asarray(alphas, dtype=float)
        self.sigmas_sq = np.asarray(sigmas_sq, dtype=float)
        self.head = np.asarray(head, dtype=float)
        self.tail_weights = np.asarray(tail_weights, dtype=float)
        self.tail_survival = tail_survival
        self.tail_pmf = tail_pmf
        self.tail_sampler = tail_sampler
        self.mean_r = float(mean_r)
        self.label = label

        if self.head.ndim != 2 or self.head.shape[1] != self.alphas.size:
            raise DomainError('head table must have one column per alpha')
        if np.any(self.head < 0):
            raise InfeasibleTowerError(f'{label}: negative mass in the head table')

        self.tail_mass = float(tail_survival(self.head_size))
        # survival[k] = P(R0 > k) for k = 0..H
        row_mass = self.head.sum(axis=1)
        self._survival = self.tail_mass + np.concatenate((np.cumsum(row_mass[::-1])[::-1], [0.0]))

        total = self.total_mass
        if abs(total - 1.0) > MASS_TOL:
            raise InfeasibleTowerError(f'{label}: total mass {total!r} is not 1')

        flat = np.append(self.head.ravel(), self.tail_mass)
        self._cells = flat / flat.sum()

    @property
    def head_size(self):
        return self.head.shape[0]

    @property
    def total_mass(self):
        return math.fsum(self.head.ravel()) + self.tail_mass

    @property
    def sigma_total_sq(self):
        return float(self.sigmas_sq.sum())

    @property
    def sigma_J_sq(self):
        """sum_i alpha_i^2 sigma_i^2"""
        return float(np.dot(self.alphas ** 2, self.sigmas_sq))

    def masses(self, n):
        '''mu(R0 = n, J = alpha_i) for each n (rows) and i (columns)'''
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        if np.any(n < 1):
            raise DomainError('R0 takes values n >= 1')
        out = np.zeros((n.size, self.alphas.size))
        in_head = n <= self.head_size
        out[in_head] = self.head[n[in_head] - 1]
        if np.any(~in_head):
            out[~in_head] = np.outer(self.tail_pmf(n[~in_head]), self.tail_weights)
        return out

    def mass(self, n, i=None):
        row = self.masses([n])[0]
        return float(row.sum() if i is None else row[i])

    def survival(self, n):
        """P(R0 > n)"""
        if n < 0:
            return 1.0
        if n < self.head_size:
            return float(self._survival[n])
        return float(self.tail_survival(n))

    def mean_jr(self):
        '''E[J R0]'''
        n = np.arange(1, self.head_size + 1, dtype=float)
        head_by_alpha = n @ self.head
        head_r = head_by_alpha.sum()
        tail_r = self.mean_r - head_r
        return float(np.dot(self.alphas, head_by_alpha) + tail_r * np.dot(self.alphas, self.tail_weights))

    def conditional_mean_jr(self, d, e):
        """E[J R0 | d <= R0 < e] from the exact table"""
        if not 1 <= d < e:
            raise DomainError(f'Need 1 <= d < e (got d={d}, e={e})')
        n = np.arange(d, e)
        table = self.masses(n)
        weight = table.sum()
        if weight == 0:
            return 0.0
        return float((n[:, None] * table * self.alphas).sum() / weight)

    def draw(self, rng, size):
        '''size i.i.d. draws of (R0, index of J)'''
        cells = rng.choice(self._cells.size, size=size, p=self._cells)
        tail = cells == self._cells.size - 1
        r = cells // self.alphas.size + 1
        j = cells % self.alphas.size
        count = int(tail.sum())
        if count:
            r[tail] = self.tail_sampler(rng, count)
            j[tail] = rng.choice(self.alphas.size, size=count, p=self.tail_weights)
        return r.astype(np.int64), j.astype(np.int64)

    def sum_draws(self, rng, trials):
        """(sum of R0, sum of J R0) over `trials` i.i.d. draws.

        Head cells are counted with one multinomial draw; only the rare tail
        draws are sampled individually.
        """
        if trials <= 0:
            return 0.0, 0.0
        counts = rng.multinomial(trials, self._cells)
        head_counts = counts[:-1].reshape(self.head.shape)
        n = np.arange(1, self.head_size + 1, dtype=float)
        sum_r = float(n @ head_counts.sum(axis=1))
        sum_jr = float(n @ head_counts @ self.alphas)

        tail_count = int(counts[-1])
        if tail_count:
            r = self.tail_sampler(rng, tail_count).astype(float)
            j = rng.choice(self.alphas.size, size=tail_count, p=self.tail_weights)
            sum_r += float(r.sum())
            sum_jr += float(np.dot(r, self.alphas[j]))
        return sum_r, sum_jr


def _hurwitz_survival(coefficient, n):
    '''coefficient * zeta(3, n + 1) = coefficient * sum_{k > n} k^-3'''
    n = np.asarray(n, dtype=float)
    return coefficient * special.zeta(3.0, n + 1.0)


def _cubic_pmf(coefficient, n):
    return coefficient * np.asarray(n, dtype=float) ** -3


def _hurwitz_sampler(coefficient, head_size, rng, size):
    """Exact draws of R0 > head_size from masses coefficient * n^-3.

    R0 is the smallest n with T(n) < V, T(n) = coefficient zeta(3, n + 1),
    V uniform on (0, T(head_size)]; located by bisection using
    T(n) < coefficient / (2 n^2).
    """
    v = _hurwitz_survival(coefficient, head_size) * (1.0 - rng.uniform(size=size))
    lo = np.full(size, float(head_size))
    hi = np.floor(np.sqrt(coefficient / (2.0 * v))) + head_size + 2.0
    while True:
        open_ = hi - lo > 1.0
        if not np.any(open_):
            break
        mid = np.floor(0.5 * (lo + hi))
        below = _hurwitz_survival(coefficient, mid) < v
        hi = np.where(open_ & below, mid, hi)
        lo = np.where(open_ & ~below, mid, lo)
    return hi.astype(np.int64)


class _HurwitzTail:
    '''Picklable tail callables for masses coefficient * n^-3'''

    def __init__(self, coefficient, head_size):
        self.coefficient = coefficient
        self.head_size = head_size

    def survival(self, n):
        value = _hurwitz_survival(self.coefficient, n)
        return float(value) if np.ndim(value) == 0 else value

    def pmf(self, n):
        return _cubic_pmf(self.coefficient, n)

    def sample(self, rng, size):
        return _hurwitz_sampler(self.coefficient, self.head_size, rng, size)


def synthetic_law(alphas, sigmas_sq, scale=1.0, head_size=HEAD_SIZE):
    """mu(R0 = n, J = alpha_i) = 2 scale sigma_i^2 n^-3 for n >= 2.

    The residual mass sits at n = 1 and is split between the alpha_i in
    proportion to sigma_i^2. `scale` > 1 is used when the law lives on the
    base of a tower of mean height `scale`.
    """
    ensure_tower_law(alphas, sigmas_sq)
    sigmas_sq = np.asarray(sigmas_sq, dtype=float)
    total = float(sigmas_sq.sum())
    if scale * total > feasibility_bound():
        raise InfeasibleTowerError(
            f'Infeasible tower: {scale:g} x sigma_total^2 = {scale * total:.6g} exceeds {feasibility_bound():.6g}'
        )

    weights = sigmas_sq / total
    coefficient = 2.0 * scale * total
    residual = 1.0 - coefficient * (special.zeta(3.0) - 1.0)

    n = np.arange(1, head_size + 1, dtype=float)
    head = np.outer(2.0 * scale * n ** -3, sigmas_sq)
    head[0] = residual * weights
    tail = _HurwitzTail(coefficient, head_size)
    mean_r = residual + coefficient * (special.zeta(2.0) - 1.0)

    return ExcursionLaw(
        alphas, scale * sigmas_sq, head, weights, tail.survival, tail.pmf, tail.sample,
        mean_r, label='synthetic',
    )
