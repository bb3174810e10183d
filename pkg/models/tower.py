"""Young tower models driven by an excursion law."""
from dataclasses import dataclass, field
import math
from typing import Optional

from utils.errors import ConfigError

TAU_MODES = ('unit', 'geometric')


@dataclass
class TowerModel:
    '''Exponential Young tower over a full-branch base.

    Base cells are i.i.d. draws from `law`. With tau_mode 'unit' every
    point is a base point. With 'geometric' the column heights are
    tau = 1 + Geometric(p), p = 1/(tau_mean - 1), independent of the cell.
    `every_level` puts an independent cell value on each level of a
    column; otherwise (R0, J) live on the base level and vanish above it,
    and the base law is scaled so that the law on the tower is exact.
    '''
    law: object
    tau_mode: str = 'unit'
    tau_mean: float = 1.0
    every_level: bool = False
    label: str = 'synthetic'

    def __post_init__(self):
        if self.tau_mode not in TAU_MODES:
            raise ConfigError(f'tau_mode must be one of {TAU_MODES}')
        if self.tau_mode == 'unit':
            self.tau_mean = 1.0
        elif not self.tau_mean > 2.0:
            raise ConfigError('geometric tau_mode needs tau_mean > 2')

    @property
    def tau_bar(self):
        return self.tau_mean

    @property
    def tau_p(self):
        """Success probability of the geometric part of tau"""
        return 1.0 if self.tau_mode == 'unit' else 1.0 / (self.tau_mean - 1.0)

    def tau_pmf(self, k):
        if self.tau_mode == 'unit':
            return 1.0 if k == 1 else 0.0
        if k < 2:
            return 0.0
        p = self.tau_p
        return p * (1.0 - p) ** (k - 2)

    @property
    def level_weight(self):
        '''Share of tower points that carry a cell value'''
        return 1.0 if self.every_level else 1.0 / self.tau_bar

    def joint_mass(self, n, i):
        """mu_Delta(R0 = n, J = alpha_i) for n >= 1"""
        return self.law.mass(n, i) * self.level_weight

    @property
    def sigmas_sq(self):
        return self.law.sigmas_sq * self.level_weight

    @property
    def sigma_J_sq(self):
        return self.law.sigma_J_sq * self.level_weight

    def sigma_sq(self, observable):
        '''n^-3 tail coefficient of the observable's law on the tower'''
        if observable in ('R0', 'R'):
            return self.law.sigma_total_sq * self.level_weight
        if observable in ('JR0', 'V'):
            return self.sigma_J_sq
        raise ConfigError(f'Observable {observable!r} has no heavy-tail coefficient')

    def mean(self, observable):
        if observable in ('R0', 'R'):
            return self.law.mean_r * self.level_weight
        if observable in ('JR0', 'V'):
            return self.law.mean_jr() * self.level_weight
        if observable == 'indicator_base':
            return 1.0 / self.tau_bar
        raise ConfigError(f'Unknown observable {observable!r}')

    @property
    def r_bar(self):
        return self.law.mean_r

    @property
    def time_scale(self):
        """Flow time per tower step (1 for the synthetic tower)"""
        return 1.0


@dataclass
class CoupledModel(TowerModel):
    """Tower whose excursion cells come from the geodesic transition.

    R = R_C + R_N on excursion cells, R = 1 and J = 0 on the bounded block;
    J = alpha_0 on one side and alpha_pi on the other with equal mass.
    """
    params: Optional[object] = None
    A_total: float = 16.0 * math.pi
    h_bar: float = 1.0
    alpha0: float = 1.0
    alpha_pi: float = -1.0
    neck_step: float = 1.0
    excursion_flux: float = 0.0
    tables: dict = field(default_factory=dict)

    def __post_init__(self):
        self.every_level = True
        super().__post_init__()

    @property
    def sigma_R_sq(self):
        return 4.0 * self.params.L ** 2 / (self.A_total * math.pi)

    @property
    def I_v(self):
        return self.alpha0 ** 2 + self.alpha_pi ** 2

    @property
    def sigma_J_sq(self):
        return 0.5 * self.sigma_R_sq * self.I_v

    def sigma_sq(self, observable):
        if observable in ('R0', 'R'):
            return self.sigma_R_sq
        return super().sigma_sq(observable)

    @property
    def sigma_v_sq(self):
        return self.sigma_J_sq / (self.h_bar * self.r_bar)

    @property
    def b_S(self):
        return self.sigma_R_sq / (2.0 * self.h_bar * self.r_bar)

    @property
    def bounded_mass(self):
        return 1.0 - self.excursion_flux / self.A_total

    @property
    def time_scale(self):
        return self.h_bar * self.r_bar

    def constants(self):
        '''The variance chain, all derived from the configuration'''
        return {
            'sigma_R_sq': self.sigma_R_sq,
            'I_v': self.I_v,
            'sigma_J_sq': self.sigma_J_sq,
            'R_bar': self.r_bar,
            'h_bar': self.h_bar,
            'tau_bar': self.tau_bar,
            'sigma_v_sq': self.sigma_v_sq,
            'b_S': self.b_S,
            'bounded_mass': self.bounded_mass,
            'A_total': self.A_total,
        }
