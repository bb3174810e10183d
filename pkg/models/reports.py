"""Result records shared by the experiments."""
from dataclasses import dataclass, field
import math
from typing import Optional

from models.geometry import UnitVector

FLUX_TOTAL = 8.0 * math.pi


@dataclass
class StatReport:
    '''Outcome of one statistical experiment.

    metrics holds the headline numbers (fitted exponents, KS distances,
    variance ratios, empirical constants); rows are the per-item records
    that end up in the experiment's CSV, in `columns` order.
    '''
    experiment: str
    metrics: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    columns: tuple = ()
    seed: Optional[int] = None
    notes: list = field(default_factory=list)
    table: Optional[object] = None

    def add_row(self, **values):
        if not self.columns:
            self.columns = tuple(values)
        self.rows.append(values)

    def summary(self):
        """JSON-friendly view without the row table"""
        return {
            'experiment': self.experiment,
            'metrics': dict(self.metrics),
            'seed': self.seed,
            'rows': len(self.rows),
            'notes': list(self.notes),
        }


@dataclass(frozen=True)
class FluxSample:
    '''A vector on a cylinder boundary section, drawn from sin(psi) dtheta dpsi.

    section is -1 or +1 (the circle s = section * L); the sign of cos(psi)
    is the winding direction. Together they give the four sampled families.
    '''
    theta: float
    psi: float
    section: int

    @property
    def family(self):
        return (self.section, 1 if math.cos(self.psi) >= 0.0 else -1)


@dataclass
class TailTable:
    masses: dict
    flag: str = 'exact'
    total_mass: float = FLUX_TOTAL
    zero_mass: float = 0.0
    remainder: float = 0.0
    stderr: dict = field(default_factory=dict)

    @property
    def flux_total(self):
        '''Mass of every listed n, the R_C = 0 set and the tail beyond the table'''
        return math.fsum(self.masses.values()) + self.zero_mass + self.remainder

    def normalized(self, n):
        return self.masses.get(n, 0.0) / self.total_mass


@dataclass(frozen=True)
class CurvatureSample:
    x: UnitVector
    a: float
    k_plus: float
    k_minus: float

    @property
    def psi(self):
        return self.x.psi


@dataclass
class RiccatiRun:
    '''One backward-horizon solve of u' = -u^2 - K along a geodesic'''
    horizon: float
    u_init: float
    init_policy: str
    samples: list = field(default_factory=list)
    converged: bool = False
    k_plus: float = math.nan
    doublings: int = 0
