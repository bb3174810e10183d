"""Records for the surface of revolution and its geodesics.

Clairaut coordinates (s, theta, psi): s runs along the axis of the surface,
theta around it, and psi is the angle between the geodesic and the oriented
parallel circle through its footpoint. psi = pi/2 points towards +s.
"""
from dataclasses import dataclass, field
from enum import Enum
import math
from typing import Optional

from utils.errors import DomainError
from utils.validation import ensure_profile


class GeodesicKind(Enum):
    ASYMPTOTIC = 'asymptotic'
    BOUNCING = 'bouncing'
    CROSSING = 'crossing'

    @property
    def symbol(self):
        return {'bouncing': '>', 'crossing': '<'}.get(self.value, '=')


@dataclass(frozen=True)
class ProfileParams:
    '''Surface data: xi(s) = 1 on |s| <= L, 1 + (|s| - L)^r on the neck'''
    r: float = 5.0
    L: float = 0.5
    eps0: float = 1.0
    kappa_cap: float = 1.0
    n0: int = 10
    chi: Optional[float] = None

    def __post_init__(self):
        if self.chi is None:
            object.__setattr__(self, 'chi', 0.05 * (self.eps0 - self.L))
        ensure_profile(self.r, self.L, self.eps0, self.kappa_cap, self.n0)

    @property
    def eps1(self):
        return 0.5 * (self.L + self.eps0)

    @property
    def xi_eps1(self):
        """xi at the transition section |s| = eps1"""
        return 1.0 + (self.eps1 - self.L) ** self.r


@dataclass(frozen=True)
class UnitVector:
    s: float
    theta: float
    psi: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.s, self.theta, self.psi)):
            raise DomainError(f'Non-finite Clairaut coordinates: {self}')


@dataclass(frozen=True)
class GeodesicState:
    t: float
    s: float
    theta: float
    psi: float

    @property
    def vector(self):
        return UnitVector(self.s, self.theta, self.psi)


@dataclass(frozen=True)
class BandIndex:
    '''Homogeneity band: n, kind ('>' bouncing, '<' crossing), side = sign of c'''
    n: int
    kind: GeodesicKind
    side: int = 1

    @property
    def label(self):
        return f'{self.n}{self.kind.symbol}'


@dataclass
class Trajectory:
    '''Accepted integrator states plus what stopped the run'''
    states: list
    exit_time: Optional[float] = None
    turning_times: list = field(default_factory=list)
    clairaut_drift: float = 0.0
    dense: Optional[object] = None

    @property
    def final(self):
        return self.states[-1]


@dataclass(frozen=True)
class TransitionResult:
    kind: GeodesicKind
    exit: UnitVector
    upsilon0: float
    upsilon1: float
    upsilon2: float
    zeta: float
    band: Optional[BandIndex] = None
    turning_s: Optional[float] = None

    @property
    def transit_time(self):
        """Omega-to-Omega time, twice the half-transition time"""
        return 2.0 * self.upsilon0
