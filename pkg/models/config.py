"""Experiment configuration.

A run is fully described by one JSON document; it is validated here and
echoed back into every manifest so the run can be replayed.
"""
import json
import math
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from models.geometry import ProfileParams
from utils.errors import ConfigError
from utils.validation import validate_profile, validate_tolerance

MAX_SEED = 2 ** 64 - 1


class Section(BaseModel):
    model_config = ConfigDict(extra='forbid')


class ProfileSection(Section):
    r: float = 5.0
    L: float = 0.5
    eps0: float = 1.0
    kappa_cap: float = 1.0
    n0: int = 10
    chi: Optional[float] = None

    @model_validator(mode='after')
    def check_profile(self):
        ok, message = validate_profile(self.r, self.L, self.eps0, self.kappa_cap, self.n0)
        if not ok:
            raise ValueError(message)
        return self

    def params(self):
        return ProfileParams(**self.model_dump())


class Tolerances(Section):
    tol_c: float = 1e-12
    quad_tol: float = 1e-10
    ode_tol: float = 1e-9
    riccati_tol: float = 1e-6

    @model_validator(mode='after')
    def check_positive(self):
        for name, value in self.model_dump().items():
            ok, message = validate_tolerance(name, value)
            if not ok:
                raise ValueError(message)
        return self


class TowerSection(Section):
    '''Synthetic tower law plus the constants of the coupled model'''
    alphas: List[float] = Field(default_factory=lambda: [1.0])
    sigmas_sq: List[float] = Field(default_factory=lambda: [0.5])
    tau_mode: Literal['unit', 'geometric'] = 'unit'
    tau_mean: float = 3.0
    h_bar: float = Field(1.0, gt=0)
    A_total: float = Field(16.0 * math.pi, gt=0)
    neck_step: float = Field(1.0, gt=0)
    alpha0: float = 1.0
    alpha_pi: float = -1.0


class RunSection(Section):
    """Sample sizes and grids; defaults are the full-scale acceptance runs"""
    # transition
    conservation_samples: int = Field(10_000, ge=1)
    conservation_horizon: float = Field(1e3, gt=0)
    oracle_vectors: int = Field(1000, ge=1)
    oracle_n_max: int = 50

    # bands
    band_min: int = 1000
    band_max: int = 8000
    low_band_min: int = 10
    low_band_max: int = 1000
    band_count: int = Field(8, ge=3)
    samples_per_band: int = Field(5, ge=3)
    distortion_pairs: int = Field(50, ge=1)
    distortion_bands: List[int] = Field(default_factory=lambda: [40, 200, 1000])

    # riccati
    kappas: List[float] = Field(default_factory=lambda: [0.25, 1.0, 4.0])
    grid_s: int = Field(5, ge=2)
    grid_psi: int = Field(7, ge=2)
    corollary_samples: int = Field(10_000, ge=1)
    lipschitz_pairs: int = Field(1000, ge=1)
    modulus_deltas: List[float] = Field(default_factory=lambda: [1e-2, 1e-3, 1e-4, 1e-5])

    # tails
    tail_n: List[int] = Field(default_factory=lambda: [100, 200, 500, 1000])
    histogram_samples: int = Field(10_000_000, ge=1)
    histogram_bins: int = Field(200, ge=1)
    uniformity_samples: int = Field(100_000, ge=100)
    neck_samples: int = Field(200_000, ge=100_000)
    neck_window: float = Field(1e-8, gt=0)

    # tower
    n_grid: List[int] = Field(default_factory=lambda: [2 ** 12, 2 ** 16, 2 ** 20])
    clt_samples: int = Field(5000, ge=2)
    moment_p: List[int] = Field(default_factory=lambda: [10 ** 2, 10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6])
    pair_k_max: int = Field(8, ge=1)
    pair_l_max: int = Field(8, ge=1)
    pair_n_set: List[int] = Field(default_factory=lambda: [1, 2, 8, 32])
    adde_window: List[int] = Field(default_factory=lambda: [1, 4, 2, 8], min_length=4, max_length=4)
    adde_n_max: int = Field(16, ge=1)
    correlation_orbit: int = Field(1_000_000, ge=1000)

    # decay
    orbit_len: int = Field(100_000_000, ge=1000)
    lags: List[int] = Field(default_factory=lambda: [8, 16, 32, 64, 128])
    block_tail_n: List[int] = Field(default_factory=lambda: [10, 100, 1000])


class ExperimentConfig(Section):
    profile: ProfileSection = Field(default_factory=ProfileSection)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    tower: TowerSection = Field(default_factory=TowerSection)
    runs: RunSection = Field(default_factory=RunSection)
    seed: int = Field(0, ge=0, le=MAX_SEED)

    def params(self):
        return self.profile.params()

    def echo(self):
        '''The configuration as it is written into manifests'''
        return self.model_dump(mode='json')


def _first_error(error):
    item = error.errors()[0]
    where = '.'.join(str(p) for p in item['loc']) or 'config'
    return f"{where}: {item['msg']}"


def load_config(path=None, text=None):
    """Parse and validate a JSON configuration (defaults when neither is given)"""
    try:
        if path is not None:
            with open(path, encoding='utf-8') as handle:
                text = handle.read()
        if text is None:
            return ExperimentConfig()
        return ExperimentConfig.model_validate(json.loads(text))

    except FileNotFoundError:
        raise ConfigError(f'Config file not found: {path}')
    except json.JSONDecodeError as e:
        raise ConfigError(f'Config is not valid JSON: {e}')
    except ValidationError as e:
        raise ConfigError(f'Invalid config ({_first_error(e)})')


def with_seed(config, seed):
    '''Copy of `config` with the seed overridden from the command line'''
    if seed is None:
        return config
    try:
        return ExperimentConfig.model_validate({**config.echo(), 'seed': seed})
    except ValidationError as e:
        raise ConfigError(f'Invalid seed ({_first_error(e)})')
