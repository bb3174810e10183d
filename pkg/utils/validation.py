import math
import warnings

from utils.errors import ConfigError, InfeasibleTowerError
from scipy.special import zeta


def validate_profile(r, L, eps0, kappa_cap, n0):
    '''Validate surface parameters'''
    if not all(math.isfinite(v) for v in (r, L, eps0, kappa_cap)):
        return False, 'Profile parameters must be finite'

    if r <= 4:
        return False, f'Exponent r must exceed 4 (got {r})'

    eps1 = 0.5 * (L + eps0)
    if not 0 < L < eps1 < eps0:
        return False, f'Need 0 < L < eps1 < eps0 (got L={L}, eps0={eps0})'

    if kappa_cap <= 0:
        return False, 'kappa_cap must be positive'

    if int(n0) != n0 or n0 < 2:
        return False, f'n0 must be an integer >= 2 (got {n0})'

    return True, 'Valid'


def ensure_profile(r, L, eps0, kappa_cap, n0):
    ok, message = validate_profile(r, L, eps0, kappa_cap, n0)
    if not ok:
        raise ConfigError(message)

    # the C^{1+Lip} regularity results need r >= 5
    if r < 5:
        warnings.warn(f'r = {r} < 5: foliation regularity is only Hoelder-type', stacklevel=3)


def validate_tolerance(name, value):
    '''Validate a numerical tolerance'''
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        return False, f'{name} must be a finite number'

    if value <= 0:
        return False, f'{name} must be positive'

    return True, 'Valid'


def feasibility_bound():
    """Largest total sigma^2 for which 2 sigma^2 n^-3 (n >= 2) fits in a probability"""
    return 1.0 / (2.0 * (zeta(3.0) - 1.0))


def validate_tower_law(alphas, sigmas_sq):
    '''Validate the (alpha_i, sigma_i^2) table of a tower'''
    if len(alphas) != len(sigmas_sq) or not alphas:
        return False, 'alphas and sigmas_sq must be non-empty and of equal length'

    if any(s < 0 or not math.isfinite(s) for s in sigmas_sq):
        return False, 'sigma_i^2 must be finite and nonnegative'

    total = sum(sigmas_sq)
    if total <= 0:
        return False, 'sum of sigma_i^2 must be positive'

    bound = feasibility_bound()
    if total > bound:
        return False, f'Infeasible tower: sigma_total^2 = {total:.6g} exceeds {bound:.6g}'

    return True, 'Valid'


def ensure_tower_law(alphas, sigmas_sq):
    ok, message = validate_tower_law(alphas, sigmas_sq)
    if not ok:
        raise InfeasibleTowerError(message)
