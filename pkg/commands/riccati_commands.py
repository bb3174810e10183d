import math

from models.geometry import UnitVector
from models.reports import StatReport
from utils.errors import ConvergenceError
from utils.parallel import experiment_seed
from utils.riccati import (
    check_corollaries, check_curvature_lipschitz, check_lemma_key, modulus_probe, riccati_run,
)


def run(config, store, workers=1):
    '''Green-bundle curvatures: constant-curvature mode, key bounds, corollaries, modulus'''
    params = config.params()
    runs = config.runs
    tol = config.tolerances.riccati_tol
    reports = []

    constant = StatReport(experiment='constant_curvature', seed=config.seed)
    for kappa in runs.kappas:
        value = riccati_run(params, None, tol, constant_kappa=kappa).k_plus
        constant.add_row(kappa=kappa, k_plus=value, sqrt_kappa=math.sqrt(kappa),
                         error=abs(value - math.sqrt(kappa)))
    constant.metrics['max_error'] = max(row['error'] for row in constant.rows)
    store.write_report(constant)
    reports.append(constant)
    print(f"✓ constant curvature: max |k+ - sqrt(kappa)| = {constant.metrics['max_error']:.3e}")

    print("🔄 Key curvature bounds on the (s, psi) grid...")
    key = check_lemma_key(params, runs.grid_s, runs.grid_psi, tol, workers=workers)
    store.write_report(key)
    reports.append(key)
    print(f"✓ refinement change {key.metrics['max_refinement_change']:.3%}")

    print(f"🔄 Corollary constants over {runs.corollary_samples} samples...")
    corollaries = check_corollaries(params, runs.corollary_samples,
                                    experiment_seed(config.seed, 'corollaries'), tol, workers=workers)
    store.write_report(corollaries)
    reports.append(corollaries)

    lipschitz = check_curvature_lipschitz(params, runs.lipschitz_pairs,
                                          experiment_seed(config.seed, 'curvature_lipschitz'))
    store.write_report(lipschitz)
    reports.append(lipschitz)

    modulus_start = UnitVector(0.5 * (params.L + params.eps1), 0.0, math.pi / 3.0)
    try:
        modulus = modulus_probe(params, modulus_start, runs.modulus_deltas)
        store.write_report(modulus)
        reports.append(modulus)
    except ConvergenceError as e:
        print(f"⚠️ Modulus check skipped: {e}")

    print(f"✅ {len(reports)} Riccati reports written")
    return reports
