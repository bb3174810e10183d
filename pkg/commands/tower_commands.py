from utils.parallel import experiment_seed
from utils.tower import (
    Adde_correlation, build_tower, nonstandard_clt_test, pair_condition_check, second_moment_report,
)


def run(config, store, workers=1):
    """Nonstandard CLT on the synthetic tower, with its hypotheses checked"""
    runs = config.runs
    model = build_tower(config.tower)
    print(f"✓ Tower built: sigma_J^2 = {model.sigma_J_sq:.6g}, tau_bar = {model.tau_bar:g}")

    moment = second_moment_report(model, runs.moment_p)
    store.write_report(moment)

    print(f"🔄 Birkhoff sums along n = {runs.n_grid} ({runs.clt_samples} samples each)...")
    clt = nonstandard_clt_test(model, 'JR0', runs.n_grid, runs.clt_samples,
                               experiment_seed(config.seed, 'clt'), workers)
    store.write_report(clt)
    if 'final_variance_ratio' in clt.metrics:
        print(f"✓ variance ratio {clt.metrics['final_variance_ratio']:.4f}, "
              f"KS {clt.metrics['final_ks_fitted']:.4f}")
    else:
        print("⚠️ sigma_J^2 = 0: checked the standard CLT branch instead")

    pairs = pair_condition_check(model, runs.pair_k_max, runs.pair_l_max, runs.pair_n_set,
                                 runs.correlation_orbit, experiment_seed(config.seed, 'pair_condition'))
    store.write_report(pairs)

    d, e, d_p, e_p = runs.adde_window
    adde = Adde_correlation(model, d, e, d_p, e_p, runs.adde_n_max, runs.correlation_orbit,
                            experiment_seed(config.seed, 'adde_correlation'))
    store.write_report(adde)
    print(f"✓ pair constant {pairs.metrics['max_constant']:.4g}, gamma {adde.metrics['gamma']:.4g}")

    return [moment, clt, pairs, adde]
