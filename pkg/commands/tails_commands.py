from utils.flux import (
    flux_uniformity_check, neck_tail_report, tail_histogram, tail_law_report, tail_table,
)
from utils.parallel import experiment_seed


def run(config, store, workers=1):
    """Exact winding law, its Monte Carlo histogram and the neck-time tail"""
    params = config.params()
    runs = config.runs
    L = params.L

    law = tail_law_report(L, runs.tail_n, config.tower.A_total)
    store.write_report(law)
    print(f"✓ n^3 mass pi/(8L^2): max deviation {law.metrics['max_relative_deviation']:.3e}")

    table = tail_table(L, runs.histogram_bins, config.tower.A_total)
    store.write_csv('tail_table.csv', [{'n': n, 'tail_mass': m} for n, m in sorted(table.masses.items())])

    print(f"🔄 Histogram of {runs.histogram_samples} flux samples...")
    histogram = tail_histogram(L, experiment_seed(config.seed, 'tail_histogram'), runs.histogram_samples,
                               runs.histogram_bins, workers)
    store.write_report(histogram)
    print(f"✓ {histogram.metrics['bins_outside_interval']} bins outside the 3-sigma interval")

    uniformity = flux_uniformity_check(experiment_seed(config.seed, 'flux_uniformity'),
                                       runs.uniformity_samples)
    store.write_report(uniformity)
    m = uniformity.metrics
    mark = '✓' if m['uniform_pass'] else '❌'
    print(f"{mark} flux sampler KS: cos psi {m['ks_cos_psi']:.2e}, theta {m['ks_theta']:.2e} "
          f"(threshold {m['ks_threshold']:.2e})")

    print(f"🔄 Neck-time tail from {runs.neck_samples} entry vectors...")
    neck = neck_tail_report(params, runs.neck_samples, experiment_seed(config.seed, 'neck_tail'),
                            runs.neck_window, quad_tol=config.tolerances.quad_tol, workers=workers)
    store.write_report(neck)
    print(f"✓ neck tail exponent {neck.metrics['fitted_exponent']:.3f} "
          f"(target {neck.metrics['target_exponent']:.3f})")

    return [law, histogram, uniformity, neck]
