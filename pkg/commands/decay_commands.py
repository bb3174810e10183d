from commands.wip_commands import coupled_from
from utils.parallel import experiment_seed
from utils.tower import decay_experiments


def _mark(passed):
    return '✓' if passed else '⚠️'


def run(config, store, workers=1):
    """Block-sum tail and the n^-1 decay of correlations for the global map"""
    runs = config.runs
    model = coupled_from(config, workers)

    print(f"🔄 Orbit of {runs.orbit_len} steps, lags {runs.lags}...")
    seed = experiment_seed(config.seed, 'decay')
    decay = decay_experiments(model, runs.orbit_len, runs.lags, seed, runs.block_tail_n)
    store.write_report(decay)
    store.write_report(decay.table)

    m = decay.metrics
    print(f"{_mark(m['slope_pass'])} slope {m['slope']:.3f}")
    print(f"{_mark(m['n_cov_pass'])} n Cov {m['n_cov_limit']:.4g} "
          f"(asymptotic {m['asymptotic_constant']:.4g}, renewal {m['renewal_n_cov']:.4g})")
    print(f"{_mark(m['tail_pass'])} n^2 tail at n={m['tail_n']}: {m['tail_scaled']:.4g} "
          f"(target {m['tail_target']:.4g}, winding part off by {m['tail_winding_relative_deviation']:.2%})")
    if m['undersampled_lags']:
        print(f"⚠️ {m['undersampled_lags']} undersampled lags")
    if not m['acceptance_pass']:
        print("⚠️ Decay acceptance not met at this orbit length")

    return [decay, decay.table]
