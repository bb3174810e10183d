from utils.parallel import experiment_seed
from utils.transit import conservation_check, transition_oracle_check


def run(config, store, workers=1):
    """Clairaut conservation along the ODE and the closed-form map against it"""
    params = config.params()
    tol = config.tolerances
    runs = config.runs

    print(f"🔄 Integrating {runs.conservation_samples} geodesics to T = {runs.conservation_horizon:g}...")
    conservation = conservation_check(params, runs.conservation_samples, runs.conservation_horizon,
                                      experiment_seed(config.seed, 'conservation'), tol.ode_tol, workers)
    store.write_report(conservation)
    m = conservation.metrics
    print(f"✓ sup |dc| = {m['max_drift']:.3e}, {m['full_horizon']} runs reached T "
          f"(longest {m['span_max']:.4g}, {m['turning_points']} turning points)")

    print(f"🔄 Checking {runs.oracle_vectors} transitions against the ODE...")
    oracle = transition_oracle_check(params, runs.oracle_vectors, runs.oracle_n_max,
                                     experiment_seed(config.seed, 'transition_oracle'),
                                     tol.quad_tol, tol.ode_tol, workers)
    store.write_report(oracle)
    print(f"✓ max |zeta error| = {oracle.metrics['max_zeta_error']:.3e}, "
          f"max |time error| = {oracle.metrics['max_time_error']:.3e}")

    return [conservation, oracle]
