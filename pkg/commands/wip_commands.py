from models.reports import StatReport
from utils.parallel import experiment_seed
from utils.tower import build_coupled_model, nonstandard_clt_test, pair_condition_check


def coupled_from(config, workers=1):
    print("🔄 Building the coupled tower from the transition law...")
    model = build_coupled_model(config.params(), config.tower, config.tolerances.quad_tol, workers)
    print(f"✓ R_bar = {model.r_bar:.6g}, sigma_R^2 = {model.sigma_R_sq:.6g}")
    return model


def constants_report(model):
    report = StatReport(experiment='coupled_constants')
    constants = model.constants()
    for name, value in constants.items():
        report.add_row(name=name, value=value)
    report.metrics.update(constants)
    report.metrics['identity_error'] = abs(model.sigma_v_sq - model.b_S * model.I_v)
    return report


def run(config, store, workers=1):
    '''Finite-dimensional marginals of W_n for the flow observable on the coupled model'''
    runs = config.runs
    model = coupled_from(config, workers)

    constants = constants_report(model)
    store.write_report(constants)

    print(f"🔄 W_n(t) marginals along n = {runs.n_grid}...")
    wip = nonstandard_clt_test(model, 'V', runs.n_grid, runs.clt_samples,
                               experiment_seed(config.seed, 'wip'), workers, wip=True)
    store.write_report(wip)
    if 'max_ratio_error' in wip.metrics:
        print(f"✓ sigma_v^2 = {wip.metrics['sigma_v_sq']:.6g}, "
              f"max ratio error {wip.metrics['max_ratio_error']:.3f}")

    pairs = pair_condition_check(model, runs.pair_k_max, runs.pair_l_max, runs.pair_n_set,
                                 runs.correlation_orbit,
                                 experiment_seed(config.seed, 'coupled_pair_condition'))
    store.write_report(pairs, 'coupled_pair_condition.csv')

    return [constants, wip, pairs]
