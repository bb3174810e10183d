import json

import pytest

from models.config import MAX_SEED, ExperimentConfig, load_config, with_seed
from utils.errors import ConfigError


def test_defaults_are_valid():
    config = load_config()
    assert config.seed == 0
    assert config.profile.r == 5.0
    assert config.tower.tau_mode == 'unit'
    assert config.params().eps1 == pytest.approx(0.75)


def test_config_from_file(write_config):
    path = write_config({'seed': 7, 'profile': {'L': 0.4}, 'runs': {'clt_samples': 10}})
    config = load_config(path)
    assert config.seed == 7
    assert config.profile.L == 0.4
    assert config.runs.clt_samples == 10
    assert config.echo()['runs']['clt_samples'] == 10


@pytest.mark.parametrize('document', [
    {'unknown': 1},
    {'runs': {'clt_samples_typo': 3}},
    {'tolerances': {'quad_tol': -1.0}},
    {'seed': MAX_SEED + 1},
    {'seed': -1},
    {'profile': {'r': 3.0}},
    {'tower': {'tau_mode': 'poisson'}},
])
def test_invalid_configs(document):
    with pytest.raises(ConfigError):
        load_config(text=json.dumps(document))


def test_malformed_json_and_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(text='{"seed": ')
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / 'missing.json'))


def test_with_seed():
    config = ExperimentConfig()
    assert with_seed(config, None) is config
    assert with_seed(config, 12).seed == 12
    assert config.seed == 0
    with pytest.raises(ConfigError):
        with_seed(config, MAX_SEED + 1)
