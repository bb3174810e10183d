import json
import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from models.geometry import ProfileParams  # noqa: E402


@pytest.fixture
def params():
    return ProfileParams(r=5.0, L=0.5, eps0=1.0)


@pytest.fixture
def small_runs():
    '''Run sizes small enough for the test suite'''
    return {
        'tail_n': [100, 1000],
        'histogram_samples': 20000,
        'histogram_bins': 10,
        'uniformity_samples': 5000,
        'neck_samples': 100000,
        'n_grid': [256, 1024],
        'clt_samples': 200,
        'moment_p': [100, 1000],
        'pair_n_set': [1, 2],
        'pair_k_max': 4,
        'pair_l_max': 4,
        'adde_n_max': 4,
        'correlation_orbit': 20000,
    }


@pytest.fixture
def write_config(tmp_path):
    def write(document, name='config.json'):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding='utf-8')
        return str(path)
    return write
