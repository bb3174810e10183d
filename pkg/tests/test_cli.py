import csv
import json

import pytest
from click.testing import CliRunner

from app import cli
from utils.errors import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK
from utils.parallel import experiment_seed


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.setenv('FLATCYL_WORKERS', '1')


def invoke(*args):
    return CliRunner().invoke(cli, list(args), catch_exceptions=False)


def test_tails_writes_results(tmp_path, write_config, small_runs):
    path = write_config({'seed': 5, 'runs': small_runs})
    result = invoke('tails', '--config', path, '--out', str(tmp_path / 'a'))
    assert result.exit_code == EXIT_OK

    out = tmp_path / 'a'
    for name in ('tail_law.csv', 'tail_table.csv', 'tail_histogram.csv', 'flux_uniformity.csv',
                 'neck_tail.csv', 'manifest.json'):
        assert (out / name).exists()
    manifest = json.loads((out / 'manifest.json').read_text())
    assert manifest['command'] == 'tails'
    assert manifest['seed'] == 5
    seeds = {e['experiment']: e['seed'] for e in manifest['experiments']}
    assert seeds['tail_histogram'] == experiment_seed(5, 'tail_histogram')
    assert len({seeds['tail_histogram'], seeds['flux_uniformity'], seeds['neck_tail']}) == 3


def test_reruns_give_identical_tables(tmp_path, write_config, small_runs):
    path = write_config({'seed': 5, 'runs': small_runs})
    for name in ('a', 'b'):
        assert invoke('tower-clt', '--config', path, '--out', str(tmp_path / name)).exit_code == EXIT_OK

    csvs = sorted(p.name for p in (tmp_path / 'a').glob('*.csv'))
    assert csvs
    for name in csvs:
        assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()


def test_seed_override_changes_manifest(tmp_path, write_config, small_runs):
    path = write_config({'seed': 5, 'runs': small_runs})
    assert invoke('tower-clt', '--config', path, '--seed', '9', '--out', str(tmp_path)).exit_code == EXIT_OK
    assert json.loads((tmp_path / 'manifest.json').read_text())['seed'] == 9


def test_malformed_config(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"seed": ', encoding='utf-8')
    result = invoke('tails', '--config', str(path), '--out', str(tmp_path / 'out'))
    assert result.exit_code == EXIT_CONFIG

    record = json.loads((tmp_path / 'out' / 'error.json').read_text())
    assert record['kind'] == 'ConfigError'
    assert record['exit_code'] == EXIT_CONFIG


def test_infeasible_tower(tmp_path, write_config, small_runs):
    path = write_config({'tower': {'sigmas_sq': [3.0]}, 'runs': small_runs})
    result = invoke('tower-clt', '--config', path, '--out', str(tmp_path))
    assert result.exit_code == EXIT_INFEASIBLE
    assert json.loads((tmp_path / 'error.json').read_text())['kind'] == 'InfeasibleTowerError'


def test_unknown_key_rejected(tmp_path, write_config):
    path = write_config({'runs': {'samples': 3}})
    assert invoke('decay', '--config', path, '--out', str(tmp_path)).exit_code == EXIT_CONFIG


def test_bands_fit_both_ranges(tmp_path, write_config):
    runs = {
        'low_band_min': 10, 'low_band_max': 40, 'band_min': 100, 'band_max': 400, 'band_count': 3,
        'samples_per_band': 3, 'distortion_pairs': 2, 'distortion_bands': [40],
    }
    result = invoke('bands', '--config', write_config({'runs': runs}), '--out', str(tmp_path))
    assert result.exit_code == EXIT_OK

    with open(tmp_path / 'band_slopes.csv', newline='', encoding='utf-8') as handle:
        rows = list(csv.DictReader(handle))
    assert {row['range'] for row in rows} == {'low', 'high'}
    low = [row for row in rows if row['range'] == 'low']
    assert {row['band_hi'] for row in low} == {'40'}
    for label in ('low', 'high'):
        assert (tmp_path / f'scaling_Upsilon2_crossing_{label}.csv').exists()
