import csv
import json

import numpy as np

from models.reports import StatReport
from utils.store import ResultStore, close_store, format_value, get_store, init_store


def test_format_value():
    assert format_value(0.1) == '0.10000000000000001'
    assert format_value(True) == '1'
    assert format_value(3) == '3'
    assert format_value(np.float64(0.5)) == '0.5'
    assert format_value(float('nan')) == 'nan'
    assert format_value('crossing') == 'crossing'


def test_csv_has_header_and_rows(tmp_path):
    store = ResultStore(str(tmp_path))
    store.write_csv('t.csv', [{'n': 1, 'mass': 0.25}, {'n': 2, 'mass': 1e-20}])
    with open(tmp_path / 't.csv', newline='') as handle:
        rows = list(csv.reader(handle))
    assert rows == [['n', 'mass'], ['1', '0.25'], ['2', '9.9999999999999995e-21']]


def test_report_and_manifest(tmp_path):
    store = ResultStore(str(tmp_path))
    report = StatReport(experiment='demo', seed=3)
    report.add_row(n=1, value=2.0)
    report.metrics['slope'] = 1.0
    store.write_report(report)
    store.write_manifest('demo', {'seed': 3}, [report.summary()], 0.5)

    manifest = json.loads((tmp_path / 'manifest.json').read_text())
    assert manifest['command'] == 'demo'
    assert manifest['seed'] == 3
    assert manifest['files'] == ['demo.csv']
    assert 'numpy' in manifest['versions']
    assert (tmp_path / 'demo.csv').read_text().splitlines()[0] == 'n,value'


def test_reruns_are_byte_identical(tmp_path):
    rows = [{'x': v} for v in np.linspace(0.0, 1.0, 7)]
    first = ResultStore(str(tmp_path / 'a')).write_csv('x.csv', rows)
    second = ResultStore(str(tmp_path / 'b')).write_csv('x.csv', rows)
    assert open(first, 'rb').read() == open(second, 'rb').read()


def test_global_store(tmp_path, monkeypatch):
    monkeypatch.setenv('FLATCYL_OUT_DIR', str(tmp_path / 'env'))
    close_store()
    store = get_store()
    assert store.root == str(tmp_path / 'env')
    assert init_store(str(tmp_path / 'explicit')).root == str(tmp_path / 'explicit')
    close_store()
