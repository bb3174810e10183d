"""Flat-file result store: CSV tables, the run manifest and error records."""
import csv
import json
import math
import os
import platform
from importlib import metadata

from dotenv import load_dotenv

load_dotenv()

DEFAULT_OUT_DIR = './results'
PACKAGES = ('numpy', 'scipy', 'pydantic', 'click', 'python-dotenv')

# Global store
_store = None


def format_value(value):
    '''CSV cell text; floats keep 17 significant digits'''
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return 'nan'
        return format(value, '.17g')
    if hasattr(value, 'item'):
        return format_value(value.item())
    return str(value)


def _json_ready(value):
    if isinstance(value, dict):
        return {str(k): _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if hasattr(value, 'item'):
        return _json_ready(value.item())
    return value


def package_versions():
    versions = {'python': platform.python_version()}
    for name in PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


class ResultStore:
    '''All files of one run live under `root`; every write is recorded for the manifest'''

    def __init__(self, root):
        self.root = root
        self.files = []
        os.makedirs(root, exist_ok=True)

    def path(self, name):
        return os.path.join(self.root, name)

    def subdir(self, name):
        return ResultStore(self.path(name))

    def write_csv(self, name, rows, columns=None):
        """RFC-4180 CSV with a header row"""
        rows = list(rows)
        if columns is None:
            columns = list(rows[0]) if rows else []
        with open(self.path(name), 'w', encoding='utf-8', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_value(row.get(c, '')) for c in columns])
        self.files.append(name)
        return self.path(name)

    def write_report(self, report, name=None):
        name = name or f'{report.experiment}.csv'
        return self.write_csv(name, report.rows, report.columns or None)

    def write_json(self, name, payload):
        with open(self.path(name), 'w', encoding='utf-8') as handle:
            json.dump(_json_ready(payload), handle, indent=2, sort_keys=True)
            handle.write('\n')
        self.files.append(name)
        return self.path(name)

    def write_manifest(self, command, config, summaries, wall_time):
        '''Config echo, package versions and wall time; the only file that changes between reruns'''
        return self.write_json('manifest.json', {
            'command': command,
            'config': config,
            'seed': config.get('seed') if isinstance(config, dict) else None,
            'versions': package_versions(),
            'wall_time_s': wall_time,
            'experiments': summaries,
            'files': sorted(set(self.files)),
        })

    def write_error(self, record):
        return self.write_json('error.json', record)


def init_store(out_dir=None):
    """Bind the global store to an output directory"""
    global _store

    if out_dir is None:
        out_dir = os.getenv('FLATCYL_OUT_DIR', DEFAULT_OUT_DIR)

    _store = ResultStore(out_dir)
    return _store


def get_store():
    '''Get the store (lazy initialization)'''
    global _store

    if _store is None:
        return init_store()

    return _store


def close_store():
    global _store
    _store = None
