import json
import time
import warnings

import click
from dotenv import load_dotenv

# Load environment variables FIRST
load_dotenv()

from commands import (
    bands_commands, decay_commands, riccati_commands, tails_commands,
    tower_commands, transition_commands, wip_commands,
)
from models.config import load_config, with_seed
from utils.errors import EXIT_OK, EXIT_UNEXPECTED, LabError
from utils.parallel import default_workers
from utils.store import close_store, init_store

# Register ALL subcommands
SUBCOMMANDS = {
    'transition': transition_commands.run,
    'bands': bands_commands.run,
    'riccati': riccati_commands.run,
    'tails': tails_commands.run,
    'tower-clt': tower_commands.run,
    'wip': wip_commands.run,
    'decay': decay_commands.run,
}


def _run_one(name, config, store, workers):
    started = time.perf_counter()
    print(f"🔄 Running {name} (seed {config.seed}, {workers} workers)...")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always')
        reports = SUBCOMMANDS[name](config, store, workers)
    for w in caught:
        print(f"⚠️ {w.message}")

    elapsed = time.perf_counter() - started
    store.write_manifest(name, config.echo(), [r.summary() for r in reports], elapsed)
    print(f"✅ {name} finished in {elapsed:.1f}s -> {store.root}")


def run(subcommand, config_path=None, out_dir=None, seed=None, workers=None):
    """Run one subcommand (or `all`) and return the process exit status"""
    if subcommand != 'all' and subcommand not in SUBCOMMANDS:
        raise click.UsageError(f'Unknown subcommand {subcommand!r}')

    store = init_store(out_dir)
    started = time.perf_counter()
    try:
        config = with_seed(load_config(config_path), seed)
        workers = workers or default_workers()

        if subcommand == 'all':
            for name in SUBCOMMANDS:
                _run_one(name, config, store.subdir(name), workers)
            store.write_manifest('all', config.echo(), [], time.perf_counter() - started)
        else:
            _run_one(subcommand, config, store, workers)
        return EXIT_OK

    except LabError as e:
        print(f"❌ {type(e).__name__}: {e}")
        record = e.record()
    except Exception as e:
        print(f"❌ Unexpected error: {e}")
        record = {'error': str(e), 'kind': type(e).__name__, 'exit_code': EXIT_UNEXPECTED}
    finally:
        close_store()

    store.write_error(record)
    print(json.dumps(record))
    return record['exit_code']


@click.group()
def cli():
    """Numerical laboratory for geodesic flows on surfaces with a flat cylinder."""


def _command(name):
    @click.command(name=name)
    @click.option('--config', 'config_path', type=click.Path(dir_okay=False),
                  help='JSON experiment configuration (defaults when omitted)')
    @click.option('--seed', type=int, default=None, help='Override the configured seed')
    @click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=None,
                  help='Output directory (default: $FLATCYL_OUT_DIR or ./results)')
    def command(config_path, seed, out_dir):
        click.get_current_context().exit(run(name, config_path, out_dir, seed))

    command.help = f'Run the {name} experiments.' if name != 'all' else 'Run every subcommand.'
    return command


for _name in [*SUBCOMMANDS, 'all']:
    cli.add_command(_command(_name))


def main():
    cli()


if __name__ == '__main__':
    main()
