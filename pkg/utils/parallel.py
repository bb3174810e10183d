"""Seeded worker pools.

Every Monte Carlo shard owns a generator derived from (seed, index), so the
merged result does not depend on how many workers ran or in which order
they finished.
"""
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from numpy.random import SeedSequence, default_rng

from utils.errors import DomainError

# one child of the root SeedSequence per experiment, spawned in this order
EXPERIMENT_STREAMS = (
    'conservation', 'transition_oracle', 'distortion', 'corollaries', 'curvature_lipschitz',
    'tail_histogram', 'flux_uniformity', 'neck_tail', 'clt', 'pair_condition',
    'adde_correlation', 'wip', 'coupled_pair_condition', 'decay',
)


def default_workers():
    '''Worker count from FLATCYL_WORKERS, else the CPU count'''
    value = os.getenv('FLATCYL_WORKERS')
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            print(f"⚠️ Ignoring FLATCYL_WORKERS={value!r}: not an integer")
    return os.cpu_count() or 1


def spawn_seeds(seed, n):
    """n independent child sequences of the experiment seed"""
    return SeedSequence(seed).spawn(n)


def experiment_seed(seed, name):
    """Integer seed of the child sequence owned by experiment `name`"""
    if name not in EXPERIMENT_STREAMS:
        raise DomainError(f'No random stream registered for {name!r}')
    child = spawn_seeds(seed, len(EXPERIMENT_STREAMS))[EXPERIMENT_STREAMS.index(name)]
    return int(child.generate_state(1, np.uint64)[0])


def stream(seed, index):
    '''Generator for shard `index`; equal to default_rng(spawn_seeds(seed, k)[index]) for any k > index'''
    return default_rng(SeedSequence(seed, spawn_key=(index,)))


def pool_map(fn, items, workers=1):
    """Map fn over items, results in item order.

    fn must be picklable (a module-level function or a functools.partial of
    one) when workers > 1.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    chunksize = max(1, len(items) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
