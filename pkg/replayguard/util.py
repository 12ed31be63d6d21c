import logging
import zlib

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from tqdm import tqdm


__all__ = (
    "stage_key",
    "seed_sequence",
    "make_rng",
    "ordered_map",
)

log = logging.getLogger(__name__)


def stage_key(name):
    """
    Stable integer key for a stage name, independent of PYTHONHASHSEED
    """
    return zlib.crc32(str(name).encode("utf-8"))


def seed_sequence(seed, *keys):
    spawn_key = tuple(stage_key(k) if isinstance(k, str) else int(k) for k in keys)
    return np.random.SeedSequence(int(seed), spawn_key=spawn_key)


def make_rng(seed, *keys):
    """
    All randomness in the package flows through here: one top-level seed,
    expanded per stage (and per item where needed) by spawn keys
    """
    return np.random.default_rng(seed_sequence(seed, *keys))


def ordered_map(func, items, workers=1, desc=None, quiet=True):
    """
    Maps func over items, results in input order regardless of scheduling
    """
    items = list(items)
    progress = tqdm(total=len(items), desc=desc, disable=quiet, leave=False)
    try:
        if workers is None or workers <= 1 or len(items) <= 1:
            results = []
            for item in items:
                results.append(func(item))
                progress.update()

            return results

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = []
            for result in pool.map(func, items):
                results.append(result)
                progress.update()

            return results

    finally:
        progress.close()
