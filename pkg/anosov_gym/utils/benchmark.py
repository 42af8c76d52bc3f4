"""
Generic run helpers:

rollout(env, tmax)       iterate an environment and collect observations/rewards
parallel_map(...)        fan work out to a process pool, results in submission order
write_csv / write_json   artifacts with a reproducibility header
"""

import csv
import json
import logging
import platform
from multiprocessing import Pool

import numpy as np
from tqdm import tqdm

import anosov_gym

logger = logging.getLogger(__name__)


def rollout(env, tmax, verbose=False):
    """
    Run single episode of an autonomous environment.
    Return: (observations, rewards), observations include the initial one.
    """
    observation = env.reset()
    observations, rewards = [observation], []
    for t in range(tmax - 1):
        observation, r, done, _ = env.step(0)
        observations.append(observation)
        rewards.append(r)
        if verbose:
            env.render()
        if done:
            break
    return observations, rewards


def parallel_map(fn, args_pool, n_workers=1, progress=False):
    """
    Apply fn to every argument tuple; results come back in submission order,
    so reductions over them do not depend on n_workers.
    """
    if n_workers <= 1 or len(args_pool) <= 1:
        return [fn(*args) for args in tqdm(args_pool, disable=not progress)]
    logger.debug('%d tasks on %d worker processes', len(args_pool), n_workers)
    with Pool(processes=n_workers) as pool:
        results_pool = [pool.apply_async(fn, args) for args in args_pool]
        return [result.get() for result in tqdm(results_pool, disable=not progress)]


def reproducibility_header(config, seed=None):
    return {
        'tool': 'anosov_gym',
        'version': anosov_gym.__version__,
        'python': platform.python_version(),
        'numpy': np.__version__,
        'seed': seed,
        'config': config,
    }


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f'not JSON serializable: {type(obj).__name__}')


def write_header(stream, header):
    stream.write('# ' + json.dumps(header, sort_keys=True, default=_jsonable) + '\n')


def write_csv(stream, rows, header):
    """
    Rows (first row = column names) preceded by `# `-prefixed header lines.
    """
    write_header(stream, header)
    w = csv.writer(stream, lineterminator='\n')
    for row in rows:
        w.writerow(row)


def write_json(stream, data, header):
    json.dump({'header': header, 'data': data}, stream, indent=2, sort_keys=True, default=_jsonable)
    stream.write('\n')
