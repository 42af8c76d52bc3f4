import logging
from typing import Callable, Optional, Sequence

import gym
import numpy as np

from anosov_gym.analysis.correlation import exact_series, fit_decay, vanishing_bound, vanishing_step
from anosov_gym.analysis.observables import smooth_family
from anosov_gym.csystem.matrix_core import build_family_matrix
from anosov_gym.csystem.spectral import compute_spectrum
from anosov_gym.utils.benchmark import rollout

logger = logging.getLogger(__name__)


def decay_analysis_pipeline(
        N: int = 2,
        p: int = 1,
        cutoff: int = 4,
        workers: int = 1,
        noise_floor: Optional[float] = None,
        orbit_length: int = 0,
        seed: Optional[int] = None,
) -> Callable:
    """
    Exact correlation decay of the smooth family against itself, wrapped as a callable.

    Args:
        N: Dimension of the family operator.
        p: Smoothness order of the observable.
        cutoff: Largest frequency per coordinate of the observable.
        workers: Worker processes for the resonance join.
        noise_floor: Absolute floor below which |D_n| is left out of the fit.
        orbit_length: If positive, also run the TorusAutomorphism-v0 environment
            for that many steps and report the time average of the observable.
        seed: Seed of the environment's initial point.
    """
    T = build_family_matrix(N)
    spectrum = compute_spectrum(T)
    f = smooth_family(p, cutoff, N)
    n_star = vanishing_bound(f, f, spectrum.entropy)

    ### Run
    def analyse(n_values: Sequence[int] = None):
        if n_values is None:
            n_values = range(n_star + 1)
        series = exact_series(T, f, f, n_values, workers)
        fit = fit_decay(series, spectrum, f, f, noise_floor)
        logger.info('fitted rate %.4f against bound rate %.4f on %d points',
                    fit.fitted_rate, fit.bound_rate, fit.points_used)

        results = {
            'spectrum': spectrum,
            'observable': f,
            'series': series,
            'fit': fit,
            'vanishing_bound': n_star,
            'vanishing_step': vanishing_step(T, f, f, max(max(n_values), n_star)),
        }

        if orbit_length > 0:
            env = gym.make('TorusAutomorphism-v0', N=N, observable=f, horizon=orbit_length)
            env.seed(seed)
            _, rewards = rollout(env, orbit_length + 1)
            results['orbit_average'] = float(np.mean(rewards))
        return results

    return analyse
