import gym
import numpy as np
import pytest

import anosov_gym  # noqa: F401  registers the environment
from anosov_gym.analysis.observables import smooth_family
from anosov_gym.csystem.matrix_core import build_family_matrix
from anosov_gym.csystem.torus_dynamics import TorusPoint, step
from anosov_gym.envs import TorusAutomorphismEnv
from anosov_gym.pipelines import decay_analysis_pipeline
from anosov_gym.utils.benchmark import rollout


@pytest.fixture
def observable():
    return smooth_family(1, 2, 2)


def test_registered_environment(observable):
    env = gym.make('TorusAutomorphism-v0', N=2, observable=observable, horizon=10)
    env.seed(1)
    obs = env.reset()
    assert obs.shape == (2,)
    assert np.all((obs >= 0.0) & (obs < 1.0))
    assert isinstance(env.unwrapped, TorusAutomorphismEnv)


def test_step_follows_exact_dynamics():
    env = TorusAutomorphismEnv(N=3, observable=smooth_family(1, 1, 3), horizon=5)
    env.seed(2)
    env.reset()
    start = env.state[0]
    obs, reward, done, info = env.step(0)
    expected = step(build_family_matrix(3), start)
    assert info['words'] == expected.words
    assert tuple(obs) == expected.to_floats()
    assert reward == env.observable.evaluate(expected)
    assert not done


def test_horizon_and_seeding(observable):
    a = TorusAutomorphismEnv(observable=observable, horizon=4)
    b = TorusAutomorphismEnv(observable=observable, horizon=4)
    a.seed(9)
    b.seed(9)
    assert np.array_equal(a.reset(), b.reset())
    dones = [a.step(0)[2] for _ in range(4)]
    assert dones == [False, False, False, True]
    assert a.state[1] == 4


def test_transition_and_equality():
    env = TorusAutomorphismEnv()
    x = TorusPoint.from_floats([0.5, 0.25])
    (y, t), reward, done = env.transition((x, 0), 0, False)
    assert y.to_floats() == (0.75, 0.0)
    assert t == 0 and reward == 0.0
    assert env.equality_operator((x, 3), (x, 7))
    assert not env.equality_operator((x, 0), (y, 0))


def test_rollout_stops_at_horizon(observable):
    env = TorusAutomorphismEnv(observable=observable, horizon=6)
    env.seed(0)
    observations, rewards = rollout(env, 50)
    assert len(rewards) == 6
    assert len(observations) == 7


def test_pipeline_results():
    analyse = decay_analysis_pipeline(N=2, p=1, cutoff=4, orbit_length=2000, seed=3)
    results = analyse()
    assert not results['fit'].violation
    assert results['vanishing_step'] <= results['vanishing_bound']
    assert results['series'].n_values == tuple(range(results['vanishing_bound'] + 1))
    assert abs(results['orbit_average']) <= 0.08
