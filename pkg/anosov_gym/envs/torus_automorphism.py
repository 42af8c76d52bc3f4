"""
TorusAutomorphism-v0

Autonomous system x -> T x mod 1 on the 2^64 lattice of the N-torus, with
the family operator T. The single action leaves the dynamics unchanged; the
reward is an optional observable read on the new point.
"""

import logging

import gym
import numpy as np
from gym import spaces
from gym.utils import seeding

from anosov_gym.csystem.matrix_core import build_family_matrix
from anosov_gym.csystem.torus_dynamics import TorusPoint, step

logger = logging.getLogger(__name__)


class TorusAutomorphismEnv(gym.Env):
    metadata = {'render.modes': ['human']}

    def __init__(self, N=2, observable=None, horizon=100, matrix=None):
        self.N = N
        self.T = build_family_matrix(N) if matrix is None else matrix
        self.observable = observable
        self.horizon = horizon

        self.action_space = spaces.Discrete(1)
        self.observation_space = spaces.Box(low=0.0, high=1.0, shape=(N,), dtype=np.float64)

        self._seed()
        self.state = None

    def equality_operator(self, s1, s2):
        '''
        Equality operator, return True if the two input states are equal.
        Points are compared word by word, times are ignored.
        '''
        return s1[0] == s2[0]

    def reset(self):
        words = np.frombuffer(self.np_random.bytes(8 * self.N), dtype='<u8')
        self.state = (TorusPoint(tuple(int(w) for w in words)), 0)
        return np.array(self.state[0].to_floats())

    def _seed(self, seed=None):
        self.np_random, seed = seeding.np_random(seed)
        return [seed]

    def seed(self, seed=None):
        return self._seed(seed)

    def transition(self, state, action, is_model_dynamic):
        '''
        Transition operator, return the resulting state, reward and a boolean indicating
        whether the horizon is reached or not.
        The boolean is_model_dynamic indicates whether the time counter is incremented.
        '''
        point, time = state
        point_p = step(self.T, point)
        if is_model_dynamic:
            time = time + 1
        reward = 0.0 if self.observable is None else self.observable.evaluate(point_p)
        done = time >= self.horizon
        return (point_p, time), reward, done

    def step(self, action):
        '''
        Step function equivalent to transition and reward function.
        Actually modifies the environment's state attribute.
        Return (observation, reward, termination criterion (boolean), informations)
        '''
        assert self.action_space.contains(action), "%r (%s) invalid" % (action, type(action))
        self.state, reward, done = self.transition(self.state, action, True)
        return np.array(self.state[0].to_floats()), reward, done, {'words': self.state[0].words}

    def render(self, mode='human', close=False):
        if self.state is not None:
            print('t={}: {}'.format(self.state[1], self.state[0].hex()))
