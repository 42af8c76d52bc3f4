from gym.envs.registration import register

__version__ = '0.1.0'

register(
    id='TorusAutomorphism-v0',
    entry_point='anosov_gym.envs:TorusAutomorphismEnv',
)
