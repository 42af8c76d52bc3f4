from anosov_gym.envs.torus_automorphism import TorusAutomorphismEnv
