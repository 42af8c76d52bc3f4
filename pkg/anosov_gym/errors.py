"""
Exceptions raised by anosov_gym.

Every class carries a stable `code`, which the command line reports in its
JSON error payload.
"""


class AnosovGymError(Exception):
    code = 'anosov-gym-error'


class InvalidDimensionError(AnosovGymError, ValueError):
    code = 'invalid-dimension'


class DimensionMismatchError(AnosovGymError, ValueError):
    code = 'dimension-mismatch'


class InvalidParameterError(AnosovGymError, ValueError):
    code = 'invalid-parameter'


class ConvergenceError(AnosovGymError, ArithmeticError):
    code = 'convergence'


class NotCSystemError(AnosovGymError, ValueError):
    code = 'not-c-system'


class NumericalDegeneracyError(AnosovGymError, ArithmeticError):
    code = 'numerical-degeneracy'


class TooFewPointsError(AnosovGymError, ValueError):
    code = 'too-few-points'


class DivergenceError(AnosovGymError, ArithmeticError):
    code = 'divergence'
