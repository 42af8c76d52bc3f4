"""
Characteristic time scales of a C-system, in units of iterations:

decorrelation  tau0 = 1 / (h nu)
interaction    t_int = 1
stationary     tau = ln(1 / dv0) / h

dv0 is passed as log2(1 / dv0) since 2^-(61 N) underflows a double.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from anosov_gym.errors import DivergenceError, InvalidDimensionError, InvalidParameterError
from anosov_gym.utils.utils import close, matches_printed

logger = logging.getLogger(__name__)

INTERACTION_TIME = 1.0

# Inputs of the two published MIXMAX time-scale reports, with their printed figures.
MIXMAX_PRESETS = {
    'mixmax240': {'N': 240, 'p': 1, 'h': 8679.0, 'log2_inv_dv0': 61 * 240,
                  'reported': {'tau0': '0.000004', 'tau': '1.17'}},
    'mixmax256': {'N': 256, 'p': 1, 'h': 194.0, 'log2_inv_dv0': 61 * 256,
                  'reported': {'tau0': '0.000012', 'tau': '95'}},
}


def _positive(name, value):
    if not value > 0:
        raise InvalidParameterError(f'{name} must be positive, got {value}')


def decorrelation_time(h: float, nu: float) -> float:
    _positive('entropy h', h)
    _positive('nu', nu)
    return 1.0 / (h * nu)


def decorrelation_time_family(N: int, p: int) -> float:
    """
    pi / (4 p N^2): tau0 with the asymptotic entropy 2N/pi and nu = 2pN.
    """
    if N < 2:
        raise InvalidDimensionError(f'dimension must be >= 2, got {N}')
    if p < 1:
        raise InvalidParameterError(f'smoothness p must be >= 1, got {p}')
    return math.pi / (4.0 * p * N * N)


def stationary_time(h: float, log2_inv_dv0: float) -> float:
    _positive('entropy h', h)
    _positive('log2(1/dv0)', log2_inv_dv0)
    return log2_inv_dv0 * math.log(2.0) / h


def variance_bound(C: float, h: float, nu: float) -> float:
    """
    sigma_f^2 <= 4C (1 + e^{-h nu}) / (1 - e^{-h nu}) = 4C coth(h nu / 2).
    """
    if C < 0:
        raise InvalidParameterError(f'prefactor C must be >= 0, got {C}')
    x = h * nu
    if x == 0:
        raise DivergenceError('variance bound diverges at h * nu = 0')
    if x < 0:
        raise InvalidParameterError(f'h * nu must be positive, got {x}')
    return 4.0 * C / math.tanh(0.5 * x)


@dataclass(frozen=True)
class TimeScales:
    tau0_exact: float
    tau0_family: float
    tau: float
    inputs: Dict[str, float]
    t_int: float = INTERACTION_TIME
    ordered: bool = True
    discrepancies: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        expected = self.inputs['log2_inv_dv0'] * math.log(2.0) / self.inputs['h']
        if not close(self.tau, expected, rel=1e-12):
            raise InvalidParameterError(f'stationary time {self.tau} inconsistent with its inputs ({expected})')

    def to_dict(self) -> dict:
        return {
            'tau0_exact': self.tau0_exact,
            'tau0_family': self.tau0_family,
            't_int': self.t_int,
            'tau': self.tau,
            'ordered': self.ordered,
            'inputs': dict(self.inputs),
            'discrepancies': list(self.discrepancies),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def display(self):
        print('Displaying time scales:')
        print('tau0 1/(h nu)      :', self.tau0_exact)
        print('tau0 pi/(4pN^2)    :', self.tau0_family)
        print('t_int              :', self.t_int)
        print('tau                :', self.tau)
        print('Ordered            :', self.ordered)
        for d in self.discrepancies:
            print('Discrepancy        :', d)


def timescale_report(N: int, p: int, h: float, log2_inv_dv0: float,
                     reported: Optional[Dict[str, str]] = None) -> TimeScales:
    """
    All three scales for an N-dimensional system of entropy h with
    observables of smoothness p. `reported` holds printed figures to check
    against ('tau0', 'tau'); each formula that does not round to its figure
    adds a discrepancy line instead of failing.
    """
    nu = 2.0 * p * N
    tau0_exact = decorrelation_time(h, nu)
    tau0_family = decorrelation_time_family(N, p)
    tau = stationary_time(h, log2_inv_dv0)

    ordered = tau0_exact < INTERACTION_TIME < tau
    if not ordered:
        logger.warning('time scales not ordered: tau0=%.6g t_int=%.1f tau=%.6g', tau0_exact, INTERACTION_TIME, tau)

    discrepancies = []
    reported = reported or {}
    if 'tau0' in reported:
        for name, value in (('tau0_exact', tau0_exact), ('tau0_family', tau0_family)):
            if not matches_printed(value, reported['tau0']):
                discrepancies.append(f'{name}: formula gives {value:.6g}, reported {reported["tau0"]}')
    if 'tau' in reported and not matches_printed(tau, reported['tau']):
        discrepancies.append(f'tau: formula gives {tau:.6g}, reported {reported["tau"]}')
    for d in discrepancies:
        logger.warning('discrepancy against printed value, %s', d)

    inputs = {'h': h, 'nu': nu, 'p': p, 'N': N, 'log2_inv_dv0': log2_inv_dv0}
    return TimeScales(tau0_exact, tau0_family, tau, inputs, ordered=ordered, discrepancies=tuple(discrepancies))


def preset_report(name: str) -> TimeScales:
    if name not in MIXMAX_PRESETS:
        raise InvalidParameterError(f'unknown preset {name!r}, expected one of {sorted(MIXMAX_PRESETS)}')
    preset = MIXMAX_PRESETS[name]
    return timescale_report(preset['N'], preset['p'], preset['h'], preset['log2_inv_dv0'], preset['reported'])
