"""
Exact iteration of x -> T x mod 1 on the dyadic lattice of denominator 2^64.

A coordinate is stored as an unsigned 64-bit word w with value w / 2^64, so
reduction modulo 1 is word wraparound and the dynamics never touches floats.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from anosov_gym.csystem.matrix_core import FIXED_POINT_MODULUS, IntegerMatrix, matrix_power
from anosov_gym.errors import DimensionMismatchError, InvalidParameterError

logger = logging.getLogger(__name__)

WORD_SCALE = 2.0 ** -64


@dataclass(frozen=True)
class TorusPoint:
    """
    Point of the unit N-torus as a tuple of 64-bit fixed-point words.
    """
    words: Tuple[int, ...]

    def __post_init__(self):
        for w in self.words:
            if not 0 <= w < FIXED_POINT_MODULUS:
                raise InvalidParameterError(f'fixed-point word {w} outside [0, 2^64)')

    @property
    def dim(self) -> int:
        return len(self.words)

    @classmethod
    def from_floats(cls, values: Iterable[float]) -> 'TorusPoint':
        """
        Nearest lattice point to each value taken modulo 1 (exact for dyadic inputs).
        """
        return cls(tuple(round(Fraction(v) * FIXED_POINT_MODULUS) % FIXED_POINT_MODULUS for v in values))

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> 'TorusPoint':
        return cls(tuple(int(w) for w in rng.integers(0, FIXED_POINT_MODULUS, size=dim, dtype=np.uint64)))

    @classmethod
    def origin(cls, dim: int) -> 'TorusPoint':
        return cls((0,) * dim)

    def to_floats(self) -> Tuple[float, ...]:
        return tuple(w / FIXED_POINT_MODULUS for w in self.words)

    def hex(self) -> str:
        return ' '.join('{:016x}'.format(w) for w in self.words)


def _check_dim(M: IntegerMatrix, dim: int):
    if M.dim != dim:
        raise DimensionMismatchError(f'{M.dim}x{M.dim} operator applied to a point of dimension {dim}')


def step(M: IntegerMatrix, x: TorusPoint) -> TorusPoint:
    """
    One iteration: each output word is sum_j T_ij word_j modulo 2^64.
    """
    _check_dim(M, x.dim)
    return TorusPoint(M.apply(x.words, FIXED_POINT_MODULUS))


def step_n(M: IntegerMatrix, n: int, x: TorusPoint) -> TorusPoint:
    """
    n iterations at once through T^n with entries reduced modulo 2^64.
    """
    _check_dim(M, x.dim)
    if n < 0:
        raise InvalidParameterError(f'step_n requires n >= 0, got {n}')
    if n == 0:
        return x
    return TorusPoint(matrix_power(M, n, FIXED_POINT_MODULUS).apply(x.words, FIXED_POINT_MODULUS))


def step_words(M: IntegerMatrix, n: int, words: np.ndarray) -> np.ndarray:
    """
    Batched step_n on a (samples, N) uint64 array; row-wise equal to step_n.
    """
    _check_dim(M, words.shape[-1])
    if n == 0:
        return words.copy()
    power = matrix_power(M, n, FIXED_POINT_MODULUS).to_uint64_array()
    # uint64 matmul wraps modulo 2^64
    return words @ power.T


def trajectory(M: IntegerMatrix, x0: TorusPoint, length: int) -> List[TorusPoint]:
    if length < 1:
        raise InvalidParameterError(f'trajectory length must be >= 1, got {length}')
    orbit = [x0]
    for _ in range(length - 1):
        orbit.append(step(M, orbit[-1]))
    return orbit


def torus_distance(x: TorusPoint, y: TorusPoint) -> float:
    """
    Sup-norm distance on the torus, max_i min(|x_i - y_i|, 1 - |x_i - y_i|).
    """
    if x.dim != y.dim:
        raise DimensionMismatchError(f'points of dimension {x.dim} and {y.dim}')
    worst = 0
    for a, b in zip(x.words, y.words):
        d = (a - b) % FIXED_POINT_MODULUS
        worst = max(worst, min(d, FIXED_POINT_MODULUS - d))
    return worst / FIXED_POINT_MODULUS


def separation_time(M: IntegerMatrix, x: TorusPoint, y: TorusPoint, threshold: float = 0.25,
                    max_steps: int = 10000) -> int:
    """
    First n with torus distance of T^n x and T^n y above `threshold`.
    """
    for n in range(max_steps + 1):
        if torus_distance(x, y) > threshold:
            return n
        x, y = step(M, x), step(M, y)
    raise InvalidParameterError(f'points did not separate beyond {threshold} within {max_steps} steps')


def sensitivity_horizon(lyapunov_max: float, slack: int = 5) -> int:
    """
    Steps needed by the largest expansion rate to blow a last-bit
    perturbation up to order one, plus `slack`.
    """
    return math.ceil(64 * math.log(2) / lyapunov_max) + slack


def trajectory_rows(orbit: Sequence[TorusPoint]) -> List[List[str]]:
    """
    CSV rows (header first) with coordinates as 17-digit doubles.
    """
    dim = orbit[0].dim
    rows = [['x_{}'.format(i) for i in range(dim)]]
    for point in orbit:
        rows.append(['{:.17g}'.format(v) for v in point.to_floats()])
    return rows


def trajectory_hex(orbit: Sequence[TorusPoint]) -> str:
    return '\n'.join(point.hex() for point in orbit) + '\n'
