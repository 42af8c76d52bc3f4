"""
MIXMAX-style generator: the state is an integer N-vector over the prime
field p = 2^61 - 1 and each step applies the family matrix,

    state' = T state mod p,   outputs state'_i / p.

The outputs are the plain state / p values, with no skipping or tempering.
Stream i of a seed starts at jump 2^64 * i.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from anosov_gym.csystem.matrix_core import MERSENNE_61, IntegerMatrix, build_family_matrix, matrix_power
from anosov_gym.errors import DimensionMismatchError, InvalidDimensionError, InvalidParameterError
from anosov_gym.utils.distribution import chisquare_uniform, coordinate_mean_test, serial_correlation

logger = logging.getLogger(__name__)

STREAM_SPACING = 1 << 64
MIN_SELF_TEST_SAMPLES = 10 ** 5
SELF_TEST_BINS = 256

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_OUTPUT_BITS = 53


def splitmix64(x: int) -> int:
    """
    Finalizer of splitmix64 applied to a 64-bit word.
    """
    z = x & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def splitmix_words(seed_value: int, count: int, rehash: int = 0) -> List[int]:
    """
    `count` words hashed from the counters seed + (rehash * count + i + 1) * golden.
    """
    base = rehash * count
    return [splitmix64(seed_value + (base + i + 1) * _GOLDEN) for i in range(count)]


def mersenne_reduce(x: int) -> int:
    """
    x mod 2^61 - 1 for x >= 0 by shift-add folding.
    """
    while x > MERSENNE_61:
        x = (x & MERSENNE_61) + (x >> 61)
    return 0 if x == MERSENNE_61 else x


def _family_matvec(state: Sequence[int]) -> Tuple[int, ...]:
    """
    Family matrix times state modulo p in O(N).

    Row 0 is the total S; row i >= 1 is S + sum_{j=1}^{i} (i - j + 1) v_j,
    a double prefix sum, less v_1 on row 2 where the entry is 2.
    """
    v = np.array(state, dtype=object)
    total = int(v.sum())
    double_prefix = np.cumsum(np.cumsum(v[1:]))
    out = [total] + [total + int(b) for b in double_prefix]
    if len(out) >= 3:
        out[2] -= int(v[1])
    return tuple(mersenne_reduce(x) for x in out)


@dataclass(frozen=True)
class GeneratorState:
    """
    `counter` is the index of the next unread output of `state`; it equals N
    once the vector has been consumed, and the next read steps first.
    """
    N: int
    state: Tuple[int, ...]
    matrix: IntegerMatrix
    counter: int = None
    family: bool = True

    def __post_init__(self):
        if len(self.state) != self.N or self.matrix.dim != self.N:
            raise DimensionMismatchError(f'state of length {len(self.state)} with a {self.matrix.dim}x{self.matrix.dim} matrix')
        if any(not 0 <= x < MERSENNE_61 for x in self.state):
            raise InvalidParameterError('state entries must lie in [0, 2^61 - 1)')
        if not any(self.state):
            raise InvalidParameterError('the all-zero state is a fixed point')
        if self.counter is None:
            object.__setattr__(self, 'counter', self.N)

    def outputs(self) -> Tuple[float, ...]:
        return tuple(to_unit_interval(x) for x in self.state)


def to_unit_interval(x: int) -> float:
    """
    x / p truncated to a 53-bit double, always in [0, 1).
    """
    return ((x << _OUTPUT_BITS) // MERSENNE_61) * 2.0 ** -_OUTPUT_BITS


def seed(N: int, seed_value: int, matrix: Optional[IntegerMatrix] = None,
         hasher: Callable[[int, int, int], List[int]] = splitmix_words) -> GeneratorState:
    """
    Expand a 64-bit seed into a non-zero state through counter hashing
    reduced mod p; an all-zero draw is hashed again with the next counters.

    `matrix` replaces the family matrix, e.g. by a degenerate control.
    """
    if N < 2:
        raise InvalidDimensionError(f'generator dimension must be >= 2, got {N}')
    family = matrix is None
    matrix = (build_family_matrix(N) if family else matrix).reduce(MERSENNE_61)
    rehash = 0
    while True:
        state = tuple(w % MERSENNE_61 for w in hasher(seed_value, N, rehash))
        if any(state):
            break
        logger.debug('seed %d gave an all-zero state, hashing again', seed_value)
        rehash += 1
    return GeneratorState(N, state, matrix, family=family)


def transition(s: GeneratorState) -> Tuple[int, ...]:
    if s.family:
        return _family_matvec(s.state)
    return s.matrix.apply(s.state, MERSENNE_61)


def next_vector(s: GeneratorState) -> Tuple[GeneratorState, Tuple[float, ...]]:
    """
    One step of the recurrence; returns the new state and its N outputs.
    """
    s_next = replace(s, state=transition(s), counter=s.N)
    return s_next, s_next.outputs()


def jump_ahead(s: GeneratorState, k: int) -> GeneratorState:
    """
    State after k steps, (T^k mod p) state mod p.
    """
    if k < 0:
        raise InvalidParameterError(f'jump requires k >= 0, got {k}')
    if k == 0:
        return s
    power = matrix_power(s.matrix, k, MERSENNE_61)
    return replace(s, state=power.apply(s.state, MERSENNE_61), counter=s.N)


@lru_cache(maxsize=None)
def _spacing_power(matrix: IntegerMatrix) -> IntegerMatrix:
    return matrix_power(matrix, STREAM_SPACING, MERSENNE_61)


@lru_cache(maxsize=64)
def stream_jump_matrix(matrix: IntegerMatrix, stream: int) -> IntegerMatrix:
    """
    T^(2^64 * stream) mod p, built from a per-matrix T^(2^64) computed once.
    """
    if stream < 0:
        raise InvalidParameterError(f'stream index must be >= 0, got {stream}')
    return matrix_power(_spacing_power(matrix), stream, MERSENNE_61)


def start_stream(s: GeneratorState, stream: int) -> GeneratorState:
    """
    State at the start of stream `stream`, equal to jump_ahead(s, 2^64 * stream).
    """
    if stream == 0:
        return s
    power = stream_jump_matrix(s.matrix, stream)
    return replace(s, state=power.apply(s.state, MERSENNE_61), counter=s.N)


class MixmaxGenerator:
    """
    Stateful stream over a GeneratorState.

    Arguments of the constructor:
    N          -- dimension of the state vector
    seed_value -- 64-bit seed
    stream     -- stream index, the stream starts at jump 2^64 * stream
    matrix     -- optional replacement of the family matrix
    """
    def __init__(self, N: int, seed_value: int, stream: int = 0, matrix: Optional[IntegerMatrix] = None):
        self.seed_value = seed_value
        self.stream = stream
        self.state = start_stream(seed(N, seed_value, matrix), stream)

    @property
    def N(self) -> int:
        return self.state.N

    def raw_words(self, count: int) -> List[int]:
        """
        Next `count` state entries, integers in [0, p).
        """
        out = []
        s = self.state
        while len(out) < count:
            if s.counter == s.N:
                s = replace(s, state=transition(s), counter=0)
            take = min(count - len(out), s.N - s.counter)
            out.extend(s.state[s.counter:s.counter + take])
            s = replace(s, counter=s.counter + take)
        self.state = s
        return out

    def random(self, count: int) -> np.ndarray:
        return np.array([to_unit_interval(x) for x in self.raw_words(count)], dtype=np.float64)

    def spawn_stream(self, i: int) -> 'MixmaxGenerator':
        return MixmaxGenerator(self.N, self.seed_value, i, None if self.state.family else self.state.matrix)

    def display(self):
        print('Displaying MIXMAX generator:')
        print('Dimension          :', self.N)
        print('Seed               :', self.seed_value)
        print('Stream             :', self.stream)
        print('Family matrix      :', self.state.family)
        print('Output counter     :', self.state.counter)


@dataclass(frozen=True)
class SelfTestReport:
    N: int
    seed: int
    samples: int
    chi2_statistic: float
    chi2_pvalue: float
    serial_r: float
    serial_z: float
    serial_pvalue: float
    mean_pvalue: float

    @property
    def uniform_passed(self) -> bool:
        return 0.001 <= self.chi2_pvalue <= 0.999

    @property
    def serial_passed(self) -> bool:
        return abs(self.serial_r) <= 4.0 / math.sqrt(self.samples)

    @property
    def mean_passed(self) -> bool:
        return self.mean_pvalue >= 0.001

    @property
    def passed(self) -> bool:
        return self.uniform_passed and self.serial_passed and self.mean_passed

    def to_dict(self) -> dict:
        return {
            'N': self.N, 'seed': self.seed, 'samples': self.samples,
            'chi2_statistic': self.chi2_statistic, 'chi2_pvalue': self.chi2_pvalue,
            'serial_r': self.serial_r, 'serial_z': self.serial_z, 'serial_pvalue': self.serial_pvalue,
            'mean_pvalue': self.mean_pvalue,
            'uniform_passed': self.uniform_passed, 'serial_passed': self.serial_passed,
            'mean_passed': self.mean_passed, 'passed': self.passed,
        }

    def display(self):
        print('Displaying self-test:')
        print('Dimension          :', self.N)
        print('Samples            :', self.samples)
        print('Chi-square p-value :', self.chi2_pvalue, 'ok' if self.uniform_passed else 'FAIL')
        print('Lag-1 correlation  :', self.serial_r, 'ok' if self.serial_passed else 'FAIL')
        print('Coordinate means p :', self.mean_pvalue, 'ok' if self.mean_passed else 'FAIL')


def self_test(N: int, seed_value: int, samples: int, matrix: Optional[IntegerMatrix] = None) -> SelfTestReport:
    """
    Uniformity on 256 bins, lag-1 serial correlation and the N-dimensional
    coordinate means over `samples` outputs.
    """
    if samples < MIN_SELF_TEST_SAMPLES:
        raise InvalidParameterError(f'self-test needs at least {MIN_SELF_TEST_SAMPLES} samples, got {samples}')
    values = MixmaxGenerator(N, seed_value, matrix=matrix).random(samples)
    statistic, p_chi = chisquare_uniform(values, SELF_TEST_BINS)
    r, z, p_serial = serial_correlation(values, lag=1)
    rows = samples // N
    _, p_mean = coordinate_mean_test(values[:rows * N].reshape(rows, N))
    report = SelfTestReport(N, seed_value, samples, statistic, p_chi, r, z, p_serial, p_mean)
    logger.info('self-test N=%d seed=%d: chi2 p=%.4g, lag-1 r=%.3g, means p=%.4g', N, seed_value, p_chi, r, p_mean)
    return report
