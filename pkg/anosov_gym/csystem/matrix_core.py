"""
Integer operator family of the N-dimensional C-system.

All arithmetic is exact: entries are Python integers, products are carried
out either over the integers (numpy object arrays), modulo 2^64 (uint64
wraparound) or modulo the Mersenne prime 2^61 - 1 (limb split).
"""

import json
import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from anosov_gym.errors import DimensionMismatchError, InvalidDimensionError, InvalidParameterError

logger = logging.getLogger(__name__)

FIXED_POINT_BITS = 64
FIXED_POINT_MODULUS = 1 << FIXED_POINT_BITS
MERSENNE_61 = (1 << 61) - 1

_LIMB_BITS = 21
_LIMB_MASK = np.uint64((1 << _LIMB_BITS) - 1)
_M61 = np.uint64(MERSENNE_61)


@dataclass(frozen=True)
class IntegerMatrix:
    """
    Square matrix of arbitrary-precision integers, immutable.
    """
    entries: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.entries)
        if n < 2:
            raise InvalidDimensionError(f'matrix dimension must be >= 2, got {n}')
        for row in self.entries:
            if len(row) != n:
                raise DimensionMismatchError(f'matrix is not square: row of length {len(row)} in a {n}-row matrix')

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]]) -> 'IntegerMatrix':
        return cls(tuple(tuple(int(x) for x in row) for row in rows))

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __getitem__(self, index):
        i, j = index
        return self.entries[i][j]

    def row(self, i: int) -> Tuple[int, ...]:
        return self.entries[i]

    def to_object_array(self) -> np.ndarray:
        a = np.empty((self.dim, self.dim), dtype=object)
        for i, row in enumerate(self.entries):
            a[i, :] = row
        return a

    def to_uint64_array(self) -> np.ndarray:
        """
        Entries reduced modulo 2^64, as a uint64 array.
        """
        return np.array([[x % FIXED_POINT_MODULUS for x in row] for row in self.entries], dtype=np.uint64)

    def to_float_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries], dtype=np.float64)

    def transpose(self) -> 'IntegerMatrix':
        return IntegerMatrix(tuple(zip(*self.entries)))

    def reduce(self, modulus: int) -> 'IntegerMatrix':
        return IntegerMatrix(tuple(tuple(x % modulus for x in row) for row in self.entries))

    def max_entry(self) -> int:
        return max(abs(x) for row in self.entries for x in row)

    def __matmul__(self, other: 'IntegerMatrix') -> 'IntegerMatrix':
        return matrix_multiply(self, other)

    def apply(self, vector: Sequence[int], modulus: Optional[int] = None) -> Tuple[int, ...]:
        """
        Exact matrix-vector product, optionally reduced modulo `modulus`.
        """
        if len(vector) != self.dim:
            raise DimensionMismatchError(f'vector of length {len(vector)} for a {self.dim}x{self.dim} matrix')
        out = tuple(sum(a * v for a, v in zip(row, vector)) for row in self.entries)
        if modulus is not None:
            out = tuple(x % modulus for x in out)
        return out

    def to_json(self) -> str:
        """
        JSON array-of-arrays of decimal strings (entries exceed 64 bits).
        """
        return json.dumps([[str(x) for x in row] for row in self.entries])

    @classmethod
    def from_json(cls, text: str) -> 'IntegerMatrix':
        return cls.from_rows([[int(x) for x in row] for row in json.loads(text)])


@dataclass(frozen=True)
class FibonacciPower:
    """
    Coefficients of T^n = [[a, b], [c, d]] for the N=2 operator.
    """
    n: int
    a: int
    b: int
    c: int
    d: int

    @property
    def determinant(self) -> int:
        return self.a * self.d - self.b * self.c

    def as_matrix(self) -> IntegerMatrix:
        return IntegerMatrix(((self.a, self.b), (self.c, self.d)))


def identity(N: int) -> IntegerMatrix:
    return IntegerMatrix(tuple(tuple(int(i == j) for j in range(N)) for i in range(N)))


def family_entry(N: int, i: int, j: int) -> int:
    """
    Entry (i, j) of the N-dimensional family operator (0-indexed).

    Row 0 and column 0 are all ones. Below the first row the entries on and
    left of the diagonal count down i-j+2, ..., 2 towards the diagonal and
    the entries right of it are 1; the printed instances fix entry (2, 1) to 2.
    """
    if i == 0 or j == 0:
        return 1
    if j > i:
        return 1
    if i == 2 and j == 1:
        return 2
    return i - j + 2


def build_family_matrix(N: int) -> IntegerMatrix:
    if N < 2:
        raise InvalidDimensionError(f'family matrix requires N >= 2, got {N}')
    return IntegerMatrix(tuple(tuple(family_entry(N, i, j) for j in range(N)) for i in range(N)))


def determinant_exact(M: IntegerMatrix) -> int:
    """
    Determinant by Bareiss' fraction-free elimination over the integers.
    """
    a = M.to_object_array()
    n = M.dim
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k, k] == 0:
            for i in range(k + 1, n):
                if a[i, k] != 0:
                    a[[k, i], :] = a[[i, k], :]
                    sign = -sign
                    break
            else:
                return 0
        pivot = a[k, k]
        block = a[k + 1:, k + 1:] * pivot - np.outer(a[k + 1:, k], a[k, k + 1:])
        # exact division, every entry of block is a minor of M
        a[k + 1:, k + 1:] = block // prev
        a[k + 1:, k] = 0
        prev = pivot
    return sign * int(a[n - 1, n - 1])


def _fold_mersenne(x: np.ndarray) -> np.ndarray:
    return (x & _M61) + (x >> np.uint64(61))


def _rotate_mersenne(x: np.ndarray, r: int) -> np.ndarray:
    # x * 2^r mod (2^61 - 1) for x < 2^61 is a 61-bit rotation
    if r == 0:
        return x
    return ((x << np.uint64(r)) & _M61) | (x >> np.uint64(61 - r))


def _matmul_mersenne(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Product of two uint64 arrays with entries in [0, 2^61 - 1), modulo 2^61 - 1.

    Each operand is split in three 21-bit limbs so every partial product of
    limbs, summed over the inner dimension, stays below 2^61.
    """
    if a.shape[1] >= 1 << 19:
        raise InvalidParameterError('inner dimension too large for the limb product')
    shifts = [np.uint64(0), np.uint64(_LIMB_BITS), np.uint64(2 * _LIMB_BITS)]
    a_limbs = [(a >> s) & _LIMB_MASK for s in shifts]
    b_limbs = [(b >> s) & _LIMB_MASK for s in shifts]
    acc = np.zeros((a.shape[0], b.shape[1]), dtype=np.uint64)
    for s in range(3):
        for t in range(3):
            partial = a_limbs[s] @ b_limbs[t]
            acc = _fold_mersenne(acc + _rotate_mersenne(partial, (_LIMB_BITS * (s + t)) % 61))
    acc = _fold_mersenne(acc)
    return np.where(acc >= _M61, acc - _M61, acc)


def _to_mersenne_array(M: IntegerMatrix) -> np.ndarray:
    return np.array([[x % MERSENNE_61 for x in row] for row in M.entries], dtype=np.uint64)


def _from_array(a: np.ndarray) -> IntegerMatrix:
    return IntegerMatrix(tuple(tuple(int(x) for x in row) for row in a))


def matrix_multiply(A: IntegerMatrix, B: IntegerMatrix, modulus: Optional[int] = None) -> IntegerMatrix:
    """
    Exact product A.B, reduced modulo `modulus` when given.

    The result is independent of the path taken: modulo 2^64 uses uint64
    wraparound, modulo 2^61 - 1 uses the limb product, anything else is
    computed over the integers.
    """
    if A.dim != B.dim:
        raise DimensionMismatchError(f'cannot multiply {A.dim}x{A.dim} by {B.dim}x{B.dim}')
    if modulus == FIXED_POINT_MODULUS:
        return _from_array(A.to_uint64_array() @ B.to_uint64_array())
    if modulus == MERSENNE_61:
        return _from_array(_matmul_mersenne(_to_mersenne_array(A), _to_mersenne_array(B)))
    product = np.dot(A.to_object_array(), B.to_object_array())
    if modulus is not None:
        product = product % modulus
    return _from_array(product)


def matrix_power(M: IntegerMatrix, n: int, modulus: Optional[int] = None) -> IntegerMatrix:
    """
    Exact T^n by binary exponentiation, optionally modulo `modulus`.
    """
    if n < 0:
        raise InvalidParameterError(f'matrix power requires n >= 0, got {n}')
    result = identity(M.dim)
    base = M if modulus is None else M.reduce(modulus)
    while n > 0:
        if n & 1:
            result = matrix_multiply(result, base, modulus)
        n >>= 1
        if n:
            base = matrix_multiply(base, base, modulus)
    return result


def _fibonacci_pair(k: int) -> Tuple[int, int]:
    """
    (F_k, F_{k+1}) by fast doubling.
    """
    a, b = 0, 1
    for bit in bin(k)[2:]:
        c = a * (2 * b - a)
        d = a * a + b * b
        a, b = (d, c + d) if bit == '1' else (c, d)
    return a, b


def fibonacci(k: int) -> int:
    return _fibonacci_pair(k)[0]


def fibonacci_power(n: int) -> FibonacciPower:
    """
    Closed form of T^n for T = [[1, 1], [1, 2]]:
    b_n = c_n = F_{2n}, a_n = F_{2n-1}, d_n = F_{2n+1}.
    """
    if n < 0:
        raise InvalidParameterError(f'fibonacci_power requires n >= 0, got {n}')
    if n == 0:
        return FibonacciPower(0, 1, 0, 0, 1)
    f_odd, f_even = _fibonacci_pair(2 * n - 1)
    return FibonacciPower(n, f_odd, f_even, f_even, f_odd + f_even)


def largest_coefficient_growth(M: IntegerMatrix, n_values: Sequence[int]) -> List[Tuple[int, int, float]]:
    """
    For each n, the largest entry of T^n and the per-step growth rate
    ln(max entry)/n, which tends to ln|lambda_max|.
    """
    rows = []
    for n in sorted(n_values):
        largest = matrix_power(M, n).max_entry()
        rate = math.log(largest) / n if n > 0 and largest > 0 else 0.0
        logger.debug('n=%d largest coefficient has %d digits, rate %.6f', n, len(str(largest)), rate)
        rows.append((n, largest, rate))
    return rows
