"""
Observables on the unit N-torus as finite trigonometric polynomials.

An observable is a mean plus a flat list of single trig terms
amp * cos(2 pi k.x) or amp * sin(2 pi k.x). Products of cosines are
expanded at construction time, so correlation code only ever sees a flat
frequency list. Frequencies are canonical: the first nonzero entry is
positive, a sine absorbs the sign flip.
"""

import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import zeta

from anosov_gym.csystem.matrix_core import FIXED_POINT_MODULUS
from anosov_gym.csystem.torus_dynamics import TorusPoint
from anosov_gym.errors import DimensionMismatchError, InvalidDimensionError, InvalidParameterError

logger = logging.getLogger(__name__)

COS = 'cos'
SIN = 'sin'
PHASES = (COS, SIN)

MP_GRID = 256
MP_SAFETY = 1.5
EVAL_BLOCK = 1 << 22

# d/dx rotates cos -> -sin -> -cos -> sin -> cos
_ROTATIONS = {
    COS: ((COS, 1.0), (SIN, -1.0), (COS, -1.0), (SIN, 1.0)),
    SIN: ((SIN, 1.0), (COS, 1.0), (SIN, -1.0), (COS, -1.0)),
}


@dataclass(frozen=True, order=True)
class Term:
    freq: Tuple[int, ...]
    phase: str
    amp: float = field(compare=False)


def _canonical_freq(freq: Sequence[int]) -> Tuple[Tuple[int, ...], int]:
    """
    Canonical frequency and the sign it was multiplied by.
    """
    for k in freq:
        if k != 0:
            if k < 0:
                return tuple(-x for x in freq), -1
            return tuple(freq), 1
    return tuple(freq), 0


@dataclass(frozen=True)
class Observable:
    """
    f(x) = mean + sum_t amp_t * trig_t(2 pi freq_t . x)

    `p` is the smoothness order of C^{2p} families and `mp` the estimate of
    sup |d^{2p}_{x_1} ... d^{2p}_{x_N} f| used by the decay bounds.
    """
    dim: int
    terms: Tuple[Term, ...] = ()
    mean: float = 0.0
    p: Optional[int] = None
    mp: Optional[float] = None

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidDimensionError(f'observable dimension must be >= 1, got {self.dim}')
        seen = set()
        for t in self.terms:
            if len(t.freq) != self.dim:
                raise DimensionMismatchError(f'term frequency {t.freq} in a {self.dim}-dimensional observable')
            if t.phase not in PHASES:
                raise InvalidParameterError(f'unknown phase {t.phase!r}')
            if _canonical_freq(t.freq)[1] != 1:
                raise InvalidParameterError(f'frequency {t.freq} is not canonical')
            key = (t.freq, t.phase)
            if key in seen:
                raise InvalidParameterError(f'duplicate term {key}')
            seen.add(key)

    @classmethod
    def build(cls, dim: int, terms: Iterable[Tuple[Sequence[int], str, float]], mean: float = 0.0,
              p: Optional[int] = None, mp: Optional[float] = None) -> 'Observable':
        """
        Canonical observable from raw (freq, phase, amp) triples: signs are
        normalized, duplicates merged, zero amplitudes dropped and a
        zero-frequency cosine folded into the mean.
        """
        acc = defaultdict(float)
        for freq, phase, amp in terms:
            if len(freq) != dim:
                raise DimensionMismatchError(f'term frequency {tuple(freq)} in a {dim}-dimensional observable')
            if phase not in PHASES:
                raise InvalidParameterError(f'unknown phase {phase!r}')
            freq, sign = _canonical_freq([int(k) for k in freq])
            if sign == 0:
                if phase == COS:
                    mean += amp
                continue
            if phase == SIN:
                amp = sign * amp
            acc[(freq, phase)] += amp
        kept = tuple(sorted(Term(freq, phase, amp) for (freq, phase), amp in acc.items() if amp != 0.0))
        return cls(dim, kept, float(mean), p, mp)

    def raw_terms(self, with_mean: bool = True) -> List[Tuple[Tuple[int, ...], str, float]]:
        out = [(t.freq, t.phase, t.amp) for t in self.terms]
        if with_mean and self.mean != 0.0:
            out.append(((0,) * self.dim, COS, self.mean))
        return out

    def canonicalize(self) -> 'Observable':
        return Observable.build(self.dim, self.raw_terms(False), self.mean, self.p, self.mp)

    def max_frequency(self) -> int:
        return max((abs(k) for t in self.terms for k in t.freq), default=0)

    def variance(self) -> float:
        return math.fsum(0.5 * t.amp * t.amp for t in self.terms)

    def scale(self, c: float) -> 'Observable':
        return Observable.build(self.dim, [(f, ph, c * a) for f, ph, a in self.raw_terms(False)], c * self.mean)

    def add(self, other: 'Observable') -> 'Observable':
        self._check_dim(other.dim)
        return Observable.build(self.dim, self.raw_terms(False) + other.raw_terms(False), self.mean + other.mean)

    def multiply(self, other: 'Observable') -> 'Observable':
        """
        Pointwise product, expanded with the product-to-sum identities.
        """
        self._check_dim(other.dim)
        out = []
        for fa, pa, aa in self.raw_terms():
            for fb, pb, ab in other.raw_terms():
                plus = tuple(x + y for x, y in zip(fa, fb))
                minus = tuple(x - y for x, y in zip(fa, fb))
                c = 0.5 * aa * ab
                if pa == COS and pb == COS:
                    out += [(minus, COS, c), (plus, COS, c)]
                elif pa == SIN and pb == SIN:
                    out += [(minus, COS, c), (plus, COS, -c)]
                elif pa == SIN:
                    out += [(plus, SIN, c), (minus, SIN, c)]
                else:
                    out += [(plus, SIN, c), (minus, SIN, -c)]
        return Observable.build(self.dim, out)

    def derivative(self, orders: Sequence[int]) -> 'Observable':
        """
        Mixed partial derivative with `orders[d]` derivatives along x_d.
        """
        if len(orders) != self.dim or any(o < 0 for o in orders):
            raise InvalidParameterError(f'derivative orders {tuple(orders)} for dimension {self.dim}')
        total = sum(orders)
        if total == 0:
            return self
        out = []
        for t in self.terms:
            factor = 1.0
            for k, o in zip(t.freq, orders):
                factor *= (2.0 * math.pi * k) ** o
            phase, sign = _ROTATIONS[t.phase][total % 4]
            out.append((t.freq, phase, sign * factor * t.amp))
        return Observable.build(self.dim, out)

    def evaluate(self, x: TorusPoint) -> float:
        self._check_dim(x.dim)
        total = self.mean
        for t in self.terms:
            phase = sum(k * w for k, w in zip(t.freq, x.words)) % FIXED_POINT_MODULUS
            angle = 2.0 * math.pi * _centered(phase)
            total += t.amp * (math.cos(angle) if t.phase == COS else math.sin(angle))
        return total

    def evaluate_words(self, words: np.ndarray) -> np.ndarray:
        """
        Vectorized evaluate on a (samples, N) uint64 array of fixed-point words.

        The phase k.x is formed modulo 2^64 in integers, so the result is
        exactly 1-periodic in every coordinate.
        """
        words = np.atleast_2d(words)
        self._check_dim(words.shape[1])
        out = np.full(words.shape[0], self.mean, dtype=np.float64)
        if not self.terms:
            return out
        freqs = np.array([[k % FIXED_POINT_MODULUS for k in t.freq] for t in self.terms], dtype=np.uint64)
        amps = np.array([t.amp for t in self.terms])
        is_cos = np.array([t.phase == COS for t in self.terms])
        block = max(1, EVAL_BLOCK // max(1, words.shape[0]))
        for start in range(0, len(self.terms), block):
            stop = start + block
            phases = (words @ freqs[start:stop].T).view(np.int64) * (2.0 * math.pi * 2.0 ** -64)
            trig = np.where(is_cos[start:stop], np.cos(phases), np.sin(phases))
            out += trig @ amps[start:stop]
        return out

    def to_dict(self) -> dict:
        return {
            'mean': self.mean,
            'terms': [{'freq': list(t.freq), 'phase': t.phase, 'amp': t.amp} for t in self.terms],
            'p': self.p,
            'Mp': self.mp,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str, dim: Optional[int] = None) -> 'Observable':
        data = json.loads(text)
        terms = [(t['freq'], t['phase'], float(t['amp'])) for t in data['terms']]
        if dim is None:
            if not terms:
                raise InvalidParameterError('dimension is required for an observable without terms')
            dim = len(terms[0][0])
        return cls.build(dim, terms, float(data['mean']), data.get('p'), data.get('Mp'))

    def _check_dim(self, dim: int):
        if dim != self.dim:
            raise DimensionMismatchError(f'{self.dim}-dimensional observable used with dimension {dim}')


def _centered(phase_word: int) -> float:
    """
    Word in [0, 2^64) to a fraction of a turn in [-1/2, 1/2).
    """
    if phase_word >= FIXED_POINT_MODULUS // 2:
        phase_word -= FIXED_POINT_MODULUS
    return phase_word / FIXED_POINT_MODULUS


def constant(dim: int, value: float) -> Observable:
    return Observable(dim, (), float(value))


def single_term(freq: Sequence[int], phase: str = COS, amp: float = 1.0) -> Observable:
    return Observable.build(len(freq), [(freq, phase, amp)])


def canonicalize(f: Observable) -> Observable:
    return f.canonicalize()


def sawtooth_series(coordinate: int, R: int, dim: int = 2) -> Observable:
    """
    Fourier series of {x_coordinate} truncated at R:
    1/2 - sum_{r=1}^{R} sin(2 pi r x) / (pi r).
    """
    if R < 1:
        raise InvalidParameterError(f'sawtooth cutoff must be >= 1, got {R}')
    if not 0 <= coordinate < dim:
        raise InvalidParameterError(f'coordinate {coordinate} outside a {dim}-dimensional torus')
    terms = []
    for r in range(1, R + 1):
        freq = [0] * dim
        freq[coordinate] = r
        terms.append((freq, SIN, -1.0 / (math.pi * r)))
    return Observable.build(dim, terms, 0.5)


def sawtooth_truncation_bound(R: int) -> float:
    """
    L2 distance between {x} and its series truncated at R,
    sqrt(sum_{r>R} 1/(2 pi^2 r^2)).
    """
    return math.sqrt(float(zeta(2.0, R + 1)) / (2.0 * math.pi ** 2))


def smooth_family_coefficients(p: int, cutoff: int, dim: int) -> Dict[Tuple[int, ...], float]:
    """
    a_{i_1...i_N} = prod_d i_d^{-2p} for 1 <= i_d <= cutoff.
    """
    if p < 1 or cutoff < 1:
        raise InvalidParameterError(f'smooth family needs p >= 1 and cutoff >= 1, got p={p} cutoff={cutoff}')
    if dim < 2:
        raise InvalidDimensionError(f'smooth family requires N >= 2, got {dim}')
    table = {}
    for index in product(range(1, cutoff + 1), repeat=dim):
        amp = 1.0
        for i in index:
            amp /= float(i) ** (2 * p)
        table[index] = amp
    return table


def _cosine_product_terms(index: Sequence[int], amp: float) -> List[Tuple[Tuple[int, ...], str, float]]:
    """
    prod_d cos(2 pi i_d x_d) as 2^{N-1} cosines of the signed frequency sums.
    """
    dim = len(index)
    weight = amp * 0.5 ** (dim - 1)
    out = []
    for signs in product((1, -1), repeat=dim - 1):
        freq = (index[0],) + tuple(s * i for s, i in zip(signs, index[1:]))
        out.append((freq, COS, weight))
    return out


def estimate_mp(f: Observable, p: int, grid: int = MP_GRID) -> float:
    """
    Grid maximum of |d^{2p}_{x_1} ... d^{2p}_{x_N} f| on a grid^min(N,2)
    lattice over the first two coordinates, the others held at zero.

    A numerical estimate of the supremum; the bounds scale it by MP_SAFETY.
    """
    bits = grid_power(grid)
    if bits is None:
        raise InvalidParameterError(f'grid size {grid} is not a power of two')
    deriv = f.derivative([2 * p] * f.dim)
    axes = np.arange(grid, dtype=np.uint64) << np.uint64(64 - bits)
    if f.dim == 1:
        return float(np.max(np.abs(deriv.evaluate_words(axes[:, None]))))
    words = np.zeros((grid * grid, f.dim), dtype=np.uint64)
    x1, x2 = np.meshgrid(axes, axes, indexing='ij')
    words[:, 0] = x1.ravel()
    words[:, 1] = x2.ravel()
    return float(np.max(np.abs(deriv.evaluate_words(words))))


def smooth_family(p: int, cutoff: int, dim: int) -> Observable:
    """
    f(x) = sum_{1 <= i_d <= cutoff} prod_d i_d^{-2p} cos(2 pi i_d x_d),
    a zero-mean observable of smoothness order p.
    """
    terms = []
    for index, amp in smooth_family_coefficients(p, cutoff, dim).items():
        terms.extend(_cosine_product_terms(index, amp))
    f = Observable.build(dim, terms, 0.0, p)
    mp = estimate_mp(f, p)
    logger.debug('smooth family p=%d cutoff=%d N=%d: %d terms, Mp estimate %.6g', p, cutoff, dim, len(f.terms), mp)
    return replace(f, mp=mp)


def grid_power(n: int) -> Optional[int]:
    if n < 1 or n & (n - 1):
        return None
    return n.bit_length() - 1
