"""
Correlation functions D_n(f, g) = <f(x) g(T^n x)> - <f><g>.

Three estimators live here:

exact_correlation        frequency matching on exact integer frequencies
monte_carlo_correlation  sampling on the 2^64 lattice with a counter-based generator
closed forms             one-step correlators against the sawtooth {x_1 + x_2}

and fit_decay, which compares a series with the bound C e^{-n h nu}.
"""

import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import dblquad
from scipy.special import zeta

from anosov_gym.analysis.observables import COS, MP_SAFETY, SIN, Observable
from anosov_gym.csystem.matrix_core import FIXED_POINT_MODULUS, IntegerMatrix, build_family_matrix, matrix_power
from anosov_gym.csystem.spectral import Spectrum
from anosov_gym.csystem.torus_dynamics import step_words
from anosov_gym.errors import DimensionMismatchError, InvalidParameterError, TooFewPointsError
from anosov_gym.utils.benchmark import parallel_map
from anosov_gym.utils.distribution import chunk_sizes, lattice_words

logger = logging.getLogger(__name__)

EXACT_RESONANCE = 'exact_resonance'
MONTE_CARLO = 'monte_carlo'
CLOSED_FORM = 'closed_form'
METHODS = (EXACT_RESONANCE, MONTE_CARLO, CLOSED_FORM)

EXACT_NOISE_FLOOR = 1e-14
MC_NOISE_SIGMAS = 5.0
MIN_SAMPLES = 1000
MIN_FIT_POINTS = 3


@dataclass(frozen=True)
class CorrelationSeries:
    n_values: Tuple[int, ...]
    d_values: Tuple[float, ...]
    method: str
    stderr: Optional[Tuple[float, ...]] = None
    sample_count: Optional[int] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameterError(f'unknown correlation method {self.method!r}')
        if len(self.n_values) != len(self.d_values):
            raise DimensionMismatchError('n_values and d_values differ in length')
        if self.stderr is not None:
            if self.method == EXACT_RESONANCE:
                raise InvalidParameterError('exact series carry no standard errors')
            if len(self.stderr) != len(self.n_values):
                raise DimensionMismatchError('stderr and n_values differ in length')

    def __len__(self):
        return len(self.n_values)

    def csv_rows(self) -> List[List]:
        rows = [['n', 'd_n', 'stderr', 'method', 'samples']]
        for i, (n, d) in enumerate(zip(self.n_values, self.d_values)):
            err = '' if self.stderr is None else '{:.17g}'.format(self.stderr[i])
            samples = '' if self.sample_count is None else self.sample_count
            rows.append([n, '{:.17g}'.format(d), err, self.method, samples])
        return rows

    def to_dict(self) -> dict:
        return {
            'n': list(self.n_values),
            'd_n': list(self.d_values),
            'stderr': None if self.stderr is None else list(self.stderr),
            'method': self.method,
            'samples': self.sample_count,
        }


@dataclass(frozen=True)
class DecayFit:
    """
    Least-squares fit of ln|D_n| = ln(prefactor) - rate * n, next to the
    entropy bound |D_n| <= bound_prefactor * exp(-n * bound_rate).
    """
    fitted_rate: float
    fitted_prefactor: float
    bound_rate: float
    bound_prefactor: float
    nu: float
    points_used: int
    violation: bool = False
    violations: Tuple[int, ...] = ()
    term_bounds: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            'fitted_rate': self.fitted_rate,
            'fitted_prefactor': self.fitted_prefactor,
            'bound_rate': self.bound_rate,
            'bound_prefactor': self.bound_prefactor,
            'nu': self.nu,
            'points_used': self.points_used,
            'violation': self.violation,
            'violations': list(self.violations),
            'term_bounds': dict(self.term_bounds),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def display(self):
        print('Displaying decay fit:')
        print('Fitted rate        :', self.fitted_rate)
        print('Fitted prefactor   :', self.fitted_prefactor)
        print('Bound rate (h nu)  :', self.bound_rate)
        print('Bound prefactor    :', self.bound_prefactor)
        print('nu                 :', self.nu)
        print('Points used        :', self.points_used)
        print('Bound violated     :', self.violation)


def _relation(freq_a: Sequence[int], freq_b: Sequence[int]) -> str:
    if any(freq_a) or any(freq_b):
        if tuple(freq_a) == tuple(freq_b):
            return 'same'
        if tuple(freq_a) == tuple(-k for k in freq_b):
            return 'opposite'
        return 'unrelated'
    return 'zero'


_PAIR_TABLE = {
    (COS, COS): {'same': 0.5, 'opposite': 0.5, 'zero': 1.0, 'unrelated': 0.0},
    (SIN, SIN): {'same': 0.5, 'opposite': -0.5, 'zero': 0.0, 'unrelated': 0.0},
    (COS, SIN): {'same': 0.0, 'opposite': 0.0, 'zero': 0.0, 'unrelated': 0.0},
    (SIN, COS): {'same': 0.0, 'opposite': 0.0, 'zero': 0.0, 'unrelated': 0.0},
}


def pair_integral(phase_a: str, freq_a: Sequence[int], phase_b: str, freq_b: Sequence[int]) -> float:
    """
    Torus integral of trig_a(2 pi k.x) * trig_b(2 pi k'.x) for integer k, k'.
    """
    if len(freq_a) != len(freq_b):
        raise DimensionMismatchError(f'frequencies {tuple(freq_a)} and {tuple(freq_b)}')
    return _PAIR_TABLE[(phase_a, phase_b)][_relation(freq_a, freq_b)]


def _shifted_term(power_t: IntegerMatrix, freq: Tuple[int, ...], phase: str, amp: float):
    """
    trig(2 pi j.(P x)) = trig(2 pi (P^T j).x), returned in canonical form.
    """
    k = power_t.apply(freq)
    for x in k:
        if x != 0:
            if x < 0:
                return tuple(-v for v in k), phase, (-amp if phase == SIN else amp)
            break
    return k, phase, amp


def _join_terms(f_index, power_t: IntegerMatrix, g_terms):
    matches = []
    for freq, phase, amp in g_terms:
        k, phase, amp = _shifted_term(power_t, freq, phase, amp)
        amp_f = f_index.get((k, phase))
        if amp_f is not None:
            matches.append((k, phase, amp_f * amp * pair_integral(phase, k, phase, k)))
    return matches


def resonance_join(power: IntegerMatrix, f: Observable, g: Observable, workers: int = 1) -> List[Tuple]:
    """
    Matched (frequency, phase, contribution) triples between f and g o P,
    sorted by frequency. Only equal canonical (frequency, phase) pairs
    integrate to a nonzero value.
    """
    if not f.dim == g.dim == power.dim:
        raise DimensionMismatchError(f'observables of dimension {f.dim}, {g.dim} with a {power.dim}x{power.dim} operator')
    f_index = {(t.freq, t.phase): t.amp for t in f.terms}
    g_terms = g.raw_terms(False)
    if not f_index or not g_terms:
        return []
    power_t = power.transpose()
    n_chunks = max(1, min(workers, len(g_terms)))
    chunks = [g_terms[i::n_chunks] for i in range(n_chunks)]
    results = parallel_map(_join_terms, [(f_index, power_t, chunk) for chunk in chunks], workers)
    return sorted((m for chunk in results for m in chunk), key=lambda m: (m[0], m[1]))


def exact_correlation(M: IntegerMatrix, f: Observable, g: Observable, n: int, workers: int = 1) -> float:
    """
    D_n(f, g) by frequency matching on the exact integer frequencies (T^n)^T j.
    """
    if n < 0:
        raise InvalidParameterError(f'correlation step must be >= 0, got {n}')
    return math.fsum(m[2] for m in resonance_join(matrix_power(M, n), f, g, workers))


def exact_series(M: IntegerMatrix, f: Observable, g: Observable, n_values: Sequence[int],
                 workers: int = 1) -> CorrelationSeries:
    n_values = sorted(set(n_values))
    if n_values and n_values[0] < 0:
        raise InvalidParameterError(f'correlation steps must be >= 0, got {n_values[0]}')
    d_values = []
    power, at = matrix_power(M, 0), 0
    for n in n_values:
        power = power @ matrix_power(M, n - at)
        at = n
        d = math.fsum(m[2] for m in resonance_join(power, f, g, workers))
        logger.debug('exact D_%d = %.17g', n, d)
        d_values.append(d)
    return CorrelationSeries(tuple(n_values), tuple(d_values), EXACT_RESONANCE)


def _trig_values(seed: int, chunk_index: int, size: int, f: Observable, g: Observable, powers):
    words = lattice_words(seed, chunk_index, size, f.dim)
    fx = f.evaluate_words(words)
    gy = np.stack([g.evaluate_words(step_words(P, 1, words)) for P in powers])
    return [(fx, gy)]


def _polynomial_values(seed: int, chunk_index: int, size: int, r_max: int):
    words = lattice_words(seed, chunk_index, size, 2)
    image = step_words(build_family_matrix(2), 1, words)
    x = words * 2.0 ** -64
    y = image * 2.0 ** -64
    powers = np.arange(r_max + 1)[:, None]
    # D_1: {x_1 + x_2} against x_1 x_2^r; K_1: x_1 x_2 against {x_1 + 2 x_2}^r
    return [(y[:, 0], x[:, 0] * x[:, 1] ** powers), (x[:, 0] * x[:, 1], y[:, 1] ** powers)]


def _chunk_moments(values_fn, args, means=None):
    """
    Per panel (f, g rows) of one chunk: sums of f and g when `means` is
    None, else sums of u and u^2 for u = (f - mean f)(g - mean g).
    """
    panels = values_fn(*args)
    if means is None:
        return [(float(fx.sum()), gy.sum(axis=1)) for fx, gy in panels]
    out = []
    for (fx, gy), (a, b) in zip(panels, means):
        u = (fx - a)[None, :] * (gy - b[:, None])
        out.append((u.sum(axis=1), (u * u).sum(axis=1)))
    return out


def _centered_monte_carlo(values_fn, payload, samples: int, seed: int, workers: int, progress: bool):
    """
    (estimate, stderr) arrays per panel of the centered product mean.

    Two passes over the same counter blocks: the first gets the sample
    means, the second regenerates each chunk and accumulates the centered
    products. Chunk results are reduced in chunk order, so the outcome does
    not depend on the number of workers.
    """
    pieces = chunk_sizes(samples)
    first = parallel_map(_chunk_moments, [(values_fn, (seed, i, size) + payload) for i, size in pieces],
                         workers, progress)
    means = [(sum(c[k][0] for c in first) / samples, np.sum([c[k][1] for c in first], axis=0) / samples)
             for k in range(len(first[0]))]
    second = parallel_map(_chunk_moments, [(values_fn, (seed, i, size) + payload, means) for i, size in pieces],
                          workers, progress)
    results = []
    for k in range(len(means)):
        total = np.sum([c[k][0] for c in second], axis=0)
        squares = np.sum([c[k][1] for c in second], axis=0)
        estimate = total / samples
        variance = np.maximum(squares - samples * estimate * estimate, 0.0) / (samples - 1)
        results.append((estimate, np.sqrt(variance / samples)))
    return results


def monte_carlo_series(M: IntegerMatrix, f: Observable, g: Observable, n_values: Sequence[int], samples: int,
                       seed: int, workers: int = 1, progress: bool = False) -> CorrelationSeries:
    """
    Monte Carlo D_n for every n on the same lattice points.

    Points come from Philox keyed by `seed`, one counter block per chunk of
    MC_CHUNK samples, so any chunk can be regenerated on any worker.
    """
    if samples < MIN_SAMPLES:
        raise InvalidParameterError(f'Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}')
    if not f.dim == g.dim == M.dim:
        raise DimensionMismatchError(f'observables of dimension {f.dim}, {g.dim} with a {M.dim}x{M.dim} operator')
    n_values = sorted(set(n_values))
    powers = [matrix_power(M, n, FIXED_POINT_MODULUS) for n in n_values]
    [(estimate, stderr)] = _centered_monte_carlo(_trig_values, (f, g, powers), samples, seed, workers, progress)
    logger.info('Monte Carlo over %d samples, seed %d, %d worker(s)', samples, seed, workers)
    return CorrelationSeries(tuple(n_values), tuple(float(d) for d in estimate), MONTE_CARLO,
                             tuple(float(e) for e in stderr), samples)


def monte_carlo_correlation(M: IntegerMatrix, f: Observable, g: Observable, n: int, samples: int, seed: int,
                            workers: int = 1) -> Tuple[float, float]:
    """
    (estimate, stderr) of D_n with sample means subtracted.
    """
    series = monte_carlo_series(M, f, g, [n], samples, seed, workers)
    return series.d_values[0], series.stderr[0]


def sin_cos_coefficients(f: Observable) -> Dict[Tuple[int, int], float]:
    """
    Table a_{i_1 i_2} of f = sum a_{i_1 i_2} sin(2 pi i_1 x_1) cos(2 pi i_2 x_2).

    Raises InvalidParameterError when f has a part outside that form.
    """
    if f.dim != 2:
        raise DimensionMismatchError(f'sin-cos table needs N=2, got {f.dim}')
    table = defaultdict(float)
    odd = defaultdict(float)
    scale = max((abs(t.amp) for t in f.terms), default=0.0)
    for t in f.terms:
        i1, i2 = t.freq
        if t.phase != SIN or i1 == 0:
            raise InvalidParameterError(f'term {t.phase}{t.freq} is not of the form sin(i1 x1) cos(i2 x2)')
        # sin(a + b) = sin a cos b + cos a sin b
        table[(i1, abs(i2))] += t.amp
        odd[(i1, abs(i2))] += t.amp if i2 >= 0 else -t.amp
    for (i1, i2), b in odd.items():
        if i2 != 0 and abs(b) > 1e-12 * scale:
            raise InvalidParameterError(f'f has a cos(x1) sin(x2) component at ({i1}, {i2})')
    return {k: v for k, v in table.items() if v != 0.0}


def one_step_sawtooth_correlator(f: Observable) -> float:
    """
    D_1(f, {x_1}) for T = [[1, 1], [1, 2]], in closed form -sum_r a_rr / (4 pi r).
    """
    table = sin_cos_coefficients(f)
    return -math.fsum(a / (4.0 * math.pi * i1) for (i1, i2), a in table.items() if i1 == i2)


def polynomial_one_step_scan(r_max: int, samples: int, seed: int, workers: int = 1,
                             progress: bool = False) -> Tuple[CorrelationSeries, CorrelationSeries]:
    """
    Monte Carlo D_1(r) = <x_1 x_2^r {x_1 + x_2}> - <x_1 x_2^r><{x_1 + x_2}> and
    K_1(r) = <x_1 x_2 {x_1 + 2 x_2}^r> - <x_1 x_2><{x_1 + 2 x_2}^r> for r = 0..r_max.

    The mod 1 is applied by the dynamics, the polynomials are evaluated
    directly on the exported doubles.
    """
    if r_max < 0:
        raise InvalidParameterError(f'r_max must be >= 0, got {r_max}')
    if samples < MIN_SAMPLES:
        raise InvalidParameterError(f'Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}')
    panels = _centered_monte_carlo(_polynomial_values, (r_max,), samples, seed, workers, progress)
    r_values = tuple(range(r_max + 1))
    d_series, k_series = (CorrelationSeries(r_values, tuple(float(v) for v in est), MONTE_CARLO,
                                            tuple(float(v) for v in err), samples) for est, err in panels)
    return d_series, k_series


def _piecewise_integral(integrand, c2: int) -> float:
    """
    Integral over the unit square of integrand(x1, x2, m), where m is the
    integer part of x1 + c2 x2. Pieces are cut along the break lines
    x1 + c2 x2 = m.
    """
    total = []
    for j in range(c2):
        lo2, hi2 = j / c2, (j + 1) / c2
        for m in range(j, j + 2):
            value, _ = dblquad(lambda x1, x2: integrand(x1, x2, m), lo2, hi2,
                               lambda x2: min(1.0, max(0.0, m - c2 * x2)),
                               lambda x2: min(1.0, max(0.0, m + 1 - c2 * x2)),
                               epsabs=1e-13, epsrel=1e-11)
            total.append(value)
    return math.fsum(total)


def polynomial_one_step_quadrature(r_max: int) -> Tuple[CorrelationSeries, CorrelationSeries]:
    """
    Deterministic D_1(r) and K_1(r) by quadrature over the pieces of the unit
    square where {x_1 + x_2} and {x_1 + 2 x_2} are polynomial.
    """
    d_values, k_values = [], []
    for r in range(r_max + 1):
        cross = _piecewise_integral(lambda x1, x2, m: x1 * x2 ** r * (x1 + x2 - m), 1)
        d_values.append(cross - 0.5 / (r + 1) * 0.5)
        cross = _piecewise_integral(lambda x1, x2, m: x1 * x2 * (x1 + 2 * x2 - m) ** r, 2)
        k_values.append(cross - 0.25 / (r + 1))
    r_values = tuple(range(r_max + 1))
    return (CorrelationSeries(r_values, tuple(d_values), CLOSED_FORM),
            CorrelationSeries(r_values, tuple(k_values), CLOSED_FORM))


def polynomial_d1_closed_form(r: int) -> float:
    """
    D_1(r) = 1/(12(r+1)) - 1/(2(r+2)(r+3)); zero at r = 0 and r = 1.
    """
    return 1.0 / (12.0 * (r + 1)) - 1.0 / (2.0 * (r + 2) * (r + 3))


def smoothness_nu(f: Observable, g: Observable) -> float:
    """
    nu = 2 p N for observables of smoothness order p.
    """
    if f.p is None or g.p is None:
        raise InvalidParameterError('decay bound needs observables with a smoothness order p')
    return 2.0 * min(f.p, g.p) * f.dim


def bound_prefactor(mp_f: float, mp_g: float, p: int, N: int, safety: float = MP_SAFETY) -> float:
    """
    Prefactor of |D_n| <= C exp(-n h nu), with M_p scaled by `safety`.

    N = 2 uses the combined form 72 M_p M_q zeta(2p)^2 / (2 pi)^{8p};
    larger N uses M_p M_q zeta(2p)^N / (2 pi)^{4pN}.
    """
    mf, mg = safety * mp_f, safety * mp_g
    z = float(zeta(2.0 * p))
    if N == 2:
        return 72.0 * mf * mg * z * z / (2.0 * math.pi) ** (8 * p)
    return mf * mg * z ** N / (2.0 * math.pi) ** (4 * p * N)


def term_bounds(mp_f: float, mp_g: float, p: int, safety: float = MP_SAFETY) -> Dict[str, float]:
    """
    Separate N = 2 prefactors of the two resonance families (recorded only).
    """
    mf, mg = safety * mp_f, safety * mp_g
    z = float(zeta(4.0 * p))
    c = 2.0 * mf * mg * z * z / (2.0 * math.pi) ** (8 * p)
    return {'C1': c, 'C2': c}


def noise_floors(series: CorrelationSeries, noise_floor: Optional[float] = None) -> np.ndarray:
    if series.method == MONTE_CARLO and series.stderr is not None:
        sigmas = MC_NOISE_SIGMAS if noise_floor is None else noise_floor
        return sigmas * np.asarray(series.stderr)
    floor = EXACT_NOISE_FLOOR if noise_floor is None else noise_floor
    return np.full(len(series), floor)


def fit_decay(series: CorrelationSeries, spectrum: Spectrum, f: Observable, g: Observable,
              noise_floor: Optional[float] = None) -> DecayFit:
    """
    Fit ln|D_n| against n over the points above the noise floor and check
    each of them against the entropy bound.

    `noise_floor` is an absolute level for exact series and a number of
    standard errors for Monte Carlo series.
    """
    n = np.asarray(series.n_values, dtype=np.float64)
    d = np.abs(np.asarray(series.d_values, dtype=np.float64))
    usable = d > noise_floors(series, noise_floor)
    if usable.sum() < MIN_FIT_POINTS:
        raise TooFewPointsError(f'{int(usable.sum())} points above the noise floor, need {MIN_FIT_POINTS}')
    slope, intercept = np.polyfit(n[usable], np.log(d[usable]), 1)

    nu = smoothness_nu(f, g)
    if f.mp is None or g.mp is None:
        raise InvalidParameterError('decay bound needs observables with a derivative bound Mp')
    bound_rate = spectrum.entropy * nu
    prefactor = bound_prefactor(f.mp, g.mp, min(f.p, g.p), f.dim)
    bound = prefactor * np.exp(-n * bound_rate)
    violations = tuple(int(k) for k in n[usable & (d > bound * (1.0 + 1e-12))])
    if violations:
        logger.warning('correlation exceeds the entropy bound at n = %s', violations)
    return DecayFit(
        fitted_rate=float(-slope),
        fitted_prefactor=float(math.exp(intercept)),
        bound_rate=float(bound_rate),
        bound_prefactor=float(prefactor),
        nu=nu,
        points_used=int(usable.sum()),
        violation=bool(violations),
        violations=violations,
        term_bounds=term_bounds(f.mp, g.mp, min(f.p, g.p)) if f.dim == 2 else {},
    )


def vanishing_bound(f: Observable, g: Observable, h: float) -> int:
    """
    Step after which every exact D_n of two finite trig polynomials is zero:
    ceil(ln(I J N) / h) + 2 with I, J their largest frequency entries.
    """
    spread = max(2, f.max_frequency() * g.max_frequency() * f.dim)
    return math.ceil(math.log(spread) / h) + 2


def vanishing_step(M: IntegerMatrix, f: Observable, g: Observable, max_n: int) -> Optional[int]:
    """
    Smallest n* <= max_n with an empty resonance join for every n in [n*, max_n].
    """
    last_nonzero = -1
    power = matrix_power(M, 0)
    for n in range(max_n + 1):
        if resonance_join(power, f, g):
            last_nonzero = n
        power = power @ M
    return last_nonzero + 1 if last_nonzero < max_n else None
