"""
Helpful functions when dealing with distributions: counter-based uniform
sampling on the fixed-point lattice and goodness-of-fit statistics.
"""

import math

import numpy as np
from scipy.stats import chi2, chisquare, norm

MC_CHUNK = 2 ** 15


def chunk_sizes(samples, chunk=MC_CHUNK):
    """
    Split `samples` into (chunk_index, size) pieces of at most `chunk`.
    """
    pieces = []
    index = 0
    while samples > 0:
        size = min(chunk, samples)
        pieces.append((index, size))
        samples -= size
        index += 1
    return pieces


def lattice_words(seed, chunk_index, size, dim):
    """
    `size` uniform points on the 2^64 lattice of the N-torus, as uint64 words.

    Philox is keyed by the seed and its counter starts at the chunk index in
    the high word, so chunks are disjoint streams and any chunk can be
    regenerated on its own.
    """
    bit_generator = np.random.Philox(key=seed % (1 << 64), counter=chunk_index << 192)
    return bit_generator.random_raw(size * dim).reshape(size, dim)


def normalized_chisquare(x, y):
    """Normalize frequency sums to avoid errors."""
    return chisquare(x, np.sum(x) * y / np.sum(y))


def chisquare_uniform(values, bins=256):
    """
    Chi-square statistic and p-value of `values` against U[0, 1) on `bins` bins.
    """
    observed, _ = np.histogram(values, bins=bins, range=(0.0, 1.0))
    expected = np.full(bins, len(values) / bins)
    statistic, p_value = normalized_chisquare(observed, expected)
    return float(statistic), float(p_value)


def serial_correlation(values, lag=1):
    """
    Lag-`lag` sample correlation, its z-score r*sqrt(n) and two-sided p-value.
    """
    values = np.asarray(values, dtype=np.float64)
    a, b = values[:-lag], values[lag:]
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(a @ a) * float(b @ b))
    r = float(a @ b) / denom if denom > 0.0 else 1.0
    z = r * math.sqrt(len(a))
    return r, z, float(2.0 * norm.sf(abs(z)))


def coordinate_mean_test(vectors):
    """
    z-score of each coordinate mean against 1/2 for rows uniform on [0,1)^N,
    with the chi-square(N) p-value of their sum of squares.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    count, dim = vectors.shape
    z = (vectors.mean(axis=0) - 0.5) / math.sqrt(1.0 / (12.0 * count))
    return z, float(chi2.sf(float(z @ z), dim))
