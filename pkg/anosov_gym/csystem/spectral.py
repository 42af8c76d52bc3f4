"""
Spectrum of the operator T, the C-condition and the Kolmogorov entropy.

Eigenvalues come from an in-repo solver: Parlett-Reinsch balancing,
Householder reduction to Hessenberg form and Francis double-shift QR with
deflation. Only the active unreduced block is updated since Schur vectors
are never needed.
"""

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from anosov_gym.csystem.matrix_core import IntegerMatrix
from anosov_gym.errors import ConvergenceError, InvalidParameterError, NotCSystemError, NumericalDegeneracyError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
MAX_TOL = 1e-4
QR_ITERATIONS_PER_DIM = 100
RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class Spectrum:
    """
    Eigenvalues of T split into contracting (|lambda| < 1) and expanding
    (|lambda| > 1) index sets. Indices within `tol` of the unit circle are
    collected in `on_circle`; a non-empty set means T is not a C-system.
    """
    eigenvalues: Tuple[complex, ...]
    contracting: Tuple[int, ...]
    expanding: Tuple[int, ...]
    on_circle: Tuple[int, ...]
    entropy: float
    tol: float = DEFAULT_TOL

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @property
    def is_c_system(self) -> bool:
        return len(self.on_circle) == 0

    @property
    def log_moduli_sum(self) -> float:
        """
        Sum of ln|lambda_i|, zero when Det T = 1.
        """
        return math.fsum(math.log(abs(lam)) for lam in self.eigenvalues)

    @property
    def lyapunov_max(self) -> float:
        return max(math.log(abs(lam)) for lam in self.eigenvalues)

    @property
    def entropy_per_dimension(self) -> float:
        return self.entropy / self.dim

    def inverse(self) -> 'Spectrum':
        """
        Spectrum of T^{-1}: reciprocal eigenvalues, classified afresh.
        """
        return classify_spectrum([1.0 / lam for lam in self.eigenvalues], self.tol)

    def display(self):
        """
        Display infos about the attributes.
        """
        print('Displaying spectrum:')
        print('Dimension          :', self.dim)
        print('Expanding          :', len(self.expanding))
        print('Contracting        :', len(self.contracting))
        print('On unit circle     :', len(self.on_circle))
        print('C-system           :', self.is_c_system)
        print('Entropy            :', self.entropy)
        print('Entropy / N        :', self.entropy_per_dimension)
        print('Largest exponent   :', self.lyapunov_max)


@dataclass(frozen=True)
class SubspaceSplit:
    """
    Real bases of the expanding and contracting invariant subspaces.
    A complex pair lambda, conj(lambda) contributes the plane (Re v, Im v).
    """
    expanding_basis: Tuple[np.ndarray, ...]
    contracting_basis: Tuple[np.ndarray, ...]
    expanding_eigenvalues: Tuple[complex, ...] = field(default=())
    contracting_eigenvalues: Tuple[complex, ...] = field(default=())
    max_residual: float = 0.0


def balance(a: np.ndarray) -> np.ndarray:
    """
    Parlett-Reinsch balancing with radix 2, so the scaling is exact.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    radix, sqrdx = 2.0, 4.0
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.abs(a[:, i]).sum() - abs(a[i, i])
            r = np.abs(a[i, :]).sum() - abs(a[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                a[i, :] /= f
                a[:, i] *= f
    return a


def _householder(x: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    v, beta such that (I - beta v v^T) x is a multiple of e_1.
    """
    alpha = np.linalg.norm(x)
    if alpha == 0.0:
        return x, 0.0
    v = np.array(x, dtype=np.float64)
    v[0] += math.copysign(alpha, v[0])
    return v, 2.0 / (v @ v)


def hessenberg(a: np.ndarray) -> np.ndarray:
    h = np.array(a, dtype=np.float64)
    n = h.shape[0]
    for k in range(n - 2):
        v, beta = _householder(h[k + 1:, k])
        if beta == 0.0:
            continue
        h[k + 1:, k:] -= beta * np.outer(v, v @ h[k + 1:, k:])
        h[:, k + 1:] -= beta * np.outer(h[:, k + 1:] @ v, v)
        h[k + 2:, k] = 0.0
    return h


def _block_eigenvalues(a: float, b: float, c: float, d: float) -> Tuple[complex, complex]:
    mid = 0.5 * (a + d)
    half = 0.5 * (a - d)
    disc = half * half + b * c
    if disc >= 0.0:
        root = math.sqrt(disc)
        first = mid + math.copysign(root, mid) if mid != 0.0 else root
        det = a * d - b * c
        second = det / first if first != 0.0 else mid - root
        return complex(first), complex(second)
    root = math.sqrt(-disc)
    return complex(mid, root), complex(mid, -root)


def qr_eigenvalues(a: np.ndarray, max_iterations: int = None) -> List[complex]:
    """
    All eigenvalues of a real square matrix by Francis double-shift QR.
    """
    h = hessenberg(balance(a))
    n = h.shape[0]
    if max_iterations is None:
        max_iterations = QR_ITERATIONS_PER_DIM * n
    eps = np.finfo(np.float64).eps
    norm = np.abs(h).sum()
    eigenvalues = [0j] * n
    hi = n - 1
    its = 0
    total = 0
    while hi >= 0:
        l = hi
        while l > 0:
            s = abs(h[l - 1, l - 1]) + abs(h[l, l])
            if s == 0.0:
                s = norm
            if abs(h[l, l - 1]) <= eps * s:
                h[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            eigenvalues[hi] = complex(h[hi, hi])
            hi -= 1
            its = 0
            continue
        if l == hi - 1:
            eigenvalues[hi - 1], eigenvalues[hi] = _block_eigenvalues(
                h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
            hi -= 2
            its = 0
            continue
        if total >= max_iterations:
            raise ConvergenceError(f'QR iteration did not converge after {total} iterations (block {l}..{hi})')
        its += 1
        total += 1
        if its % 10 == 0:
            # exceptional shift
            w = abs(h[hi, hi - 1]) + abs(h[hi - 1, hi - 2])
            s, t = 1.5 * w, w * w
            logger.debug('exceptional shift at block %d..%d', l, hi)
        else:
            s = h[hi - 1, hi - 1] + h[hi, hi]
            t = h[hi - 1, hi - 1] * h[hi, hi] - h[hi - 1, hi] * h[hi, hi - 1]
        x = h[l, l] * h[l, l] + h[l, l + 1] * h[l + 1, l] - s * h[l, l] + t
        y = h[l + 1, l] * (h[l, l] + h[l + 1, l + 1] - s)
        z = h[l + 1, l] * h[l + 2, l + 1]
        for k in range(l, hi - 1):
            v, beta = _householder(np.array([x, y, z]))
            if beta != 0.0:
                q = max(l, k - 1)
                h[k:k + 3, q:hi + 1] -= beta * np.outer(v, v @ h[k:k + 3, q:hi + 1])
                r = min(k + 3, hi)
                h[l:r + 1, k:k + 3] -= beta * np.outer(h[l:r + 1, k:k + 3] @ v, v)
            x = h[k + 1, k]
            y = h[k + 2, k]
            if k < hi - 2:
                z = h[k + 3, k]
        v, beta = _householder(np.array([x, y]))
        if beta != 0.0:
            h[hi - 1:hi + 1, hi - 2:hi + 1] -= beta * np.outer(v, v @ h[hi - 1:hi + 1, hi - 2:hi + 1])
            h[l:hi + 1, hi - 1:hi + 1] -= beta * np.outer(h[l:hi + 1, hi - 1:hi + 1] @ v, v)
    logger.debug('QR converged in %d iterations for n=%d', total, n)
    return eigenvalues


def classify_spectrum(eigenvalues: Sequence[complex], tol: float = DEFAULT_TOL) -> Spectrum:
    # sorted by decreasing modulus, conjugate pairs adjacent
    ordered = sorted((complex(lam) for lam in eigenvalues), key=lambda lam: (-abs(lam), -lam.imag))
    contracting, expanding, on_circle = [], [], []
    for i, lam in enumerate(ordered):
        modulus = abs(lam)
        if abs(modulus - 1.0) <= tol:
            on_circle.append(i)
        elif modulus < 1.0:
            contracting.append(i)
        else:
            expanding.append(i)
    h = math.fsum(math.log(abs(ordered[i])) for i in expanding)
    if on_circle:
        logger.warning('%d eigenvalue(s) within %g of the unit circle: not a C-system', len(on_circle), tol)
    return Spectrum(tuple(ordered), tuple(contracting), tuple(expanding), tuple(on_circle), h, tol)


def compute_spectrum(M: IntegerMatrix, tol: float = DEFAULT_TOL) -> Spectrum:
    if not 0.0 < tol <= MAX_TOL:
        raise InvalidParameterError(f'tol must lie in (0, {MAX_TOL}], got {tol}')
    spectrum = classify_spectrum(qr_eigenvalues(M.to_float_array()), tol)
    logger.info('spectrum of N=%d: %d expanding, %d contracting, h=%.10g',
                M.dim, len(spectrum.expanding), len(spectrum.contracting), spectrum.entropy)
    return spectrum


def entropy(M: IntegerMatrix, tol: float = DEFAULT_TOL) -> float:
    """
    Kolmogorov entropy h(T) = sum of ln|lambda_beta| over the expanding set,
    in nats per iteration.
    """
    spectrum = compute_spectrum(M, tol)
    if not spectrum.is_c_system:
        raise NotCSystemError(f'operator of dimension {M.dim} violates the C-condition')
    return spectrum.entropy


def _inverse_iteration(a: np.ndarray, lam: complex, steps: int = 3) -> np.ndarray:
    n = a.shape[0]
    real = abs(lam.imag) <= 1e-12 * max(1.0, abs(lam))
    dtype = np.float64 if real else np.complex128
    shift = (lam.real if real else lam) * (1.0 + 1e-10) + 1e-12
    b = a.astype(dtype) - shift * np.eye(n, dtype=dtype)
    v = np.linspace(1.0, 2.0, n).astype(dtype)
    for _ in range(steps):
        try:
            v = np.linalg.solve(b, v)
        except np.linalg.LinAlgError:
            b = b - 1e-8 * max(1.0, abs(lam)) * np.eye(n, dtype=dtype)
            v = np.linalg.solve(b, v)
        v = v / np.linalg.norm(v)
    return v


def invariant_subspaces(M: IntegerMatrix, tol: float = DEFAULT_TOL, residual_tol: float = RESIDUAL_TOL) -> SubspaceSplit:
    spectrum = compute_spectrum(M, tol)
    if not spectrum.is_c_system:
        raise NotCSystemError(f'operator of dimension {M.dim} has eigenvalues on the unit circle')
    a = M.to_float_array()
    worst = 0.0
    split = {}
    for name, indices in (('expanding', spectrum.expanding), ('contracting', spectrum.contracting)):
        basis, values = [], []
        for i in indices:
            lam = spectrum.eigenvalues[i]
            if lam.imag < -1e-12 * max(1.0, abs(lam)):
                continue  # conjugate partner already contributed the plane
            v = _inverse_iteration(a, lam)
            residual = np.linalg.norm(a @ v - lam * v) / np.linalg.norm(v)
            worst = max(worst, residual)
            if residual > residual_tol:
                raise NumericalDegeneracyError(
                    f'eigenvector residual {residual:.3e} exceeds {residual_tol:.1e} for lambda={lam}')
            if np.iscomplexobj(v):
                basis.extend([v.real.copy(), v.imag.copy()])
                values.extend([lam, lam.conjugate()])
            else:
                basis.append(v)
                values.append(lam)
        split[name] = (tuple(basis), tuple(values))
    logger.debug('invariant subspaces of N=%d: max residual %.3e', M.dim, worst)
    return SubspaceSplit(split['expanding'][0], split['contracting'][0],
                         split['expanding'][1], split['contracting'][1], worst)


def spectrum_distribution_rows(M: IntegerMatrix, also_inverse: bool = False,
                               tol: float = DEFAULT_TOL) -> Dict[str, List[Tuple[float, float]]]:
    """
    (Re lambda, Im lambda) rows of T and, when flagged, of T^{-1}.
    """
    spectrum = compute_spectrum(M, tol)
    rows = {'T': [(lam.real, lam.imag) for lam in spectrum.eigenvalues]}
    if also_inverse:
        rows['T_inv'] = [(lam.real, lam.imag) for lam in spectrum.inverse().eigenvalues]
    return rows


def rows_to_csv(rows: Sequence[Tuple[float, float]]) -> str:
    buffer = io.StringIO()
    w = csv.writer(buffer, lineterminator='\n')
    w.writerow(['re', 'im'])
    for re, im in rows:
        w.writerow(['{:.17g}'.format(re), '{:.17g}'.format(im)])
    return buffer.getvalue()


def spectrum_distribution_csv(M: IntegerMatrix, also_inverse: bool = False,
                              tol: float = DEFAULT_TOL) -> Dict[str, str]:
    return {name: rows_to_csv(rows) for name, rows in spectrum_distribution_rows(M, also_inverse, tol).items()}
