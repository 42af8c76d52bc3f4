import math

import numpy as np
import pytest

from anosov_gym.csystem.matrix_core import IntegerMatrix, build_family_matrix, identity
from anosov_gym.csystem.spectral import balance, classify_spectrum, compute_spectrum, entropy, hessenberg, \
    invariant_subspaces, qr_eigenvalues, rows_to_csv, spectrum_distribution_csv, spectrum_distribution_rows
from anosov_gym.errors import InvalidParameterError, NotCSystemError

GOLDEN_SQUARED = (3 + math.sqrt(5)) / 2


def sorted_eigs(values):
    return sorted(values, key=lambda lam: (round(lam.real, 6), round(lam.imag, 6)))


def test_two_dimensional_spectrum():
    spectrum = compute_spectrum(build_family_matrix(2))
    assert spectrum.is_c_system
    big, small = spectrum.eigenvalues
    assert big.real == pytest.approx(GOLDEN_SQUARED, abs=1e-12)
    assert small.real == pytest.approx((3 - math.sqrt(5)) / 2, abs=1e-12)
    assert spectrum.expanding == (0,) and spectrum.contracting == (1,)
    assert spectrum.entropy == pytest.approx(0.9624236501192069, abs=1e-12)
    assert entropy(build_family_matrix(2)) == pytest.approx(math.log(GOLDEN_SQUARED), abs=1e-12)


def test_three_dimensional_spectrum():
    spectrum = compute_spectrum(build_family_matrix(3))
    assert len(spectrum.expanding) == 1
    assert abs(spectrum.eigenvalues[spectrum.expanding[0]]) == pytest.approx(4.0796, abs=5e-4)
    assert spectrum.entropy == pytest.approx(spectrum.lyapunov_max)


@pytest.mark.parametrize('N', [4, 10, 16, 32])
def test_unit_determinant_in_log_moduli(N):
    spectrum = compute_spectrum(build_family_matrix(N))
    assert spectrum.is_c_system
    assert spectrum.log_moduli_sum == pytest.approx(0.0, abs=1e-8)
    assert abs(np.prod(spectrum.eigenvalues) - 1) <= 1e-8 * N


@pytest.mark.parametrize('N', [5, 12, 30])
def test_qr_matches_reference_on_random_matrices(N):
    rng = np.random.default_rng(N)
    a = rng.normal(size=(N, N))
    ours = sorted_eigs(qr_eigenvalues(a))
    reference = sorted_eigs(list(np.linalg.eigvals(a)))
    assert np.allclose(ours, reference, atol=1e-8)


def test_hessenberg_preserves_spectrum_and_shape():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(7, 7))
    h = hessenberg(balance(a))
    assert np.allclose(np.tril(h, -2), 0.0)
    assert np.allclose(sorted_eigs(list(np.linalg.eigvals(h))), sorted_eigs(list(np.linalg.eigvals(a))))


@pytest.mark.slow
def test_entropy_per_dimension_grows_near_two_over_pi():
    ratios = [compute_spectrum(build_family_matrix(N)).entropy_per_dimension for N in (64, 128, 256)]
    for r in ratios:
        assert 0.62 <= r <= 0.65
        assert abs(r - 2 / math.pi) <= 0.01
    assert ratios[0] < ratios[1] < ratios[2]


def test_identity_is_not_a_c_system():
    spectrum = compute_spectrum(identity(3))
    assert not spectrum.is_c_system
    assert len(spectrum.on_circle) == 3
    with pytest.raises(NotCSystemError):
        entropy(identity(3))
    with pytest.raises(NotCSystemError):
        invariant_subspaces(IntegerMatrix.from_rows([[0, -1], [1, 0]]))


def test_tolerance_is_validated():
    with pytest.raises(InvalidParameterError):
        compute_spectrum(build_family_matrix(2), tol=0.0)
    with pytest.raises(InvalidParameterError):
        compute_spectrum(build_family_matrix(2), tol=0.5)


def test_classify_dead_band():
    spectrum = classify_spectrum([2.0, 0.5, 1.0 + 1e-12], tol=1e-9)
    assert spectrum.on_circle == (1,)
    assert spectrum.entropy == pytest.approx(math.log(2.0))


def test_inverse_spectrum_swaps_sets():
    spectrum = compute_spectrum(build_family_matrix(5))
    inverse = spectrum.inverse()
    assert len(inverse.expanding) == len(spectrum.contracting)
    assert inverse.entropy == pytest.approx(spectrum.entropy, rel=1e-9)


@pytest.mark.parametrize('N', [2, 3, 6])
def test_invariant_subspaces(N):
    T = build_family_matrix(N)
    a = T.to_float_array()
    split = invariant_subspaces(T)
    spectrum = compute_spectrum(T)
    assert len(split.expanding_basis) == len(spectrum.expanding)
    assert len(split.contracting_basis) == len(spectrum.contracting)
    assert split.max_residual < 1e-6
    for lam, v in zip(split.expanding_eigenvalues, split.expanding_basis):
        if lam.imag == 0:
            assert np.allclose(a @ v, lam.real * v, atol=1e-6 * abs(lam))
    basis = np.array(split.expanding_basis + split.contracting_basis)
    assert np.linalg.matrix_rank(basis) == N


def test_distribution_rows_and_csv():
    rows = spectrum_distribution_rows(build_family_matrix(4), also_inverse=True)
    assert set(rows) == {'T', 'T_inv'}
    assert len(rows['T']) == len(rows['T_inv']) == 4
    moduli = sorted(math.hypot(*r) for r in rows['T'])
    inverse_moduli = sorted(1 / math.hypot(*r) for r in rows['T_inv'])
    assert np.allclose(moduli, inverse_moduli)
    text = rows_to_csv(rows['T'])
    assert text.splitlines()[0] == 're,im'
    assert len(text.splitlines()) == 5
    assert set(spectrum_distribution_csv(build_family_matrix(2))) == {'T'}
