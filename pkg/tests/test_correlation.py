import math

import numpy as np
import pytest

from anosov_gym.analysis.correlation import CLOSED_FORM, EXACT_RESONANCE, MONTE_CARLO, CorrelationSeries, \
    bound_prefactor, exact_correlation, exact_series, fit_decay, monte_carlo_correlation, monte_carlo_series, \
    one_step_sawtooth_correlator, pair_integral, polynomial_d1_closed_form, polynomial_one_step_quadrature, \
    polynomial_one_step_scan, resonance_join, sin_cos_coefficients, smoothness_nu, term_bounds, vanishing_bound, \
    vanishing_step
from anosov_gym.analysis.observables import COS, SIN, Observable, constant, sawtooth_series, \
    sawtooth_truncation_bound, single_term, smooth_family
from anosov_gym.csystem.matrix_core import build_family_matrix, matrix_power
from anosov_gym.csystem.spectral import compute_spectrum
from anosov_gym.csystem.torus_dynamics import step_words
from anosov_gym.errors import DimensionMismatchError, InvalidParameterError, TooFewPointsError
from anosov_gym.utils.distribution import lattice_words

T2 = build_family_matrix(2)
COS_COS = single_term((1, 0)).multiply(single_term((0, 1)))
MATCHED = single_term((2, 3))
SIN_COS = single_term((1, 0), SIN).multiply(single_term((0, 1)))


@pytest.mark.parametrize('phase_a, phase_b, expected', [
    (COS, COS, {'same': 0.5, 'opposite': 0.5, 'zero': 1.0, 'other': 0.0}),
    (SIN, SIN, {'same': 0.5, 'opposite': -0.5, 'zero': 0.0, 'other': 0.0}),
    (COS, SIN, {'same': 0.0, 'opposite': 0.0, 'zero': 0.0, 'other': 0.0}),
    (SIN, COS, {'same': 0.0, 'opposite': 0.0, 'zero': 0.0, 'other': 0.0}),
])
def test_pair_integrals(phase_a, phase_b, expected):
    k = (2, -1)
    cases = {'same': (k, k), 'opposite': (k, (-2, 1)), 'zero': ((0, 0), (0, 0)), 'other': (k, (1, 1))}
    for relation, (ka, kb) in cases.items():
        assert pair_integral(phase_a, ka, phase_b, kb) == expected[relation]
    with pytest.raises(DimensionMismatchError):
        pair_integral(COS, (1,), COS, (1, 0))


def test_disjoint_frequencies_do_not_correlate():
    assert resonance_join(T2, COS_COS, COS_COS) == []
    assert exact_correlation(T2, COS_COS, COS_COS, 1) == 0.0


def test_matched_frequency_gives_a_quarter():
    assert abs(exact_correlation(T2, MATCHED, COS_COS, 1) - 0.25) <= 1e-15
    [(freq, phase, contribution)] = resonance_join(T2, MATCHED, COS_COS)
    assert freq == (2, 3) and phase == COS and contribution == 0.25


def test_zero_step_is_the_variance():
    f = smooth_family(1, 3, 2)
    assert exact_correlation(T2, f, f, 0) == pytest.approx(f.variance(), rel=1e-12)
    assert exact_correlation(T2, constant(2, 2.0), COS_COS, 1) == 0.0
    with pytest.raises(InvalidParameterError):
        exact_correlation(T2, f, f, -1)
    with pytest.raises(DimensionMismatchError):
        exact_correlation(build_family_matrix(3), f, f, 1)


def test_exact_series_matches_single_steps():
    f = smooth_family(1, 4, 2)
    g = f.add(single_term((2, 3), SIN, 0.5))
    series = exact_series(T2, f, g, [3, 0, 1, 2, 5])
    assert series.n_values == (0, 1, 2, 3, 5)
    assert series.method == EXACT_RESONANCE
    for n, d in zip(series.n_values, series.d_values):
        assert d == exact_correlation(T2, f, g, n)
    assert exact_series(T2, f, g, [1, 2], workers=2).d_values == series.d_values[1:3]


def test_finite_support_vanishes():
    f = smooth_family(1, 4, 2)
    h = compute_spectrum(T2).entropy
    bound = vanishing_bound(f, f, h)
    assert bound == math.ceil(math.log(32) / h) + 2
    n_star = vanishing_step(T2, f, f, 20)
    assert n_star is not None and n_star <= bound
    for n in range(n_star, 21):
        assert resonance_join(matrix_power(T2, n), f, f) == []
        assert exact_correlation(T2, f, f, n) == 0.0
    assert exact_correlation(T2, f, f, n_star - 1) > 0.0


def test_entropy_bound_holds_for_smooth_family():
    f = smooth_family(1, 4, 2)
    spectrum = compute_spectrum(T2)
    fit = fit_decay(exact_series(T2, f, f, range(0, 12)), spectrum, f, f)
    assert not fit.violation
    assert fit.points_used >= 3
    assert fit.nu == 4.0
    assert fit.bound_rate == pytest.approx(4 * math.log((3 + math.sqrt(5)) / 2), rel=1e-12)
    assert fit.bound_prefactor == bound_prefactor(f.mp, f.mp, 1, 2)
    assert set(fit.term_bounds) == {'C1', 'C2'}
    assert fit.to_dict()['violations'] == []


def test_too_few_points():
    f = smooth_family(1, 1, 2)
    with pytest.raises(TooFewPointsError):
        fit_decay(exact_series(T2, f, f, range(0, 8)), compute_spectrum(T2), f, f)


def test_synthetic_exponential_fit():
    f = smooth_family(1, 2, 2)
    n = tuple(range(10))
    series = CorrelationSeries(n, tuple(math.exp(-2.0 * k) for k in n), EXACT_RESONANCE)
    fit = fit_decay(series, compute_spectrum(T2), f, f)
    assert fit.fitted_rate == pytest.approx(2.0, abs=1e-9)
    assert fit.fitted_prefactor == pytest.approx(1.0, rel=1e-9)
    with pytest.raises(InvalidParameterError):
        fit_decay(series, compute_spectrum(T2), single_term((1, 1)), f)


def test_bound_constants():
    assert smoothness_nu(smooth_family(2, 1, 3), smooth_family(1, 1, 3)) == 6.0
    c = bound_prefactor(1.0, 1.0, 1, 2, safety=1.0)
    assert c == pytest.approx(72 * (math.pi ** 2 / 6) ** 2 / (2 * math.pi) ** 8, rel=1e-12)
    assert bound_prefactor(1.0, 1.0, 1, 3, safety=1.0) == pytest.approx((math.pi ** 2 / 6) ** 3 / (2 * math.pi) ** 12)
    bounds = term_bounds(1.0, 1.0, 1, safety=1.0)
    assert bounds['C1'] == bounds['C2'] == pytest.approx(2 * (math.pi ** 4 / 90) ** 2 / (2 * math.pi) ** 8)


def test_series_validation_and_rows():
    with pytest.raises(InvalidParameterError):
        CorrelationSeries((0,), (1.0,), 'guess')
    with pytest.raises(InvalidParameterError):
        CorrelationSeries((0,), (1.0,), EXACT_RESONANCE, stderr=(0.1,))
    with pytest.raises(DimensionMismatchError):
        CorrelationSeries((0, 1), (1.0,), EXACT_RESONANCE)
    rows = CorrelationSeries((1,), (0.25,), MONTE_CARLO, (0.01,), 1000).csv_rows()
    assert rows == [['n', 'd_n', 'stderr', 'method', 'samples'], [1, '0.25', '0.01', MONTE_CARLO, 1000]]


def test_constant_observable_does_not_correlate():
    estimate, stderr = monte_carlo_correlation(T2, constant(2, 3.0), COS_COS, 1, 10 ** 4, seed=1)
    assert abs(estimate) <= 1e-12
    assert stderr <= 1e-12


def test_monte_carlo_matches_quarter():
    estimate, stderr = monte_carlo_correlation(T2, MATCHED, COS_COS, 1, 10 ** 6, seed=2025)
    assert stderr > 0.0
    assert abs(estimate - 0.25) <= 3 * stderr


def test_monte_carlo_stderr_scaling():
    _, e1 = monte_carlo_correlation(T2, MATCHED, COS_COS, 1, 2 * 10 ** 5, seed=7)
    _, e2 = monte_carlo_correlation(T2, MATCHED, COS_COS, 1, 4 * 10 ** 5, seed=7)
    assert e2 / e1 == pytest.approx(1 / math.sqrt(2), rel=0.15)
    with pytest.raises(InvalidParameterError):
        monte_carlo_correlation(T2, MATCHED, COS_COS, 1, 999, seed=7)


def test_monte_carlo_is_independent_of_workers():
    f = smooth_family(1, 2, 2)
    one = monte_carlo_series(T2, f, f, [0, 1, 2], 10 ** 5, seed=3, workers=1)
    two = monte_carlo_series(T2, f, f, [0, 1, 2], 10 ** 5, seed=3, workers=2)
    assert one == two
    assert one.sample_count == 10 ** 5 and one.method == MONTE_CARLO


def test_lebesgue_measure_is_invariant():
    f = smooth_family(1, 3, 2).add(single_term((1, 2), SIN)).add(constant(2, 0.5))
    words = lattice_words(17, 0, 10 ** 6, 2)
    for n in (1, 3):
        values = f.evaluate_words(step_words(T2, n, words))
        stderr = values.std(ddof=1) / math.sqrt(len(values))
        assert abs(values.mean() - f.mean) <= 4 * stderr


def _random_observable(rng, dim, count):
    terms = []
    for _ in range(count):
        freq = rng.integers(-2, 3, size=dim)
        terms.append((freq, COS if rng.random() < 0.5 else SIN, float(rng.uniform(-1, 1))))
    return Observable.build(dim, terms, float(rng.uniform(-1, 1)))


@pytest.mark.slow
def test_exact_and_monte_carlo_agree_on_random_pairs():
    rng = np.random.default_rng(20)
    agree = 0
    for case in range(20):
        dim = int(rng.integers(2, 4))
        n = int(rng.integers(1, 4))
        f, g = _random_observable(rng, dim, 3), _random_observable(rng, dim, 3)
        M = build_family_matrix(dim)
        exact = exact_correlation(M, f, g, n)
        estimate, stderr = monte_carlo_correlation(M, f, g, n, 10 ** 6, seed=1000 + case)
        agree += abs(estimate - exact) <= 3 * stderr + 1e-15
    assert agree >= 19


def test_sawtooth_closed_form():
    assert abs(one_step_sawtooth_correlator(SIN_COS) + 1 / (4 * math.pi)) <= 1e-15
    assert sin_cos_coefficients(SIN_COS) == {(1, 1): 1.0}
    off_diagonal = single_term((1, 0), SIN).multiply(single_term((0, 2)))
    assert one_step_sawtooth_correlator(off_diagonal) == 0.0
    with pytest.raises(InvalidParameterError):
        one_step_sawtooth_correlator(COS_COS)
    with pytest.raises(DimensionMismatchError):
        one_step_sawtooth_correlator(single_term((1, 0, 0), SIN))


def test_sawtooth_closed_form_matches_resonance_engine():
    g = sawtooth_series(0, 512)
    assert abs(exact_correlation(T2, SIN_COS, g, 1) - one_step_sawtooth_correlator(SIN_COS)) <= 1e-15


@pytest.mark.slow
def test_sawtooth_closed_form_matches_monte_carlo():
    g = sawtooth_series(0, 512)
    estimate, stderr = monte_carlo_correlation(T2, SIN_COS, g, 1, 2 * 10 ** 5, seed=11)
    assert abs(estimate - one_step_sawtooth_correlator(SIN_COS)) <= 3 * stderr + sawtooth_truncation_bound(512)


def test_polynomial_quadrature_matches_closed_form():
    d_series, k_series = polynomial_one_step_quadrature(12)
    assert d_series.method == k_series.method == CLOSED_FORM
    for r, d, k in zip(d_series.n_values, d_series.d_values, k_series.d_values):
        assert abs(d - polynomial_d1_closed_form(r)) <= 1e-9
        assert abs(d) <= 0.25 / (r + 1)
        assert abs(k) <= 0.75 / (r + 1)
    assert polynomial_d1_closed_form(0) == 0.0
    assert abs(polynomial_d1_closed_form(1)) <= 1e-17


def test_polynomial_correlator_decays():
    values = [abs(polynomial_d1_closed_form(r)) for r in range(65)]
    peak = max(values)
    assert values.index(peak) in (5, 6)
    assert np.mean(values[60:65]) <= peak / 3
    assert all(a >= b for a, b in zip(values[6:], values[7:]))


def test_polynomial_scan_matches_quadrature():
    d_mc, k_mc = polynomial_one_step_scan(12, 10 ** 5, seed=5)
    d_q, k_q = polynomial_one_step_quadrature(12)
    assert d_mc.n_values == tuple(range(13))
    for mc, q in ((d_mc, d_q), (k_mc, k_q)):
        for est, err, exact in zip(mc.d_values, mc.stderr, q.d_values):
            assert abs(est - exact) <= 4 * err + 1e-12
    with pytest.raises(InvalidParameterError):
        polynomial_one_step_scan(-1, 10 ** 5, seed=5)


@pytest.mark.slow
def test_polynomial_scan_decays_past_its_peak():
    d_mc, k_mc = polynomial_one_step_scan(64, 10 ** 6, seed=2024)
    for series in (d_mc, k_mc):
        values = np.abs(np.asarray(series.d_values))
        peak = values.max()
        assert 3 <= int(values.argmax()) <= 10
        assert values[60:65].mean() <= peak / 3
