import numpy as np
import pytest

from anosov_gym.csystem.matrix_core import MERSENNE_61, build_family_matrix, identity
from anosov_gym.errors import InvalidDimensionError, InvalidParameterError
from anosov_gym.rng.mixmax import STREAM_SPACING, GeneratorState, MixmaxGenerator, _family_matvec, jump_ahead, \
    mersenne_reduce, next_vector, seed, self_test, splitmix_words, stream_jump_matrix, to_unit_interval, transition


def family_state(N, values):
    return GeneratorState(N, tuple(values), build_family_matrix(N).reduce(MERSENNE_61))


def test_unit_vector_images():
    s, out = next_vector(family_state(2, (1, 0)))
    assert s.state == (1, 1)
    assert out == (to_unit_interval(1), to_unit_interval(1))
    assert next_vector(family_state(2, (1, 1)))[0].state == (2, 3)


@pytest.mark.parametrize('k', [1, 7, 1000])
def test_jump_matches_sequential_steps(k):
    s = seed(8, 42)
    t = s
    for _ in range(k):
        t, _ = next_vector(t)
    assert jump_ahead(s, k).state == t.state
    assert jump_ahead(s, 0) is s


def test_jump_semigroup():
    rng = np.random.default_rng(3)
    s = seed(5, 9)
    for _ in range(5):
        a, b = (int(x) for x in rng.integers(0, 10 ** 6, size=2))
        assert jump_ahead(jump_ahead(s, a), b).state == jump_ahead(s, a + b).state
    with pytest.raises(InvalidParameterError):
        jump_ahead(s, -1)


@pytest.mark.parametrize('N, count', [(2, 100), (3, 100), (8, 10 ** 4), (17, 100)])
def test_fast_transition_matches_reference(N, count):
    rng = np.random.default_rng(N)
    T = build_family_matrix(N)
    for _ in range(count):
        v = tuple(int(x) for x in rng.integers(0, MERSENNE_61, size=N, dtype=np.int64))
        assert _family_matvec(v) == T.apply(v, MERSENNE_61)


def test_general_matrix_path_matches_family():
    s = seed(6, 5)
    general = GeneratorState(6, s.state, s.matrix, family=False)
    assert transition(general) == transition(s)


def test_mersenne_reduction():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        x = int(rng.integers(0, 1 << 62)) * int(rng.integers(0, 1 << 62)) + int(rng.integers(0, 1 << 40))
        assert mersenne_reduce(x) == x % MERSENNE_61
    assert mersenne_reduce(MERSENNE_61) == 0
    assert mersenne_reduce(2 * MERSENNE_61) == 0


def test_seeding_is_deterministic():
    assert seed(10, 123).state == seed(10, 123).state
    for value in range(100):
        assert seed(4, value).state != seed(4, value + 1000).state
    with pytest.raises(InvalidDimensionError):
        seed(1, 0)


def test_all_zero_draw_is_hashed_again():
    def zero_first(seed_value, count, rehash):
        if rehash == 0:
            return [MERSENNE_61 * (i + 1) for i in range(count)]
        return splitmix_words(seed_value, count, rehash)

    s = seed(3, 77, hasher=zero_first)
    assert any(s.state)
    assert s.state == tuple(w % MERSENNE_61 for w in splitmix_words(77, 3, 1))
    with pytest.raises(InvalidParameterError):
        family_state(3, (0, 0, 0))


def test_outputs_in_unit_interval():
    assert to_unit_interval(0) == 0.0
    assert to_unit_interval(MERSENNE_61 - 1) < 1.0
    values = MixmaxGenerator(16, 1).random(10 ** 4)
    assert values.min() >= 0.0 and values.max() < 1.0


def test_stream_replay_and_reads():
    a = MixmaxGenerator(8, 2024)
    b = MixmaxGenerator(8, 2024)
    assert np.array_equal(a.random(1000), b.random(1000))
    c = MixmaxGenerator(8, 2024)
    assert c.raw_words(3) + c.raw_words(13) == MixmaxGenerator(8, 2024).raw_words(16)
    s = seed(8, 2024)
    first, _ = next_vector(s)
    second, _ = next_vector(first)
    assert MixmaxGenerator(8, 2024).raw_words(16) == list(first.state + second.state)


def test_streams_are_jumps():
    g = MixmaxGenerator(4, 5)
    assert g.spawn_stream(2).state.state == jump_ahead(seed(4, 5), 2 * STREAM_SPACING).state
    assert MixmaxGenerator(4, 5, stream=1).raw_words(8) != MixmaxGenerator(4, 5).raw_words(8)


def test_stream_jump_matrix_is_reused():
    stream_jump_matrix.cache_clear()
    first = MixmaxGenerator(6, 9, stream=3)
    second = MixmaxGenerator(6, 9).spawn_stream(3)
    info = stream_jump_matrix.cache_info()
    assert info.misses == 1 and info.hits == 1
    assert first.state == second.state
    assert first.state.state == jump_ahead(seed(6, 9), 3 * STREAM_SPACING).state
    with pytest.raises(InvalidParameterError):
        MixmaxGenerator(6, 9, stream=-1)


@pytest.mark.slow
def test_self_test_passes_for_family_generator():
    report = self_test(256, 31415, 10 ** 6)
    assert 0.001 <= report.chi2_pvalue <= 0.999
    assert abs(report.serial_r) <= 4 / 1000
    assert report.passed
    assert report.to_dict()['passed']


def test_identity_generator_fails_serial_test():
    report = self_test(2, 8, 10 ** 5, matrix=identity(2))
    assert report.serial_r == pytest.approx(-1.0, abs=1e-9)
    assert not report.serial_passed
    assert not report.passed
    with pytest.raises(InvalidParameterError):
        self_test(4, 8, 10 ** 4)
