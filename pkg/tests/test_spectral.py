import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import direct_dft, direct_dft_matrix, direct_ncc
from tildeq import spectral

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_dft_examples():
    np.testing.assert_allclose(spectral.dft([1, 1, 1, 1]), [4, 0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(spectral.dft([1, 0, -1, 0]), [0, 2, 0, 2], atol=1e-12)
    np.testing.assert_allclose(spectral.dft([1, 0, 0, 0]), [1, 1, 1, 1], atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 7, 8, 12, 17, 24, 40])
def test_fft_matches_direct_sum_small(n):
    x = np.random.default_rng(n).normal(size=n)
    assert np.max(np.abs(spectral.fft(x) - direct_dft(x))) < 1e-9


def test_fft_matches_direct_sum_up_to_512():
    rng = np.random.default_rng(0)
    for n in list(range(1, 65)) + [96, 100, 127, 128, 200, 255, 256, 333, 500, 511, 512]:
        x = rng.normal(size=n)
        assert np.max(np.abs(spectral.fft(x) - direct_dft_matrix(x))) < 1e-9, n


def test_fft_batched_rows_and_inverse():
    x = np.random.default_rng(3).normal(size=(4, 20))
    X = spectral.fft(x)
    for row, spec in zip(x, X):
        np.testing.assert_allclose(spec, direct_dft(row), atol=1e-9)
    np.testing.assert_allclose(spectral.ifft(X).real, x, atol=1e-12)


@given(arrays(np.float64, st.integers(2, 64), elements=finite))
def test_conjugate_symmetry_and_parseval(x):
    X = spectral.fft(x)
    n = x.size
    np.testing.assert_allclose(X[1:], np.conj(X[1:][::-1]), atol=1e-9)
    energy = np.sum(x ** 2)
    assert np.sum(np.abs(X) ** 2) / n == pytest.approx(energy, rel=1e-6, abs=1e-9)


def test_dominant_pure_sinusoid():
    t = np.arange(16)
    spec = spectral.fft(np.sin(2 * np.pi * 3 * t / 16))
    assert spectral.dominant_frequencies(spec, 1) == [3, 13]


def test_dominant_constant_is_dc_only():
    assert spectral.dominant_frequencies(spectral.fft(np.full(10, 2.0)), 1) == [0]


def test_dominant_picks_larger_sinusoid():
    t = np.arange(32)
    x = 2 * np.cos(2 * np.pi * 5 * t / 32) + np.cos(2 * np.pi * 2 * t / 32)
    mags = np.abs(direct_dft(x))
    assert mags[5] > mags[2]
    assert spectral.dominant_frequencies(spectral.fft(x), 1) == [5, 27]
    assert spectral.dominant_frequencies(spectral.fft(x), 2) == [2, 5, 27, 30]


def test_dominant_ties_go_to_lower_index():
    t = np.arange(16)
    x = np.cos(2 * np.pi * 2 * t / 16) + np.cos(2 * np.pi * 6 * t / 16)
    assert spectral.dominant_frequencies(spectral.fft(x), 1) == [2, 14]


def test_dominant_count_bounds():
    spec = spectral.fft(np.arange(8.0))
    with pytest.raises(ValueError):
        spectral.dominant_mask(spec, 0)
    # more than the distinct frequencies marks everything
    assert spectral.dominant_mask(spec, 8).all()


def test_default_dominant_count():
    assert spectral.default_dominant_count(8) == 1
    assert spectral.default_dominant_count(24) == 1
    assert spectral.default_dominant_count(25) == 2
    assert spectral.default_dominant_count(40) == 2


def test_ncc_lag_convention():
    r = spectral.normalized_cross_correlation([1, 0, 0, 0], [0, 1, 0, 0])
    np.testing.assert_allclose(r, [0, 1, 0, 0], atol=1e-12)


@settings(max_examples=200)
@given(st.integers(2, 48).flatmap(lambda n: st.tuples(
    arrays(np.float64, n, elements=finite), arrays(np.float64, n, elements=finite))))
def test_ncc_matches_direct_oracle(pair):
    a, b = pair
    if np.linalg.norm(a) < 1e-3 or np.linalg.norm(b) < 1e-3:
        return
    r = spectral.normalized_cross_correlation(a, b)
    assert np.max(np.abs(r - direct_ncc(a, b))) < 1e-9
    assert np.all(np.abs(r) <= 1 + 1e-9)


def test_ncc_self_and_scaling():
    y = np.random.default_rng(5).normal(size=30)
    r = spectral.normalized_cross_correlation(y, y)
    assert r[0] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(spectral.normalized_cross_correlation(y, 3.7 * y), r, atol=1e-12)


@given(arrays(np.float64, 24, elements=finite), st.integers(0, 23))
def test_ncc_circular_shift(y, s):
    if np.linalg.norm(y) < 1e-3:
        return
    base = spectral.normalized_cross_correlation(y, y)
    shifted = spectral.normalized_cross_correlation(y, np.roll(y, s))
    lags = np.arange(24)
    np.testing.assert_allclose(shifted, base[(lags - s) % 24], atol=1e-9)


def test_ncc_zero_norm_handling():
    with pytest.raises(ValueError, match="zero norm"):
        spectral.normalized_cross_correlation(np.zeros(4), np.zeros(4))
    np.testing.assert_array_equal(
        spectral.normalized_cross_correlation([1, 2, 3, 4], np.zeros(4)), np.zeros(4))


def test_ncc_centered_variant():
    a = np.array([1.0, 2.0, 3.0, 5.0])
    b = a + 10.0
    np.testing.assert_allclose(spectral.normalized_cross_correlation(a, b, center=True),
                               spectral.normalized_cross_correlation(a, a, center=True), atol=1e-12)
